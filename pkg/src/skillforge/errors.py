"""Exception hierarchy.

Every error carries ``name`` (a stable kebab-case identifier printed by the
CLI) and ``module`` (the subsystem that raised it).
"""


class SkillforgeError(Exception):
    name = "skillforge-error"
    module = "skillforge"


class InvalidArgument(SkillforgeError, ValueError):
    name = "invalid-argument"

    def __init__(self, message, module="skillforge"):
        super().__init__(message)
        self.module = module


class InvalidTrajectory(SkillforgeError, ValueError):
    name = "invalid-trajectory"
    module = "trajectory"

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class FormatError(SkillforgeError, ValueError):
    name = "format-error"
    module = "cli_io"

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class NotPositiveDefinite(SkillforgeError, ArithmeticError):
    name = "not-positive-definite"
    module = "numsolve"

    def __init__(self, pivot):
        super().__init__(f"matrix is not positive definite (pivot {pivot})")
        self.pivot = pivot


class DegenerateConstraints(SkillforgeError, ArithmeticError):
    name = "degenerate-constraints"
    module = "numsolve"

    def __init__(self, rows):
        super().__init__(f"constraint rows {list(rows)} are linearly dependent")
        self.rows = list(rows)


class IllPosedEnergy(SkillforgeError, ValueError):
    name = "ill-posed-energy"
    module = "elastic_map"


class IllPosedFit(SkillforgeError, ArithmeticError):
    name = "ill-posed-fit"
    module = "elastic_map"


class InvalidConstraints(SkillforgeError, ValueError):
    name = "invalid-constraints"
    module = "constrained_repro"


class TrustRegionTooWeak(SkillforgeError, ValueError):
    name = "trust-region-too-weak"
    module = "failure_aware"

    def __init__(self, rho, min_rho):
        super().__init__(f"rho={rho!r} too small; need rho > {min_rho!r}")
        self.rho = rho
        self.min_rho = min_rho


class OutOfRegion(SkillforgeError, ValueError):
    name = "out-of-region"
    module = "framework"

    def __init__(self, point, nearest):
        super().__init__(f"point {list(point)} lies outside the region grid")
        self.point = point
        self.nearest = nearest
