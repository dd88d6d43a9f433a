"""Synthetic demonstrations and perturbation pairs.

Skill families: ``line``, ``sine``, ``arc``, ``l_shape`` and ``pushing``. The
pushing family moves from (0, 0) to (1, 0) past an obstacle at
``PUSH_OBSTACLE``; successes bulge around it and failures go through it.

Perturbation families for metric bias studies: ``translation``,
``rotation``, ``scaling``, ``noise``, ``time_warp`` and ``occlusion``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InvalidArgument
from .fileio import atomic_write, dumps, manifest_dict, trajectory_to_csv
from .trajectory import FAILURE, SUCCESS, Trajectory

SKILLS = ("line", "sine", "arc", "l_shape", "pushing")
PERTURBATIONS = ("translation", "rotation", "scaling", "noise", "time_warp", "occlusion")
PUSH_OBSTACLE = np.array([0.5, 0.0])
DEFAULT_MAGNITUDES = {
    "translation": 0.2, "rotation": 0.5, "scaling": 0.3,
    "noise": 0.01, "time_warp": 0.5, "occlusion": 0.2,
}


def skill(family: str, n: int = 100, rng=None, noise: float = 0.0, variant: str = SUCCESS):
    """One 2-D demonstration of ``family`` with ``n`` samples on ``[0, 1]``."""
    rng = np.random.default_rng(0) if rng is None else rng
    s = np.linspace(0.0, 1.0, n)
    if family == "line":
        pts = np.c_[s, 0.5 * s]
    elif family == "sine":
        pts = np.c_[s, 0.25 * np.sin(2 * np.pi * s)]
    elif family == "arc":
        th = np.pi * (1 - s)
        pts = np.c_[0.5 + 0.5 * np.cos(th), 0.5 * np.sin(th)]
    elif family == "l_shape":
        pts = np.where(s[:, None] < 0.5, np.c_[2 * s, 0 * s], np.c_[1 + 0 * s, 2 * s - 1])
    elif family == "pushing":
        if variant == SUCCESS:
            amp = rng.uniform(0.25, 0.35)
        else:
            amp = rng.uniform(-0.03, 0.03)
        pts = np.c_[s, amp * np.sin(np.pi * s)]
    else:
        raise InvalidArgument(f"unknown skill family {family!r}", module="cli_io")
    if noise:
        inner = np.zeros_like(pts)
        inner[1:-1] = rng.normal(scale=noise, size=(n - 2, 2))
        pts = pts + inner
    return Trajectory(pts, s)


def _rotate(pts, angle):
    c, s = np.cos(angle), np.sin(angle)
    center = pts.mean(axis=0)
    return (pts - center) @ np.array([[c, s], [-s, c]]) + center


def perturb(traj: Trajectory, family: str, magnitude: float, rng) -> Trajectory:
    """Apply one perturbation of the given family and size."""
    P = traj.points
    n = len(traj)
    if family == "translation":
        ang = rng.uniform(0, 2 * np.pi)
        return Trajectory(P + magnitude * np.array([np.cos(ang), np.sin(ang)]), traj.times)
    if family == "rotation":
        return Trajectory(_rotate(P, magnitude * rng.choice([-1.0, 1.0])), traj.times)
    if family == "scaling":
        center = P.mean(axis=0)
        return Trajectory((P - center) * (1.0 + magnitude) + center, traj.times)
    if family == "noise":
        return Trajectory(P + rng.normal(scale=magnitude, size=P.shape), traj.times)
    if family == "time_warp":
        # same path, traversed with a non-uniform speed profile
        u = np.linspace(0.0, 1.0, n) ** (1.0 + magnitude)
        src = np.linspace(0.0, 1.0, n)
        warped = np.column_stack([np.interp(u, src, P[:, k]) for k in range(P.shape[1])])
        return Trajectory(warped, traj.times)
    if family == "occlusion":
        k = max(1, int(round(magnitude * n)))
        k = min(k, n - 3)
        start = int(rng.integers(1, n - k - 1))
        keep = np.r_[0:start, start + k:n]
        return Trajectory(P[keep], traj.times[keep])
    raise InvalidArgument(f"unknown perturbation family {family!r}", module="cli_io")


def pair_corpus(seed: int = 0, pairs_per_family: int = 10, magnitudes=None, n: int = 60,
                skills=("line", "sine", "arc", "l_shape")):
    """``(family, A, B)`` triples with ``B`` a perturbed copy of ``A``."""
    mags = dict(DEFAULT_MAGNITUDES, **(magnitudes or {}))
    rng = np.random.default_rng(seed)
    out = []
    for fam in PERTURBATIONS:
        for _ in range(pairs_per_family):
            base = skill(skills[int(rng.integers(len(skills)))], n, rng)
            out.append((fam, base, perturb(base, fam, mags[fam], rng)))
    return out


def generate_demos(seed: int, family: str, n_demos: int = 5, n_samples: int = 100,
                   noise: float = 0.0, perturbations=None, n_failed: int = None):
    """Demonstrations and labels for ``family``.

    ``perturbations`` maps perturbation families to maximum magnitudes; each
    demo gets every listed perturbation with a magnitude drawn uniformly
    from ``[0, max]``. The pushing family also emits ``n_failed`` failures
    (default ``n_demos``).
    """
    if family not in SKILLS:
        raise InvalidArgument(f"unknown skill family {family!r}", module="cli_io")
    for name in perturbations or {}:
        if name not in PERTURBATIONS:
            raise InvalidArgument(f"unknown perturbation family {name!r}", module="cli_io")
    rng = np.random.default_rng(seed)
    variants = [SUCCESS] * n_demos
    if family == "pushing":
        variants += [FAILURE] * (n_demos if n_failed is None else n_failed)
    demos = []
    for variant in variants:
        d = skill(family, n_samples, rng, noise, variant)
        for name, mag in (perturbations or {}).items():
            d = perturb(d, name, rng.uniform(0.0, mag), rng)
        demos.append(d)
    return demos, variants


def gen_corpus(out_dir, seed: int = 0, family: str = "line", **kwargs) -> Path:
    """Write demos as ``demo_###.csv`` plus ``manifest.json`` into ``out_dir``."""
    out = Path(out_dir)
    demos, labels = generate_demos(seed, family, **kwargs)
    entries = []
    for i, (d, lab) in enumerate(zip(demos, labels)):
        name = f"demo_{i:03d}.csv"
        atomic_write(out / name, trajectory_to_csv(d))
        entries.append((name, lab))
    manifest = manifest_dict(entries)
    manifest["generator"] = {"seed": seed, "family": family,
                             **{k: v for k, v in kwargs.items() if v is not None}}
    atomic_write(out / "manifest.json", dumps(manifest))
    return out / "manifest.json"
