"""Trajectory container, resampling, alignment and finite differences."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidArgument, InvalidTrajectory

SUCCESS = "success"
FAILURE = "failure"
LABELS = (SUCCESS, FAILURE)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Ordered, timestamped sequence of ``d``-dimensional points.

    ``points`` has shape ``(n, d)`` and ``times`` shape ``(n,)``. Both are
    stored as read-only float64 copies.
    """

    points: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        t = np.array(self.times, dtype=float).reshape(-1)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise InvalidTrajectory(f"points must be (n, d) with d >= 1, got {pts.shape}")
        if len(pts) != len(t):
            raise InvalidTrajectory(f"{len(pts)} points but {len(t)} times")
        if len(t) < 2:
            raise InvalidTrajectory("a trajectory needs at least 2 samples")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(t))):
            raise InvalidTrajectory("non-finite values in trajectory")
        bad = np.flatnonzero(np.diff(t) <= 0)
        if bad.size:
            raise InvalidTrajectory(
                f"times not strictly increasing at sample {bad[0] + 1}", row=int(bad[0]) + 1
            )
        pts.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "times", t)

    @classmethod
    def uniform(cls, points, t0=0.0, t1=1.0) -> "Trajectory":
        """Wrap ``points`` with evenly spaced times on ``[t0, t1]``."""
        pts = np.asarray(points, dtype=float)
        return cls(pts, np.linspace(t0, t1, len(pts)))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def __len__(self):
        return len(self.times)

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (
            self.points.shape == other.points.shape
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.times, other.times)
        )

    def translated(self, offset) -> "Trajectory":
        return Trajectory(self.points + np.asarray(offset, dtype=float), self.times)


def resample(traj: Trajectory, n: int) -> Trajectory:
    """Piecewise-linear resampling onto ``n`` uniformly spaced times.

    Endpoints are reproduced exactly, and so is any sample whose time lands
    on an original knot, which makes the operation idempotent.
    """
    if int(n) != n or n < 2:
        raise InvalidArgument(f"resample needs n >= 2, got {n}", module="trajectory")
    n = int(n)
    t_new = np.linspace(traj.times[0], traj.times[-1], n)
    pts = np.empty((n, traj.dim))
    for k in range(traj.dim):
        pts[:, k] = np.interp(t_new, traj.times, traj.points[:, k])
    return Trajectory(pts, t_new)


def arc_length(traj: Trajectory) -> float:
    return float(np.sum(np.linalg.norm(np.diff(traj.points, axis=0), axis=1)))


def second_differences(traj) -> np.ndarray:
    """Return ``p[i] - 2 p[i+1] + p[i+2]`` for every interior triple.

    Accepts a :class:`Trajectory` or a raw ``(n, d)`` array.
    """
    pts = traj.points if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
    if len(pts) < 3:
        raise InvalidArgument("second differences need at least 3 samples", module="trajectory")
    return pts[:-2] - 2.0 * pts[1:-1] + pts[2:]


@dataclass(frozen=True)
class DemoSet:
    """Labelled demonstrations; labels are ``"success"`` or ``"failure"``."""

    demos: Sequence[Trajectory]
    labels: Sequence[str] = field(default=None)

    def __post_init__(self):
        demos = tuple(self.demos)
        if not demos:
            raise InvalidArgument("a DemoSet needs at least one demonstration", module="trajectory")
        labels = tuple(self.labels) if self.labels is not None else (SUCCESS,) * len(demos)
        if len(labels) != len(demos):
            raise InvalidArgument("one label per demonstration required", module="trajectory")
        for lab in labels:
            if lab not in LABELS:
                raise InvalidArgument(f"unknown label {lab!r}", module="trajectory")
        dims = {d.dim for d in demos}
        if len(dims) != 1:
            raise InvalidArgument(f"demonstrations have mixed dimensions {sorted(dims)}",
                                  module="trajectory")
        object.__setattr__(self, "demos", demos)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.demos[0].dim

    @property
    def common_len(self):
        """Shared sample count, or ``None`` if the demos are not aligned."""
        lengths = {len(d) for d in self.demos}
        return lengths.pop() if len(lengths) == 1 else None

    def __len__(self):
        return len(self.demos)

    def subset(self, label: str) -> list:
        return [d for d, lab in zip(self.demos, self.labels) if lab == label]


def align(demos: DemoSet, T: int) -> DemoSet:
    """Resample every demonstration to ``T`` samples, keeping labels."""
    if T < 2:
        raise InvalidArgument(f"align needs T >= 2, got {T}", module="trajectory")
    return DemoSet([resample(d, T) for d in demos.demos], demos.labels)


def as_demoset(obj) -> DemoSet:
    if isinstance(obj, DemoSet):
        return obj
    if isinstance(obj, Trajectory):
        return DemoSet([obj])
    return DemoSet(list(obj))
