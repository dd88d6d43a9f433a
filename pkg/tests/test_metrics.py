import math

import numpy as np
import pytest

from skillforge.corpus import pair_corpus
from skillforge.errors import InvalidArgument, InvalidTrajectory
from skillforge.metrics import (METRICS, bias_report, default_sigma, distance, dtw, similarity)
from skillforge.trajectory import Trajectory

SYMMETRIC = ("frechet", "dtw", "hausdorff", "sse", "mae", "area", "endpoint", "curvature", "jerk")


def monotone_paths(n, m):
    """Every monotone coupling of index sequences 0..n-1 and 0..m-1."""
    def walk(i, j, path):
        path = path + [(i, j)]
        if (i, j) == (n - 1, m - 1):
            yield path
            return
        if i + 1 < n:
            yield from walk(i + 1, j, path)
        if j + 1 < m:
            yield from walk(i, j + 1, path)
        if i + 1 < n and j + 1 < m:
            yield from walk(i + 1, j + 1, path)
    yield from walk(0, 0, [])


def pdist(a, b):
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def brute_frechet(P, Q):
    return min(max(pdist(P[i], Q[j]) for i, j in path) for path in monotone_paths(len(P), len(Q)))


def brute_dtw(P, Q):
    best = math.inf
    for path in monotone_paths(len(P), len(Q)):
        total = 0.0
        for i, j in path:
            total += pdist(P[i], Q[j])
        best = min(best, total)
    return best


def random_curve(rng, n, d=2):
    return Trajectory.uniform(rng.normal(size=(n, d)))


def test_trivial_examples():
    A = Trajectory.uniform([[0, 0], [1, 0]])
    B = Trajectory.uniform([[0, 1], [1, 1]])
    assert distance("frechet", A, B) == 1.0
    assert distance("dtw", [[1.0], [2.0], [3.0]], [[1.0], [2.0], [2.0], [3.0]]) == 0.0
    assert distance("hausdorff", A, Trajectory.uniform([[0, 0], [0, 0]])) == 1.0


@pytest.mark.parametrize("metric", METRICS)
def test_identity_is_zero(metric, rng):
    A = random_curve(rng, 12)
    assert distance(metric, A, A) == 0.0


def test_bruteforce_oracles_200_trials():
    rng = np.random.default_rng(77)
    for _ in range(200):
        P = random_curve(rng, int(rng.integers(2, 8)))
        Q = random_curve(rng, int(rng.integers(2, 8)))
        assert distance("frechet", P, Q) == brute_frechet(P.points.tolist(), Q.points.tolist())
        assert distance("dtw", P, Q) == brute_dtw(P.points.tolist(), Q.points.tolist())


@pytest.mark.parametrize("metric", SYMMETRIC)
def test_symmetry(metric):
    rng = np.random.default_rng(5)
    for _ in range(20):
        A = random_curve(rng, int(rng.integers(4, 15)))
        B = random_curve(rng, int(rng.integers(4, 15)))
        assert abs(distance(metric, A, B) - distance(metric, B, A)) <= 1e-12


@pytest.mark.parametrize("metric", ["frechet", "hausdorff"])
def test_triangle_inequality(metric):
    rng = np.random.default_rng(6)
    for _ in range(50):
        A, B, C = (random_curve(rng, int(rng.integers(2, 10))) for _ in range(3))
        assert distance(metric, A, C) <= distance(metric, A, B) + distance(metric, B, C) + 1e-12


def test_dtw_normalization():
    P = np.array([[0.0], [1.0]])
    Q = np.array([[0.5], [0.5], [2.0]])
    assert dtw(P, Q, normalize=True) == pytest.approx(dtw(P, Q) / 5)


def test_errors():
    with pytest.raises(InvalidArgument):
        distance("frechet", [[0.0], [1.0]], [[0.0, 0.0], [1.0, 1.0]])
    with pytest.raises(InvalidArgument):
        distance("nope", [[0.0], [1.0]], [[0.0], [1.0]])
    with pytest.raises(InvalidTrajectory):
        distance("frechet", [[0.0]], [[0.0], [1.0]])


def test_similarity():
    A = Trajectory.uniform([[0.0, 0.0], [1.0, 0.0]])
    B = A.translated([0.0, 0.3])
    assert similarity("frechet", A, A, 0.1) == 1.0
    assert similarity("frechet", A, B, 0.3) == pytest.approx(np.exp(-1.0), rel=1e-14)
    assert default_sigma(A) == pytest.approx(0.1)


def test_similarity_preserves_ranking(rng):
    ref = random_curve(rng, 10)
    cands = [random_curve(rng, 10) for _ in range(8)]
    for m in METRICS:
        d = [distance(m, c, ref) for c in cands]
        s = [similarity(m, c, ref, 0.7) for c in cands]
        assert int(np.argmax(s)) == int(np.argmin(d))


def test_bias_table_invariance_flags():
    rep = bias_report(pair_corpus(seed=1, pairs_per_family=4))
    assert rep.families == ("translation", "rotation", "scaling", "noise", "time_warp",
                            "occlusion")
    assert rep.metrics == METRICS
    for fam in ("translation", "rotation", "scaling"):
        assert rep.invariant["procrustes", fam]
    assert rep.invariant["curvature", "translation"]
    assert not rep.invariant["sse", "translation"]


def test_sse_on_unit_translation():
    s = np.linspace(0, 1, 25)
    A = Trajectory(np.c_[s, s], s)
    assert distance("sse", A, A.translated([1.0, 0.0])) == pytest.approx(25.0, rel=1e-14)


def test_bias_table_reproducible():
    a = bias_report(pair_corpus(seed=9, pairs_per_family=3)).to_csv()
    b = bias_report(pair_corpus(seed=9, pairs_per_family=3)).to_csv()
    assert a == b
    assert len(a.splitlines()) == 1 + len(METRICS)
    with pytest.raises(InvalidArgument):
        bias_report([])
