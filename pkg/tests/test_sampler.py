import itertools
import math

import numpy as np
import pytest

from mixpce.basis import build_mixture_basis
from mixpce.errors import NumericalError, OracleError, ValidationError
from mixpce.gmm import GaussianMixture, rng_from_seed
from mixpce.oracles import planted_coefficients
from mixpce.sampler import (
    AcquisitionState,
    AdaptiveConfig,
    CandidatePool,
    HISTORY_FIELDS,
    _gram_inverse,
    d_optimal_next,
    e_optimal_next,
    kmeans,
    r_optimal_next,
    r_optimal_objective,
    random_next,
    rrqr_init,
    run_adaptive,
    selection_volume,
    write_history,
)


def _pool(rows, points=None):
    rows = np.asarray(rows, dtype=float)
    if points is None:
        points = np.arange(rows.shape[0], dtype=float)[:, None]
    return CandidatePool(points, rows)


class PlantedOracle:
    def __init__(self, basis, c):
        self.basis, self.c, self.calls, self.seen = basis, c, 0, []

    def __call__(self, point):
        self.calls += 1
        self.seen.append(tuple(point))
        return float(self.basis.evaluate(point[None, :])[0] @ self.c)


@pytest.fixture(scope="module")
def planted(synth):
    basis = synth.ensure_basis()
    c = planted_coefficients(basis.n, (1.0, 0.6, 0.4, 0.25, 0.1), 77)
    return basis, synth.distribution, c


# ---- initial design -------------------------------------------------------

def test_rrqr_identity_rows():
    sel = rrqr_init(_pool(np.eye(5)), 3)
    assert len(set(sel)) == 3
    assert selection_volume(np.eye(5)[sel]) == pytest.approx(1.0)


def test_rrqr_against_exhaustive():
    for seed in range(10):
        X = np.random.default_rng(seed).normal(size=(8, 3))
        sel = rrqr_init(_pool(X), 3)
        best = max(selection_volume(X[list(c)]) for c in itertools.combinations(range(8), 3))
        assert selection_volume(X[sel]) >= 0.5 * best


def test_rrqr_skips_duplicates():
    X = np.random.default_rng(1).normal(size=(4, 4))
    rows = np.vstack([X, X])
    sel = rrqr_init(_pool(rows), 4)
    assert len({tuple(rows[i]) for i in sel}) == 4


def test_rrqr_capacity_and_rank_errors():
    with pytest.raises(ValidationError, match="cannot select"):
        rrqr_init(_pool(np.eye(3)), 4)
    rows = np.zeros((6, 3))
    rows[:, 0] = 1.0
    with pytest.raises(NumericalError, match="rank"):
        rrqr_init(_pool(rows), 2)


def test_strong_refinement_not_worse():
    for seed in range(5):
        X = np.random.default_rng(seed).normal(size=(40, 6))
        weak = rrqr_init(_pool(X), 6, strong=False)
        strong = rrqr_init(_pool(X), 6)
        assert selection_volume(X[strong]) >= selection_volume(X[weak]) * (1 - 1e-12)


# ---- D-optimal ------------------------------------------------------------

def _state(pool, selected, support):
    st = AcquisitionState(pool)
    for i in selected:
        st.add(i, 0.0)
    st.set_support(support)
    return st


def test_d_optimal_prefers_larger_leverage():
    rows = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [2.0, 0.0]])
    st = _state(_pool(rows), [0, 1], [0, 1])
    np.testing.assert_allclose(st.gram_inverse, np.eye(2))
    assert d_optimal_next(st, st.pool) == 3


def test_d_optimal_maximizes_determinant():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        s = int(rng.integers(1, 7))
        rows = rng.normal(size=(30, 8))
        support = np.sort(rng.choice(8, size=s, replace=False))
        st = _state(_pool(rows), list(range(10)), support)
        G = st.Phi_s.T @ st.Phi_s
        dets = {i: np.linalg.det(G + np.outer(rows[i, support], rows[i, support]))
                for i in range(10, 30)}
        assert d_optimal_next(st, st.pool) == max(dets, key=dets.get)


def test_sherman_morrison_matches_fresh_inverse():
    rows = np.random.default_rng(2).normal(size=(50, 6))
    st = _state(_pool(rows), list(range(10)), [0, 2, 3, 5])
    dets = [np.linalg.det(st.Phi_s.T @ st.Phi_s)]
    for _ in range(25):
        nxt = d_optimal_next(st, st.pool)
        st.add(nxt, 0.0)
        fresh = np.linalg.inv(st.Phi_s.T @ st.Phi_s)
        assert np.linalg.norm(st.gram_inverse - fresh) <= 1e-8 * np.linalg.norm(fresh)
        dets.append(np.linalg.det(st.Phi_s.T @ st.Phi_s))
    assert all(b > a for a, b in zip(dets, dets[1:]))
    assert st.sm_drift <= 1e-8


def test_add_rejects_duplicate():
    st = _state(_pool(np.eye(3)), [0], [0])
    with pytest.raises(ValidationError):
        st.add(0, 1.0)


def test_gram_inverse_singular_falls_back():
    inv = _gram_inverse(np.array([[1.0, 1.0], [1.0, 1.0]]))
    np.testing.assert_allclose(inv, np.linalg.pinv(np.full((2, 2), 2.0)))


def test_exhausted_pool_returns_none():
    st = _state(_pool(np.eye(2)), [0, 1], [0])
    assert d_optimal_next(st, st.pool) is None
    assert r_optimal_next(st, st.pool) is None
    assert e_optimal_next(st, st.pool) is None
    assert random_next(st.pool, np.random.default_rng(0)) is None


# ---- R-optimal ------------------------------------------------------------

def test_r_optimal_scalar_case():
    rng = np.random.default_rng(3)
    rows = rng.normal(size=(25, 1))
    st = _state(_pool(rows), list(range(5)), [0])
    g = float((rows[:5, 0] ** 2).sum())
    obj = {i: abs((g + rows[i, 0] ** 2) / 6 - 1) for i in range(5, 25)}
    assert r_optimal_next(st, st.pool) == min(obj, key=obj.get)


def test_r_optimal_two_by_two():
    # (G + x x^T)/5 - I for G = diag(4, 3): eigenvalues by hand
    # x = 0 -> (-0.2, -0.4); x = (1, 1) -> -0.1 +- sqrt(0.05);
    # x = (sqrt2, 0) -> (0.2, -0.4); x = (0, sqrt2) -> (-0.2, 0).
    G = np.diag([4.0, 3.0])
    X = np.array([[0.0, 0.0], [1.0, 1.0], [np.sqrt(2.0), 0.0], [0.0, np.sqrt(2.0)]])
    obj = r_optimal_objective(G, 4, X)
    np.testing.assert_allclose(obj, [0.4, 0.1 + np.sqrt(0.05), 0.4, 0.2], rtol=1e-12)
    assert int(np.argmin(obj)) == 3


def test_r_optimal_prefers_unit_row_over_zero():
    # G = m I with s = 1: a zero row leaves the deviation at 1/(m+1), a unit row removes it.
    obj = r_optimal_objective(np.array([[4.0]]), 4, np.array([[0.0], [1.0]]))
    np.testing.assert_allclose(obj, [0.2, 0.0], atol=1e-15)


def test_r_optimal_choice_is_argmin():
    rows = np.random.default_rng(4).normal(size=(40, 5))
    st = _state(_pool(rows), list(range(8)), [0, 1, 4])
    X = rows[8:][:, [0, 1, 4]]
    obj = r_optimal_objective(st.Phi_s.T @ st.Phi_s, 8, X)
    assert r_optimal_next(st, st.pool) == 8 + int(np.argmin(obj))


# ---- E-optimal ------------------------------------------------------------

def test_kmeans_recovers_separated_clusters():
    rng = np.random.default_rng(5)
    pts = np.vstack([rng.normal(size=(30, 2)) + c for c in ([0, 0], [10, 0], [0, 10])])
    centers, labels = kmeans(pts, 3, seed=0)
    assert len(set(labels)) == 3
    for j in range(3):
        assert len(set(labels[30 * j:30 * (j + 1)])) == 1


def test_kmeans_handles_empty_clusters():
    pts = np.array([[0.0, 0.0]] * 5 + [[1.0, 1.0]])
    centers, labels = kmeans(pts, 3, seed=1)
    assert np.bincount(labels, minlength=3).min() >= 1
    with pytest.raises(ValidationError):
        kmeans(pts, 7)


def test_e_optimal_forced_cluster():
    selected = np.array([[0.0, 0.0], [0.1, 0.0], [5.0, 5.0], [5.1, 5.0]])
    cands = np.array([[0.05, 0.1], [5.05, 5.2], [2.5, 2.5]])
    points = np.vstack([selected, cands])
    rows = np.ones((7, 1))
    st = _state(CandidatePool(points, rows), [0, 1, 2, 3], [0])
    st.coefficients = np.array([1.0])
    st.y = [1.0, 1.0, 3.0, 3.0]
    assert e_optimal_next(st, st.pool, k_clusters=2) == 5


def test_e_optimal_single_cluster_uses_centroid():
    rng = np.random.default_rng(6)
    points = rng.normal(size=(40, 2))
    st = _state(CandidatePool(points, np.ones((40, 1))), list(range(10)), [0])
    st.y = list(rng.normal(size=10))
    centroid = points[:10].mean(axis=0)
    expected = 10 + int(np.argmin(((points[10:] - centroid) ** 2).sum(axis=1)))
    assert e_optimal_next(st, st.pool, k_clusters=1) == expected
    st.y = [0.0] * 10
    assert e_optimal_next(st, st.pool, k_clusters=1) == expected


def test_e_optimal_targets_high_error_region():
    def fraction(strategy, trial):
        rng = np.random.default_rng([trial, 9])
        points = rng.normal(size=(400, 2))
        rows = np.column_stack([np.ones(400), points])
        truth = rows @ [0.5, 1.0, -1.0] + 2.0 * (points[:, 0] > 0)
        pool = CandidatePool(points, rows)
        st = AcquisitionState(pool)
        for i in range(10):
            st.add(i, truth[i])
        st.set_support([0, 1, 2])
        st.coefficients = np.array([0.5, 1.0, -1.0])
        hits = 0
        for it in range(20):
            if strategy == "e":
                nxt = e_optimal_next(st, pool, seed=[trial, it])
            else:
                nxt = random_next(pool, rng)
            hits += points[nxt, 0] > 0
            st.add(nxt, truth[nxt])
        return hits / 20

    e = np.mean([fraction("e", t) for t in range(10)])
    r = np.mean([fraction("random", t) for t in range(10)])
    assert e >= 0.6
    assert abs(r - 0.5) < 0.15


def test_e_optimal_residual_mode_validated():
    st = _state(CandidatePool(np.zeros((3, 1)) + [[0], [1], [2]], np.ones((3, 1))), [0], [0])
    with pytest.raises(ValidationError):
        e_optimal_next(st, st.pool, residual="median")


# ---- adaptive loop --------------------------------------------------------

def test_run_adaptive_planted_truth(planted):
    basis, dist, c = planted
    oracle = PlantedOracle(basis, c)
    cfg = AdaptiveConfig(strategy="d", pool_size=500, initial=20, budget=60, seed=3)
    res = run_adaptive(cfg, oracle, basis, dist)
    assert res.history[-1].training_error <= 1e-6
    assert res.model.metadata["m_used"] == res.state.m <= 60
    assert oracle.calls == res.oracle_calls == res.state.m


@pytest.mark.parametrize("strategy", ["d", "r", "e", "hybrid", "random"])
def test_run_adaptive_no_repeats(planted, strategy):
    basis, dist, c = planted
    oracle = PlantedOracle(basis, c)
    cfg = AdaptiveConfig(strategy=strategy, pool_size=300, initial=15, budget=30,
                         threshold=0.0, stabilization=0.0, seed=4)
    res = run_adaptive(cfg, oracle, basis, dist)
    assert res.state.m == 30
    assert len(set(res.state.selected)) == 30
    assert len(set(oracle.seen)) == 30
    ms = [row.m for row in res.history]
    assert ms == list(range(15, 31))
    assert res.stop_reason == "budget"


def test_threshold_stop_history_length(planted):
    basis, dist, c = planted
    oracle = PlantedOracle(basis, c)
    cfg = AdaptiveConfig(strategy="d", pool_size=500, initial=20, budget=100,
                         threshold=1e-8, stabilization=0.0, seed=5)
    res = run_adaptive(cfg, oracle, basis, dist)
    t = len(res.history)
    assert res.stop_reason == "threshold"
    assert res.history[-1].iter == t
    assert oracle.calls == 20 + (t - 1)


def test_oracle_failure_keeps_history(planted):
    basis, dist, c = planted

    class Flaky(PlantedOracle):
        def __call__(self, point):
            if self.calls >= 25:
                raise RuntimeError("solver diverged")
            return super().__call__(point)

    cfg = AdaptiveConfig(strategy="d", pool_size=300, initial=20, budget=40,
                         threshold=0.0, stabilization=0.0, seed=6)
    with pytest.raises(OracleError) as info:
        run_adaptive(cfg, Flaky(basis, c), basis, dist)
    assert len(info.value.history) == 6
    assert info.value.exit_code == 4


def test_run_adaptive_deterministic(planted):
    basis, dist, c = planted
    cfg = AdaptiveConfig(strategy="hybrid", pool_size=300, initial=15, budget=35,
                         threshold=0.0, stabilization=0.0, seed=7)
    a = run_adaptive(cfg, PlantedOracle(basis, c), basis, dist)
    b = run_adaptive(cfg, PlantedOracle(basis, c), basis, dist)
    assert a.state.selected == b.state.selected
    np.testing.assert_array_equal(a.model.coefficients, b.model.coefficients)


def test_config_validation():
    with pytest.raises(ValidationError):
        AdaptiveConfig(strategy="x").validate()
    with pytest.raises(ValidationError):
        AdaptiveConfig(initial=50, budget=40).validate()
    with pytest.raises(ValidationError):
        AdaptiveConfig(pool_size=100, budget=200).validate()
    with pytest.raises(ValidationError):
        AdaptiveConfig(epsilon_mode="ratio").validate()


def test_history_file(tmp_path, planted):
    basis, dist, c = planted
    cfg = AdaptiveConfig(strategy="random", pool_size=200, initial=12, budget=15,
                         threshold=0.0, stabilization=0.0, seed=8)
    res = run_adaptive(cfg, PlantedOracle(basis, c), basis, dist)
    path = tmp_path / "history.csv"
    write_history(res.history, path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(HISTORY_FIELDS)
    assert len(lines) == 1 + len(res.history)
    assert lines[1].split(",")[3] == "-1"


def test_random_initial_design_is_uniform_draw():
    dist = GaussianMixture.standard_normal(2)
    basis = build_mixture_basis(dist, 2)
    pool = CandidatePool.draw(dist, basis, 100, 0)
    cfg = AdaptiveConfig(strategy="random", pool_size=100, initial=10, budget=10, seed=0)
    res = run_adaptive(cfg, lambda x: float(x[0]), basis, dist, pool=pool)
    expected = rng_from_seed([0, 1]).choice(100, size=10, replace=False)
    assert res.state.selected == [int(i) for i in expected]
    assert math.isfinite(res.history[-1].training_error)
