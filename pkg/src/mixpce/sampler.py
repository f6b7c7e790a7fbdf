"""Adaptive sample selection around the sparse solver.

A pool of candidate inputs is drawn once. An initial design is taken by
rank-revealing QR on the candidate basis matrix, then one point at a time is
added by a D-, R- or E-optimal rule (or a fixed rotation of the three, or
uniformly at random as a baseline).
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import qr, solve_triangular

from .errors import AwaitingResponses, MixPCEError, NumericalError, OracleError, ValidationError
from .gmm import as_groups, rng_from_seed
from .sparse import RegressionProblem, cosamp, default_sparsity, ls_on_support, resolve_epsilon
from .surrogate import SparseSurrogate

log = logging.getLogger(__name__)

STRATEGIES = ("d", "r", "e", "hybrid", "random")
HYBRID_CYCLE = ("d", "r", "e")


@dataclass(eq=False)
class CandidatePool:
    """Candidate inputs ``points`` with their basis rows ``Phi0``."""

    points: np.ndarray
    Phi0: np.ndarray
    evaluated: np.ndarray = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.Phi0 = np.asarray(self.Phi0, dtype=float)
        if self.points.shape[0] != self.Phi0.shape[0]:
            raise ValidationError("pool points and basis rows differ in count")
        if self.evaluated is None:
            self.evaluated = np.zeros(self.points.shape[0], dtype=bool)

    @classmethod
    def draw(cls, distribution, basis, size, seed):
        pts = as_groups(distribution).sample(size, seed)
        return cls(pts, basis.evaluate(pts))

    @property
    def size(self):
        return self.points.shape[0]

    def available(self) -> np.ndarray:
        return np.flatnonzero(~self.evaluated)


def _gram_inverse(Phi_s):
    G = Phi_s.T @ Phi_s
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        L = None
    if L is None or np.min(np.diag(L)) ** 2 <= 1e-12 * max(np.max(np.diag(G)), 1e-300):
        log.warning("support Gram matrix is singular; using its pseudo-inverse")
        return np.linalg.pinv(G)
    Linv = solve_triangular(L, np.eye(G.shape[0]), lower=True)
    return Linv.T @ Linv


@dataclass(eq=False)
class AcquisitionState:
    """Selected rows, current support and the maintained ``(Phi_s^T Phi_s)^{-1}``.

    ``add`` applies a Sherman-Morrison rank-one update and, every
    ``check_every`` updates, compares it with a fresh inverse (the fresh one
    is kept). The largest relative discrepancy seen is ``sm_drift``.
    """

    pool: CandidatePool
    selected: list = field(default_factory=list)
    y: list = field(default_factory=list)
    support: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    coefficients: np.ndarray = None
    gram_inverse: np.ndarray = None
    check_every: int = 10
    sm_drift: float = 0.0
    history: list = field(default_factory=list)
    _updates: int = 0

    def __post_init__(self):
        if self.coefficients is None:
            self.coefficients = np.zeros(self.pool.Phi0.shape[1])

    @property
    def m(self):
        return len(self.selected)

    @property
    def Phi(self):
        return self.pool.Phi0[self.selected]

    @property
    def Phi_s(self):
        return self.pool.Phi0[np.ix_(self.selected, self.support)]

    def set_support(self, support):
        self.support = np.asarray(sorted(int(i) for i in support), dtype=int)
        self.gram_inverse = _gram_inverse(self.Phi_s) if self.support.size else None
        self._updates = 0

    def add(self, index, value):
        index = int(index)
        if self.pool.evaluated[index]:
            raise ValidationError(f"candidate {index} was already simulated")
        self.pool.evaluated[index] = True
        self.selected.append(index)
        self.y.append(float(value))
        if self.gram_inverse is None:
            return
        x = self.pool.Phi0[index, self.support]
        u = self.gram_inverse @ x
        self.gram_inverse = self.gram_inverse - np.outer(u, u) / (1.0 + x @ u)
        self._updates += 1
        if self._updates % self.check_every == 0:
            fresh = _gram_inverse(self.Phi_s)
            drift = np.linalg.norm(self.gram_inverse - fresh) / np.linalg.norm(fresh)
            self.sm_drift = max(self.sm_drift, float(drift))
            if drift > 1e-8:
                log.warning("Sherman-Morrison drift %.2e; refactorized", drift)
            self.gram_inverse = fresh


def selection_volume(Phi_a) -> float:
    """``det(Phi_a^T Phi_a)`` for tall ``Phi_a``, ``det(Phi_a Phi_a^T)`` for wide."""
    Phi_a = np.asarray(Phi_a, dtype=float)
    G = Phi_a.T @ Phi_a if Phi_a.shape[0] >= Phi_a.shape[1] else Phi_a @ Phi_a.T
    return float(np.linalg.det(G))


def rrqr_init(pool: CandidatePool, m: int, strong=True, max_swaps=None) -> list:
    """Pick ``m`` informative candidate rows by column-pivoted QR of ``Phi0^T``.

    The first ``m`` pivots form the greedy selection. With ``strong=True``
    they are refined by pairwise swaps (selected/unselected) whenever a swap
    grows the selection volume, using the ratio
    ``(R11^{-1} R12)_ij^2 + (gamma_j omega_i)^2`` for each candidate swap.
    """
    A = pool.Phi0.T
    n, m0 = A.shape
    if m < 1:
        raise ValidationError("initial sample count must be >= 1")
    if m > min(n, m0):
        raise ValidationError(
            f"cannot select {m} rows: candidate matrix is {m0}x{n}, rank <= {min(n, m0)}; "
            "use a larger pool, a higher order, or a smaller initial sample count"
        )
    R, piv = qr(A, mode="r", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.count_nonzero(diag > 1e-10 * diag[0])) if diag.size and diag[0] > 0 else 0
    if rank < m:
        raise NumericalError(
            f"candidate matrix has numerical rank {rank} < {m}; "
            "use a larger pool or a smaller initial sample count"
        )
    sel = list(piv[:m])
    if strong:
        sel = _strong_swaps(A, sel, max_swaps if max_swaps is not None else 10 * m)
    return [int(i) for i in sel]


def _strong_swaps(A, sel, max_swaps, tol=1e-9):
    m0 = A.shape[1]
    sel = np.array(sel)
    for _ in range(max_swaps):
        rest = np.setdiff1d(np.arange(m0), sel)
        if rest.size == 0:
            break
        Q, R11 = np.linalg.qr(A[:, sel])
        R12 = Q.T @ A[:, rest]
        R11inv = solve_triangular(R11, np.eye(len(sel)), lower=False)
        W = R11inv @ R12
        resid = A[:, rest] - Q @ R12
        gamma = np.linalg.norm(resid, axis=0)
        omega = np.linalg.norm(R11inv, axis=1)
        ratio = W**2 + np.outer(omega, gamma) ** 2
        i, j = np.unravel_index(np.argmax(ratio), ratio.shape)
        if ratio[i, j] <= 1.0 + tol:
            break
        sel[i] = rest[j]
    return list(sel)


def d_optimal_next(state: AcquisitionState, pool: CandidatePool):
    """Unselected candidate with the largest leverage ``x G^{-1} x^T``; ``None`` if exhausted."""
    avail = pool.available()
    if avail.size == 0:
        return None
    X = pool.Phi0[np.ix_(avail, state.support)]
    lev = np.einsum("ij,jk,ik->i", X, state.gram_inverse, X)
    return int(avail[int(np.argmax(lev))])


def r_optimal_objective(G, m, X) -> np.ndarray:
    """``|| (G + x^T x)/(m+1) - I ||_2`` for each row ``x`` of ``X``."""
    s = G.shape[0]
    out = np.empty(X.shape[0])
    eye = np.eye(s)
    for a in range(0, X.shape[0], 256):
        Xb = X[a:a + 256]
        H = (G[None] + Xb[:, :, None] * Xb[:, None, :]) / (m + 1) - eye[None]
        ev = np.linalg.eigvalsh(H)
        out[a:a + 256] = np.maximum(np.abs(ev[:, 0]), np.abs(ev[:, -1]))
    return out


def r_optimal_next(state: AcquisitionState, pool: CandidatePool):
    """Unselected candidate minimizing the spectral RIP deviation after adding it."""
    avail = pool.available()
    if avail.size == 0:
        return None
    Phi_s = state.Phi_s
    X = pool.Phi0[np.ix_(avail, state.support)]
    obj = r_optimal_objective(Phi_s.T @ Phi_s, state.m, X)
    return int(avail[int(np.argmin(obj))])


def kmeans(points, k, seed=0, iters=50):
    """Lloyd's algorithm from ``k`` distinct seeded starting points.

    An emptied cluster is re-seeded with the point farthest from the center
    of the currently largest cluster, which splits that cluster.
    Returns ``(centers, labels)``.
    """
    X = np.asarray(points, dtype=float)
    N = X.shape[0]
    if not 1 <= k <= N:
        raise ValidationError(f"need 1 <= k <= {N} clusters, got {k}")
    rng = rng_from_seed(seed)
    centers = X[np.sort(rng.choice(N, size=k, replace=False))].copy()
    labels = np.full(N, -1)
    for _ in range(iters):
        d2 = ((X[:, None, :] - centers[None]) ** 2).sum(axis=2)
        new = np.argmin(d2, axis=1)
        counts = np.bincount(new, minlength=k)
        for e in np.flatnonzero(counts == 0):
            big = int(np.argmax(counts))
            members = np.flatnonzero(new == big)
            far = members[np.argmax(d2[members, big])]
            new[far] = e
            counts = np.bincount(new, minlength=k)
        for j in range(k):
            centers[j] = X[new == j].mean(axis=0)
        if np.array_equal(new, labels):
            break
        labels = new
    return centers, labels


def e_optimal_next(state: AcquisitionState, pool: CandidatePool, k_clusters=None,
                   seed=0, residual="signed"):
    """Candidate nearest to the center of the cluster with the worst mean residual.

    Selected points are clustered with :func:`kmeans`; each cluster's mean
    residual ``Phi c - y`` (signed by default, ``residual="absolute"`` for the
    mean absolute value) is computed with the current coefficients.
    """
    avail = pool.available()
    if avail.size == 0:
        return None
    k = k_clusters or math.ceil(math.sqrt(state.m))
    k = min(k, state.m)
    sel_pts = pool.points[state.selected]
    res = state.Phi @ state.coefficients - np.asarray(state.y)
    centers, labels = kmeans(sel_pts, k, seed=seed)
    if residual == "signed":
        score = np.array([abs(res[labels == j].mean()) for j in range(k)])
    elif residual == "absolute":
        score = np.array([np.abs(res[labels == j]).mean() for j in range(k)])
    else:
        raise ValidationError(f"residual mode must be 'signed' or 'absolute', got {residual!r}")
    target = centers[int(np.argmax(score))]
    dist = ((pool.points[avail] - target) ** 2).sum(axis=1)
    return int(avail[int(np.argmin(dist))])


def random_next(pool: CandidatePool, rng):
    avail = pool.available()
    if avail.size == 0:
        return None
    return int(rng.choice(avail))


@dataclass
class AdaptiveConfig:
    """Settings for :func:`run_adaptive`.

    ``sparsity=None`` uses ``floor(m/3)`` at the current sample count.
    ``epsilon`` is the CoSaMP residual threshold, relative to ``||y||``
    unless ``epsilon_mode="absolute"``. ``threshold`` is the training-error
    stop; ``budget`` the maximum number of simulations. ``stabilization`` is
    the relative coefficient change that ends the loop (0 disables it).
    """

    strategy: str = "d"
    pool_size: int = 1000
    initial: int = 20
    budget: int = 120
    sparsity: int | None = None
    epsilon: float = 1e-6
    epsilon_mode: str = "relative"
    threshold: float = 1e-8
    stabilization: float = 1e-8
    refresh: int = 10
    k_clusters: int | None = None
    residual: str = "signed"
    max_iter: int = 100
    seed: int = 0

    def validate(self):
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.initial < 1 or self.pool_size <= self.initial:
            raise ValidationError("need 1 <= initial < pool_size")
        if self.budget < self.initial:
            raise ValidationError("budget must be >= initial sample count")
        if self.budget > self.pool_size:
            raise ValidationError("budget cannot exceed the candidate pool size")
        if self.sparsity is not None and self.sparsity < 1:
            raise ValidationError("sparsity must be >= 1")
        if self.refresh < 1:
            raise ValidationError("refresh must be >= 1")
        if self.epsilon < 0 or self.threshold < 0 or self.stabilization < 0:
            raise ValidationError("epsilon and threshold must be nonnegative")
        if self.epsilon_mode not in ("relative", "absolute"):
            raise ValidationError("epsilon_mode must be 'relative' or 'absolute'")
        return self


@dataclass(frozen=True)
class HistoryRow:
    iter: int
    m: int
    strategy: str
    chosen_index: int
    training_error: float
    support_size: int


HISTORY_FIELDS = ("iter", "m", "strategy", "chosen_index", "training_error", "support_size")


def write_history(rows, path):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(HISTORY_FIELDS) + "\n")
        for r in rows:
            fh.write(f"{r.iter},{r.m},{r.strategy},{r.chosen_index},"
                     f"{r.training_error:.17g},{r.support_size}\n")


@dataclass(eq=False)
class AdaptiveResult:
    model: SparseSurrogate
    history: list
    state: AcquisitionState
    stop_reason: str
    oracle_calls: int


def _call_oracle(oracle, points):
    many = getattr(oracle, "evaluate_many", None)
    if many is not None:
        return [float(v) for v in many(points)]
    return [float(oracle(p)) for p in points]


def run_adaptive(config: AdaptiveConfig, oracle, basis, distribution=None,
                 pool: CandidatePool | None = None) -> AdaptiveResult:
    """Adaptive sparse fit.

    Loop: solve (full CoSaMP every ``config.refresh`` iterations, least
    squares on the fixed support in between), record a history row, stop if
    the training error, budget or coefficient-change rule fires, otherwise
    pick one new candidate by the strategy and simulate it.

    ``oracle`` maps a point to a float (or offers ``evaluate_many``). Any
    failure other than :class:`AwaitingResponses` is re-raised as
    :class:`OracleError` carrying ``.history`` with the rows so far.
    """
    config.validate()
    if pool is None:
        if distribution is None:
            raise ValidationError("need a distribution or a candidate pool")
        pool = CandidatePool.draw(distribution, basis, config.pool_size, config.seed)
    rng = rng_from_seed([config.seed, 1])
    state = AcquisitionState(pool)
    calls = 0

    def simulate(indices):
        nonlocal calls
        try:
            vals = _call_oracle(oracle, pool.points[indices])
        except AwaitingResponses as exc:
            exc.history = list(state.history)
            raise
        except MixPCEError as exc:
            exc.history = list(state.history)
            raise
        except Exception as exc:
            err = OracleError(f"oracle failed: {exc}")
            err.history = list(state.history)
            raise err from exc
        calls += len(indices)
        return vals

    t0 = time.perf_counter()
    if config.strategy == "random":
        init = [int(i) for i in rng.choice(pool.size, size=config.initial, replace=False)]
    else:
        init = rrqr_init(pool, config.initial)
    for i, v in zip(init, simulate(init)):
        state.add(i, v)
    log.info("phase=init m=%d elapsed_ms=%.1f", state.m, 1e3 * (time.perf_counter() - t0))

    it, chosen, prev_c, reason = 0, -1, None, "budget"
    while True:
        it += 1
        y = np.asarray(state.y)
        Phi = state.Phi
        if (it - 1) % config.refresh == 0 or state.support.size == 0:
            s = config.sparsity or default_sparsity(state.m)
            s = min(s, state.m)
            eps = resolve_epsilon(config.epsilon, y, config.epsilon_mode)
            sol = cosamp(RegressionProblem(Phi, y, s, eps), config.max_iter)
            state.coefficients = sol.c
            state.set_support(np.flatnonzero(sol.c) if sol.support else [0])
        else:
            c = np.zeros(Phi.shape[1])
            c[state.support] = ls_on_support(Phi, y, state.support)
            state.coefficients = c
        c = state.coefficients
        ny = float(np.linalg.norm(y))
        r = float(np.linalg.norm(Phi @ c - y))
        train = r / ny if ny > 0 else r
        state.history.append(HistoryRow(it, state.m, config.strategy, chosen, train,
                                        int(np.count_nonzero(c))))
        change = None
        if prev_c is not None:
            change = np.linalg.norm(c - prev_c) / max(np.linalg.norm(c), 1e-300)
        prev_c = c.copy()
        if train <= config.threshold:
            reason = "threshold"
            break
        if state.m >= config.budget:
            reason = "budget"
            break
        if config.stabilization > 0 and change is not None and change <= config.stabilization:
            reason = "stabilized"
            break
        rule = config.strategy
        if rule == "hybrid":
            rule = HYBRID_CYCLE[(it - 1) % 3]
        if rule == "d":
            nxt = d_optimal_next(state, pool)
        elif rule == "r":
            nxt = r_optimal_next(state, pool)
        elif rule == "e":
            nxt = e_optimal_next(state, pool, config.k_clusters, seed=[config.seed, it],
                                 residual=config.residual)
        else:
            nxt = random_next(pool, rng)
        if nxt is None:
            reason = "pool exhausted"
            break
        state.add(nxt, simulate([nxt])[0])
        chosen = nxt
    log.info("phase=adaptive strategy=%s m=%d iters=%d stop=%s elapsed_ms=%.1f",
             config.strategy, state.m, it, reason, 1e3 * (time.perf_counter() - t0))
    meta = {
        "d": int(basis.d), "p": int(basis.p), "s": int(state.support.size),
        "epsilon": config.epsilon, "epsilon_mode": config.epsilon_mode,
        "strategy": config.strategy, "m_used": state.m,
        "training_error": state.history[-1].training_error, "stop_reason": reason,
    }
    model = SparseSurrogate(basis, state.coefficients, distribution, meta)
    return AdaptiveResult(model, state.history, state, reason, calls)
