"""Exact Gaussian-mixture moments through functional tensor trains.

For one component ``xi = A eta + mu`` with ``eta ~ N(0, I)``. Each coordinate
``xi_j`` is a tensor train whose ``i``-th core is affine in ``eta_i``;
products of monomials are Kronecker products of cores, and since the
``eta_i`` are independent the expectation of a train is the chain product of
the core-wise expectations.

Cores are stored as ``(deg + 1, r_prev, r_next)`` arrays of polynomial
coefficients in their variable, because Kronecker products of cores in the
same variable raise the degree.
"""

from __future__ import annotations

import csv
import functools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import CapacityError, ValidationError
from .gmm import GaussianComponent, GaussianMixture
from .indexing import MultiIndexSet, enumerate_indices, split

DEFAULT_RANK_BUDGET = 16
ORACLE_MAX_ORDER = 12


@functools.lru_cache(maxsize=None)
def _gaussian_moments(kmax):
    out = np.zeros(kmax + 1)
    out[0] = 1.0
    for k in range(2, kmax + 1, 2):
        out[k] = out[k - 2] * (k - 1)
    out.setflags(write=False)
    return out


def gaussian_moments(kmax: int) -> np.ndarray:
    """``E[z**k]`` for ``k = 0..kmax`` with ``z ~ N(0, 1)``."""
    return _gaussian_moments(int(kmax))


def _trim(core):
    nz = np.flatnonzero(np.any(core != 0.0, axis=(1, 2)))
    deg = int(nz[-1]) if nz.size else 0
    return np.ascontiguousarray(core[: deg + 1])


@dataclass(frozen=True, eq=False)
class FunctionalTensorTrain:
    """``f(eta) = head @ G_1(eta_1) @ ... @ G_d(eta_d)``."""

    head: np.ndarray
    cores: tuple

    @property
    def d(self) -> int:
        return len(self.cores)

    @property
    def ranks(self):
        return (self.head.shape[0],) + tuple(c.shape[2] for c in self.cores)

    @property
    def degrees(self):
        return tuple(c.shape[0] - 1 for c in self.cores)

    def core_matrix(self, i, x):
        """Value of core ``i`` at ``eta_i = x`` (Horner)."""
        core = self.cores[i]
        out = core[-1].copy()
        for k in range(core.shape[0] - 2, -1, -1):
            out = out * x + core[k]
        return out

    def evaluate(self, eta) -> float:
        eta = np.asarray(eta, dtype=float)
        if eta.shape != (self.d,):
            raise ValidationError(f"expected eta of length {self.d}, got {eta.shape}")
        v = self.head
        for i in range(self.d):
            v = v @ self.core_matrix(i, eta[i])
        return float(v[0])


def first_order_tt(component: GaussianComponent, j: int) -> FunctionalTensorTrain:
    """Rank-2 train of ``xi_j = sum_k A[j, k] eta_k + mu_j`` (``j`` is 0-based)."""
    A, mu = component.whiten()
    d = mu.shape[0]
    if not 0 <= j < d:
        raise ValidationError(f"coordinate {j} out of range for d={d}")
    head = np.array([mu[j], 1.0])
    cores = []
    for i in range(d - 1):
        c = np.zeros((2, 2, 2))
        c[0] = np.eye(2)
        c[1, 1, 0] = A[j, i]
        cores.append(_trim(c))
    last = np.zeros((2, 2, 1))
    last[0, 0, 0] = 1.0
    last[1, 1, 0] = A[j, d - 1]
    cores.append(_trim(last))
    return FunctionalTensorTrain(head, tuple(cores))


def _kron_core(el, er):
    da, ri, rj = el.shape
    db, rk, rl = er.shape
    full = np.einsum("aij,bkl->abikjl", el, er).reshape(da, db, ri * rk, rj * rl)
    out = np.zeros((da + db - 1, ri * rk, rj * rl))
    for a in range(da):
        out[a:a + db] += full[a]
    return _trim(out)


def tt_product(left: FunctionalTensorTrain, right: FunctionalTensorTrain):
    """Train of the pointwise product: core-wise Kronecker products."""
    if left.d != right.d:
        raise ValidationError(f"trains over {left.d} and {right.d} variables")
    head = np.kron(left.head, right.head)
    cores = tuple(_kron_core(a, b) for a, b in zip(left.cores, right.cores))
    return FunctionalTensorTrain(head, cores)


def tt_expectation(train: FunctionalTensorTrain) -> float:
    """Replace every core by its expectation under ``N(0, 1)`` and contract."""
    gm = gaussian_moments(max(train.degrees, default=0))
    v = train.head
    for core in train.cores:
        v = v @ np.tensordot(gm[: core.shape[0]], core, axes=1)
    return float(v[0])


def pair_expectation(left, right) -> float:
    """``E[left * right]`` without materializing the Kronecker product."""
    if left.d != right.d:
        raise ValidationError(f"trains over {left.d} and {right.d} variables")
    kmax = max(a + b for a, b in zip(left.degrees, right.degrees))
    return kernels.pair_expectation(
        left.head, left.cores, right.head, right.cores, gaussian_moments(kmax)
    )


class ComponentMoments:
    """Moment engine for one Gaussian component.

    Caches first-order trains, trains of every sub-monomial built so far,
    and scalar moments keyed by multi-index. When the product of two cached
    trains would exceed ``rank_budget`` the expectation is contracted
    directly (exact, since expectations factor across the ``eta_i``).
    """

    def __init__(self, component: GaussianComponent, rank_budget=DEFAULT_RANK_BUDGET):
        self.component = component
        self.d = component.dimension
        self.rank_budget = rank_budget
        self.first = [first_order_tt(component, j) for j in range(self.d)]
        self._trains = {}
        self._values = {(0,) * self.d: 1.0}
        self.contracted = 0

    def train(self, alpha) -> FunctionalTensorTrain:
        alpha = tuple(alpha)
        if sum(alpha) == 1:
            return self.first[alpha.index(1)]
        if sum(alpha) == 0:
            raise ValidationError("the zero multi-index has no train; its moment is 1")
        t = self._trains.get(alpha)
        if t is None:
            a1, a2 = split(alpha)
            t = tt_product(self.train(a1), self.train(a2))
            self._trains[alpha] = t
        return t

    def moment(self, alpha) -> float:
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.d:
            raise ValidationError(f"multi-index of length {len(alpha)} for d={self.d}")
        q = self._values.get(alpha)
        if q is not None:
            return q
        if sum(alpha) == 1:
            q = tt_expectation(self.first[alpha.index(1)])
        else:
            a1, a2 = split(alpha)
            t1, t2 = self.train(a1), self.train(a2)
            rank = max(x * y for x, y in zip(t1.ranks, t2.ranks))
            if rank <= self.rank_budget:
                q = tt_expectation(tt_product(t1, t2))
            else:
                q = pair_expectation(t1, t2)
                self.contracted += 1
        self._values[alpha] = q
        return q


def component_moment(component, alpha, cache=None, rank_budget=DEFAULT_RANK_BUDGET):
    """``E[xi**alpha]`` under one component; pass a :class:`ComponentMoments`
    as ``cache`` to reuse trains across calls."""
    if cache is None:
        cache = ComponentMoments(component, rank_budget)
    return cache.moment(alpha)


def mixture_moment(mix: GaussianMixture, alpha, engines=None) -> float:
    """``m_alpha = sum_i w_i q_{alpha,i}``."""
    if engines is None:
        engines = [ComponentMoments(c) for c in mix.components]
    return float(sum(w * e.moment(alpha) for w, e in zip(mix.weights, engines)))


@dataclass(frozen=True, eq=False)
class MomentTable:
    """All mixture moments up to a total order, in graded-lex order."""

    index_set: MultiIndexSet
    values: np.ndarray
    provenance: tuple

    @property
    def order(self) -> int:
        return self.index_set.p

    def value(self, alpha) -> float:
        return float(self.values[self.index_set.position(alpha)])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha", "value", "provenance"])
            for a, v, src in zip(self.index_set, self.values, self.provenance):
                w.writerow([" ".join(map(str, a)), repr(float(v)), src])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        alphas = [tuple(int(x) for x in r["alpha"].split()) for r in rows]
        d = len(alphas[0])
        p = max(sum(a) for a in alphas)
        idx = enumerate_indices(d, p)
        if alphas != list(idx.indices):
            raise ValidationError(f"{path}: rows are not a complete graded-lex table")
        values = np.array([float(r["value"]) for r in rows])
        return cls(idx, values, tuple(r["provenance"] for r in rows))


def moment_table(mix: GaussianMixture, p: int, rank_budget=DEFAULT_RANK_BUDGET,
                 threads: int = 1) -> MomentTable:
    """Moments of every monomial of total order ``<= 2p``."""
    if p < 0:
        raise ValidationError(f"p must be >= 0, got {p}")
    idx = enumerate_indices(mix.dimension, 2 * p)

    def run(component):
        engine = ComponentMoments(component, rank_budget)
        return np.array([engine.moment(a) for a in idx])

    if threads and threads > 1 and len(mix) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_component = list(pool.map(run, mix.components))
    else:
        per_component = [run(c) for c in mix.components]
    values = np.zeros(idx.n)
    for w, q in zip(mix.weights, per_component):
        values += w * q
    values[0] = 1.0
    values.setflags(write=False)
    return MomentTable(idx, values, ("tensor-train",) * idx.n)


def _isserlis(mean, cov, indices):
    """Wick/Isserlis expansion with a nonzero mean: each factor is either a
    mean singleton or paired with another factor through the covariance."""

    @functools.lru_cache(maxsize=None)
    def rec(rest):
        if not rest:
            return 1.0
        first, tail = rest[0], rest[1:]
        total = mean[first] * rec(tail)
        for j, other in enumerate(tail):
            c = cov[first, other]
            if c != 0.0:
                total += c * rec(tail[:j] + tail[j + 1:])
        return total

    return rec(tuple(sorted(indices)))


def oracle_moment(mix: GaussianMixture, alpha, max_order=ORACLE_MAX_ORDER) -> float:
    """Independent brute-force moment via Isserlis' theorem per component.

    Uses only the covariances (never the Cholesky factors or trains).
    """
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != mix.dimension:
        raise ValidationError(f"multi-index of length {len(alpha)} for d={mix.dimension}")
    if sum(alpha) > max_order:
        raise CapacityError(f"oracle limited to |alpha| <= {max_order}, got {sum(alpha)}")
    factors = [k for k, a in enumerate(alpha) for _ in range(a)]
    return float(
        sum(
            w * _isserlis(tuple(c.mean), c.covariance, factors)
            for w, c in zip(mix.weights, mix.components)
        )
    )


def oracle_scale(mix: GaussianMixture, alpha) -> float:
    """Isserlis expansion with every term taken in absolute value; the
    natural magnitude for relative comparisons when moments cancel."""
    factors = [k for k, a in enumerate(alpha) for _ in range(a)]
    return float(
        sum(
            w * _isserlis(tuple(np.abs(c.mean)), np.abs(c.covariance), factors)
            for w, c in zip(mix.weights, mix.components)
        )
    )
