"""Orthonormal multivariate polynomial basis ``Psi(xi) = L^{-1} b(xi)``.

``b`` holds the monomials of total order ``<= p`` in graded-lex order and
``M = L L^T`` is their Gram (moment) matrix under the input density. ``L^{-1}``
is never formed; evaluation uses forward substitution.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from . import kernels
from .errors import NumericalError, ValidationError
from .gmm import GaussianMixture, ParameterGroups, Univariate, as_groups
from .indexing import MultiIndexSet, enumerate_indices
from .moments import DEFAULT_RANK_BUDGET, MomentTable, moment_table

log = logging.getLogger(__name__)

_EVAL_CHUNK = 65536


@dataclass(frozen=True, eq=False)
class MomentMatrix:
    M: np.ndarray
    index_set: MultiIndexSet
    regularization: float = 0.0


def build_moment_matrix(table: MomentTable, idx: MultiIndexSet) -> MomentMatrix:
    """``M[i, j] = m[alpha_i + alpha_j]`` looked up from ``table``."""
    if table.index_set.d != idx.d or table.order < 2 * idx.p:
        raise ValidationError(
            f"moment table (d={table.index_set.d}, order {table.order}) cannot fill "
            f"a moment matrix for d={idx.d}, p={idx.p}"
        )
    n = idx.n
    values = table.values
    pos = table.index_set.position
    M = np.empty((n, n))
    for i, a in enumerate(idx):
        for j in range(i, n):
            b = idx[j]
            M[i, j] = M[j, i] = values[pos(tuple(x + y for x, y in zip(a, b)))]
    return MomentMatrix(M, idx)


@dataclass(frozen=True)
class EpsPolicy:
    """Regularization schedule, all relative to ``trace(M) / n``.

    Plain Cholesky is tried first; if it fails or a pivot ``L_ii**2`` falls
    below ``pivot_floor``, ``eps`` walks ``start, start*factor, ...`` up to
    ``stop``.
    """

    start: float = 1e-12
    stop: float = 1e-6
    factor: float = 10.0
    pivot_floor: float = 1e-10


def _try_cholesky(M, floor):
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return None
    if np.min(np.diag(L)) ** 2 < floor:
        return None
    return L


@dataclass(frozen=True, eq=False)
class BasisSet:
    """Cholesky-orthonormalized monomial basis."""

    L: np.ndarray
    index_set: MultiIndexSet
    epsilon: float = 0.0
    condition: float = field(default=float("nan"))

    @property
    def d(self):
        return self.index_set.d

    @property
    def p(self):
        return self.index_set.p

    @property
    def n(self):
        return self.index_set.n

    def monomials(self, points) -> np.ndarray:
        points = _as_points(points, self.d)
        return kernels.monomial_matrix(points, self.index_set.as_array())

    def evaluate(self, points, upto=None) -> np.ndarray:
        """``(m, k)`` matrix of ``Psi_0..Psi_{k-1}`` at each row; ``k = upto or n``.

        Only the leading ``k`` monomials are needed for the first ``k``
        functions because ``L`` is lower-triangular.
        """
        points = _as_points(points, self.d)
        k = self.n if upto is None else int(upto)
        exps = self.index_set.as_array()[:k]
        Lk = self.L[:k, :k]
        out = np.empty((points.shape[0], k))
        for s in range(0, points.shape[0], _EVAL_CHUNK):
            B = kernels.monomial_matrix(points[s:s + _EVAL_CHUNK], exps)
            out[s:s + B.shape[0]] = solve_triangular(Lk, B.T, lower=True).T
        return out

    def monomial_coefficients(self, c) -> np.ndarray:
        """``c0`` with ``c0 . b(xi) = c . Psi(xi)``, i.e. ``L^T c0 = c``."""
        return solve_triangular(self.L, np.asarray(c, dtype=float), lower=True, trans="T")

    def to_dict(self):
        return {
            "kind": "cholesky",
            "d": self.d,
            "p": self.p,
            "indices": [list(a) for a in self.index_set],
            "L": [self.L[i, : i + 1].tolist() for i in range(self.n)],
            "epsilon": self.epsilon,
            "condition": self.condition,
        }

    @classmethod
    def from_dict(cls, data):
        idx = enumerate_indices(int(data["d"]), int(data["p"]))
        if [tuple(a) for a in data["indices"]] != list(idx.indices):
            raise ValidationError("basis export index set is not in graded-lex order")
        n = idx.n
        L = np.zeros((n, n))
        for i, row in enumerate(data["L"]):
            L[i, : i + 1] = row
        return cls(L, idx, float(data.get("epsilon", 0.0)),
                   float(data.get("condition", float("nan"))))


def _as_points(points, d):
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(1, -1) if d > 1 or points.shape[0] == 1 else points[:, None]
    if points.shape[1] != d:
        raise ValidationError(f"points have {points.shape[1]} coordinates, basis has {d}")
    if not np.all(np.isfinite(points)):
        raise ValidationError("points must be finite")
    return points


def factorize(mm: MomentMatrix, eps_policy: EpsPolicy = EpsPolicy()) -> BasisSet:
    """Cholesky-factor the moment matrix, regularizing if needed.

    The shift ``eps`` is added to every diagonal entry except the constant
    monomial's, which keeps ``L[0, 0] = 1`` and hence ``Psi_0 = 1`` exactly.
    """
    M = np.asarray(mm.M, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValidationError(f"moment matrix must be square, got {M.shape}")
    if np.abs(M - M.T).max() > 1e-12 * np.abs(M).max():
        raise ValidationError("moment matrix is not symmetric")
    scale = np.trace(M) / n
    floor = eps_policy.pivot_floor * scale
    L = _try_cholesky(M, floor)
    eps = 0.0
    if L is None:
        shift = np.ones(n)
        shift[0] = 0.0
        k = 0
        while True:
            eps = eps_policy.start * eps_policy.factor**k * scale
            if eps > eps_policy.stop * scale * (1 + 1e-9):
                diag = np.linalg.eigvalsh(M)
                raise NumericalError(
                    f"moment matrix not positive definite after eps up to "
                    f"{eps_policy.stop:g}*trace/n (eigenvalues {diag.min():.3e}.."
                    f"{diag.max():.3e}, trace/n {scale:.3e})"
                )
            L = _try_cholesky(M + np.diag(eps * shift), floor)
            if L is not None:
                break
            k += 1
        log.warning("moment matrix regularized with eps=%.3e", eps)
    piv = np.diag(L)
    condition = float((piv.max() / piv.min()) ** 2)
    log.info("basis n=%d eps=%.3e pivot-condition=%.3e", n, eps, condition)
    return BasisSet(L, mm.index_set, eps, condition)


def eval_basis(basis, points) -> np.ndarray:
    return basis.evaluate(points)


def build_mixture_basis(mix: GaussianMixture, p: int, eps_policy=EpsPolicy(),
                        rank_budget=DEFAULT_RANK_BUDGET, threads=1) -> BasisSet:
    table = moment_table(mix, p, rank_budget=rank_budget, threads=threads)
    return factorize(build_moment_matrix(table, enumerate_indices(mix.dimension, p)),
                     eps_policy)


class UnivariateBasis:
    """Orthonormal polynomials of one variable from a three-term recurrence."""

    def __init__(self, dist: Univariate, p: int):
        self.dist = dist
        self.index_set = enumerate_indices(1, p)
        self.a, self.b = dist.recurrence(p)

    d = 1

    @property
    def p(self):
        return self.index_set.p

    @property
    def n(self):
        return self.p + 1

    def evaluate(self, points, upto=None) -> np.ndarray:
        x = _as_points(points, 1)[:, 0]
        out = np.empty((x.shape[0], self.n))
        out[:, 0] = 1.0
        if self.p >= 1:
            out[:, 1] = (x - self.a[0]) / np.sqrt(self.b[1])
        for k in range(1, self.p):
            out[:, k + 1] = (
                (x - self.a[k]) * out[:, k] - np.sqrt(self.b[k]) * out[:, k - 1]
            ) / np.sqrt(self.b[k + 1])
        return out if upto is None else out[:, :upto]

    def to_dict(self):
        return {"kind": "univariate", "family": self.dist.kind, "p": self.p,
                **self.dist.params}

    @classmethod
    def from_dict(cls, data):
        params = {k: v for k, v in data.items() if k not in ("kind", "family", "p")}
        return cls(Univariate(data["family"], **params), int(data["p"]))


class GroupedBasis:
    """Products of per-group orthonormal bases, total order ``<= p`` overall."""

    def __init__(self, groups: ParameterGroups, p: int, group_bases):
        self.groups = groups
        self.group_bases = list(group_bases)
        self.index_set = enumerate_indices(groups.dimension, p)
        exps = self.index_set.as_array()
        self._lookup = []
        for g, gb in zip(groups.groups, self.group_bases):
            sub = exps[:, list(g.indices)]
            self._lookup.append(np.array([gb.index_set.position(tuple(r)) for r in sub]))
        self.epsilon = max((getattr(gb, "epsilon", 0.0) for gb in self.group_bases),
                           default=0.0)

    @property
    def d(self):
        return self.index_set.d

    @property
    def p(self):
        return self.index_set.p

    @property
    def n(self):
        return self.index_set.n

    def evaluate(self, points, upto=None) -> np.ndarray:
        points = _as_points(points, self.d)
        k = self.n if upto is None else int(upto)
        out = np.ones((points.shape[0], k))
        for g, gb, look in zip(self.groups.groups, self.group_bases, self._lookup):
            vals = gb.evaluate(points[:, list(g.indices)])
            out *= vals[:, look[:k]]
        return out

    def to_dict(self):
        return {
            "kind": "grouped",
            "d": self.d,
            "p": self.p,
            "distribution": self.groups.to_dict(),
            "groups": [gb.to_dict() for gb in self.group_bases],
        }

    @classmethod
    def from_dict(cls, data):
        groups = ParameterGroups.from_dict(data["distribution"])
        return cls(groups, int(data["p"]), [basis_from_dict(b) for b in data["groups"]])


def build_grouped_basis(groups, p: int, eps_policy=EpsPolicy(),
                        rank_budget=DEFAULT_RANK_BUDGET, threads=1):
    """Basis for block-independent inputs.

    A single mixture block covering every coordinate gives the plain
    Cholesky basis; otherwise each block gets its own orthonormal basis and
    the result is their tensor product truncated at total order ``p``.
    """
    groups = as_groups(groups)
    if groups.is_single_mixture:
        return build_mixture_basis(groups.mixture, p, eps_policy, rank_budget, threads)
    bases = []
    for g in groups.groups:
        if isinstance(g.dist, GaussianMixture):
            bases.append(build_mixture_basis(g.dist, p, eps_policy, rank_budget, threads))
        else:
            bases.append(UnivariateBasis(g.dist, p))
    return GroupedBasis(groups, p, bases)


build_basis = build_grouped_basis


def basis_from_dict(data):
    kind = data.get("kind")
    if kind == "cholesky":
        return BasisSet.from_dict(data)
    if kind == "grouped":
        return GroupedBasis.from_dict(data)
    if kind == "univariate":
        return UnivariateBasis.from_dict(data)
    raise ValidationError(f"unknown basis kind {kind!r}")
