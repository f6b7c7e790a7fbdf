"""l0-constrained least squares (CoSaMP) and RIP / error-bound instrumentation."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ValidationError


@dataclass(frozen=True, eq=False)
class RegressionProblem:
    """``Phi c = y`` with at most ``s`` nonzeros, stop once ``||Phi c - y|| <= epsilon``."""

    Phi: np.ndarray
    y: np.ndarray
    s: int
    epsilon: float = 0.0

    def __post_init__(self):
        Phi = np.asarray(self.Phi, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if Phi.ndim != 2 or Phi.shape[0] != y.shape[0]:
            raise ValidationError(f"Phi {Phi.shape} and y {y.shape} do not match")
        m = Phi.shape[0]
        if m < 1 or not 1 <= self.s <= m:
            raise ValidationError(f"need 1 <= s <= m, got s={self.s}, m={m}")
        if self.epsilon < 0:
            raise ValidationError("epsilon must be nonnegative")
        object.__setattr__(self, "Phi", Phi)
        object.__setattr__(self, "y", y)


@dataclass(frozen=True, eq=False)
class SparseSolution:
    c: np.ndarray
    support: tuple
    residual_norm: float
    iterations: int

    def to_dict(self, s=None, epsilon=None):
        return {
            "support": list(self.support),
            "values": [float(self.c[i]) for i in self.support],
            "residual_norm": self.residual_norm,
            "s": s,
            "epsilon": epsilon,
            "iterations": self.iterations,
        }


def default_sparsity(m: int) -> int:
    """Largest-integer-below-m/3 rule, at least 1."""
    return max(1, m // 3)


def resolve_epsilon(epsilon, y, mode="relative") -> float:
    """Absolute residual threshold from an absolute or ``||y||``-relative one."""
    if mode == "relative":
        return float(epsilon) * float(np.linalg.norm(y))
    if mode == "absolute":
        return float(epsilon)
    raise ValidationError(f"epsilon mode must be 'relative' or 'absolute', got {mode!r}")


def top_k(values, k) -> np.ndarray:
    """Indices of the ``k`` largest ``|values|``; ties go to the lower index."""
    values = np.abs(np.asarray(values))
    k = min(k, values.shape[0])
    order = np.lexsort((np.arange(values.shape[0]), -values))
    return np.sort(order[:k])


def ls_on_support(Phi, y, support) -> np.ndarray:
    """Least-squares coefficients on the columns ``support`` (QR based).

    Rank-deficient or underdetermined column sets fall back to the
    minimum-norm solution with a warning.
    """
    support = np.asarray(support, dtype=int)
    A = np.asarray(Phi)[:, support]
    y = np.asarray(y, dtype=float)
    if support.size == 0:
        return np.zeros(0)
    m, k = A.shape
    if k <= m:
        Q, R = np.linalg.qr(A)
        diag = np.abs(np.diag(R))
        if diag.min() > 1e-12 * diag.max():
            return solve_triangular(R, Q.T @ y, lower=False)
    warnings.warn(
        f"support least squares is rank deficient ({k} columns, {m} rows); "
        "using the minimum-norm solution",
        RuntimeWarning,
        stacklevel=2,
    )
    return np.linalg.lstsq(A, y, rcond=None)[0]


def _cgls(A, y, x, steps):
    """``steps`` conjugate-gradient iterations on the normal equations,
    warm-started at ``x``."""
    r = y - A @ x
    g = A.T @ r
    p = g.copy()
    gamma = g @ g
    for _ in range(steps):
        if gamma == 0.0:
            break
        q = A @ p
        qq = q @ q
        if qq == 0.0:
            break
        alpha = gamma / qq
        x = x + alpha * p
        r = r - alpha * q
        g = A.T @ r
        gamma_new = g @ g
        p = g + (gamma_new / gamma) * p
        gamma = gamma_new
    return x


def cosamp(problem: RegressionProblem, max_iter: int = 100, ls_iters=None) -> SparseSolution:
    """Compressive sampling matching pursuit.

    Each iteration merges the ``2s`` largest proxy entries ``Phi^T r`` with
    the current support, fits least squares on the merged set, prunes to the
    ``s`` largest coefficients and updates the residual. Stops when the
    residual drops to ``problem.epsilon``, the iterate stops changing, or
    after ``max_iter`` iterations, and returns the lowest-residual iterate.

    ``ls_iters=None`` solves each merged least-squares problem exactly;
    an integer runs that many warm-started CG steps instead (the inexact
    variant, whose residual decreases gradually so the ``epsilon`` stop
    controls the final accuracy).
    """
    Phi, y, s, eps = problem.Phi, problem.y, problem.s, problem.epsilon
    m, n = Phi.shape
    if 2 * s > m:
        warnings.warn(f"s={s} exceeds m/2={m / 2:g}; recovery is unreliable",
                      RuntimeWarning, stacklevel=2)
    c = np.zeros(n)
    r = y.copy()
    res = float(np.linalg.norm(r))
    best = SparseSolution(c.copy(), (), res, 0)
    if res <= eps:
        return best
    support = np.zeros(0, dtype=int)
    for it in range(1, max_iter + 1):
        proxy = Phi.T @ r
        merged = np.union1d(top_k(proxy, 2 * s), support)
        if ls_iters is None:
            b = ls_on_support(Phi, y, merged)
        else:
            b = _cgls(Phi[:, merged], y, c[merged], ls_iters)
        keep = top_k(b, s)
        new_support = merged[keep]
        c_new = np.zeros(n)
        c_new[new_support] = b[keep]
        r = y - Phi @ c_new
        res = float(np.linalg.norm(r))
        nz = np.flatnonzero(c_new)
        if res < best.residual_norm:
            best = SparseSolution(c_new.copy(), tuple(int(i) for i in nz), res, it)
        stalled = np.array_equal(new_support, support) and (
            np.linalg.norm(c_new - c) <= 1e-14 * max(np.linalg.norm(c_new), 1e-300)
        )
        c, support = c_new, new_support
        if res <= eps or stalled:
            break
    return SparseSolution(best.c, best.support, best.residual_norm, it)


@dataclass(frozen=True)
class RipEstimate:
    """Sampled restricted-isometry diagnostics for ``(1/m) Phi_S^T Phi_S``.

    ``kappa`` is the largest spectral deviation ``max(1 - lambda_min,
    lambda_max - 1)`` seen over the sampled column subsets. Certifying RIP
    is NP-hard, so this is only a lower bound on the true constant.
    ``frobenius`` is the largest ``||(1/m) Phi_S^T Phi_S - I||_F`` seen, the
    sufficient-condition quantity.
    """

    kappa: float
    frobenius: float
    lambda_min: float
    lambda_max: float
    trials: int


def rip_diagnostic(Phi, s: int, trials: int = 20, seed=0, subsets=None) -> RipEstimate:
    Phi = np.asarray(Phi, dtype=float)
    m, n = Phi.shape
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    s = min(s, n)
    if subsets is None:
        rng = np.random.Generator(np.random.PCG64(seed))
        subsets = [rng.choice(n, size=s, replace=False) for _ in range(trials)]
    lo, hi, fro = np.inf, -np.inf, 0.0
    for cols in subsets:
        A = Phi[:, np.sort(np.asarray(cols))]
        G = A.T @ A / m
        ev = np.linalg.eigvalsh(G)
        lo, hi = min(lo, ev[0]), max(hi, ev[-1])
        fro = max(fro, float(np.linalg.norm(G - np.eye(G.shape[0]))))
    kappa = float(max(1.0 - lo, hi - 1.0))
    return RipEstimate(kappa, fro, float(lo), float(hi), len(subsets))


def rip_sample_bound(sigma, s, kappa_s, eta) -> int:
    """Samples sufficient for the ``(s, kappa_s)`` RIP with probability ``1 - eta``
    when the basis products are sub-Gaussian with variance proxy ``sigma``."""
    if not (sigma > 0 and s > 0 and 0 < kappa_s < 1 and 0 < eta < 1):
        raise ValidationError("need sigma, s > 0 and 0 < kappa_s, eta < 1")
    return math.ceil(2.0 * math.log(2.0 / eta) * s**2 * sigma**2 / kappa_s**2)


def best_s_term(c, s) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    out = np.zeros_like(c)
    keep = top_k(c, s)
    out[keep] = c[keep]
    return out


@dataclass(frozen=True)
class CoefficientBound:
    alpha0: float
    alpha1: float
    tail_l1: float
    bound: float


def coefficient_error_bound(c_true, s, kappa_2s, m, noise_norm, residual) -> CoefficientBound:
    """``alpha0 ||c_s - c||_1 + alpha1 (||e|| + residual)`` with
    ``alpha0 = 1 + 1.7071 sqrt(1 + k) / (m (1 - k) sqrt(s))`` and
    ``alpha1 = 1 / (m (1 - k))``, ``k = kappa_2s < 1``."""
    if not 0 <= kappa_2s < 1:
        raise ValidationError(f"bound needs 0 <= kappa_2s < 1, got {kappa_2s}")
    alpha1 = 1.0 / (m * (1.0 - kappa_2s))
    alpha0 = 1.0 + 1.7071 * math.sqrt(1.0 + kappa_2s) * alpha1 / math.sqrt(s)
    tail = float(np.abs(best_s_term(c_true, s) - np.asarray(c_true)).sum())
    return CoefficientBound(alpha0, alpha1, tail,
                            alpha0 * tail + alpha1 * (noise_norm + residual))
