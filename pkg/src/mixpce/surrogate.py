"""Fitted expansion ``y*(xi) = sum_a c_a Psi_a(xi)`` with closed-form statistics,
error metrics, density estimation and a self-contained JSON model format."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .basis import basis_from_dict
from .errors import ValidationError
from .gmm import ParameterGroups, as_groups

KDE_GRID = 512


@dataclass(eq=False)
class SparseSurrogate:
    """Orthonormal-basis expansion with a sparse coefficient vector.

    Parameters
    ----------
    basis : BasisSet or GroupedBasis
    coefficients : (n,) array
    distribution : ParameterGroups, optional
        Input law; needed for sampling-based summaries such as ``density``.
    metadata : dict
        Free-form run information (``d``, ``p``, ``s``, ``epsilon``,
        ``strategy``, ``m_used`` ...).
    """

    basis: object
    coefficients: np.ndarray
    distribution: ParameterGroups | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if c.shape[0] != self.basis.n:
            raise ValidationError(f"{c.shape[0]} coefficients for a basis of size {self.basis.n}")
        self.coefficients = c
        if self.distribution is not None:
            self.distribution = as_groups(self.distribution)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.coefficients)

    def predict(self, points) -> np.ndarray:
        return predict(self, points)

    def stats(self):
        return stats(self)

    def to_dict(self):
        sup = self.support
        return {
            "format": "mixpce-model",
            "basis": self.basis.to_dict(),
            "distribution": None if self.distribution is None else self.distribution.to_dict(),
            "n": int(self.basis.n),
            "support": sup.tolist(),
            "values": self.coefficients[sup].tolist(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data):
        if data.get("format") != "mixpce-model":
            raise ValidationError("not a mixpce model file")
        basis = basis_from_dict(data["basis"])
        c = np.zeros(int(data["n"]))
        c[np.asarray(data["support"], dtype=int)] = data["values"]
        dist = data.get("distribution")
        dist = None if dist is None else ParameterGroups.from_dict(dist)
        return cls(basis, c, dist, dict(data.get("metadata", {})))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path):
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read model {path}: {exc}") from exc
        return cls.from_dict(data)


def predict(model: SparseSurrogate, points) -> np.ndarray:
    """Evaluate the expansion, touching only the support columns."""
    sup = model.support
    points = np.asarray(points, dtype=float)
    m = 1 if points.ndim == 1 and model.basis.d > 1 else points.shape[0]
    if sup.size == 0:
        return np.zeros(m)
    Psi = model.basis.evaluate(points, upto=int(sup[-1]) + 1)
    return Psi[:, sup] @ model.coefficients[sup]


def stats(model: SparseSurrogate):
    """Closed-form mean ``c_0`` and variance ``sum_{a>0} c_a^2``.

    Valid because the basis is orthonormal with ``Psi_0 = 1``.
    """
    c = model.coefficients
    return float(c[0]), float(np.sum(c[1:] ** 2))


def relative_error(model, Phi, y, return_flag=False):
    """``||Phi c - y|| / ||y||``.

    ``model`` may be a ``SparseSurrogate`` or a plain coefficient vector. When
    ``||y|| = 0`` the absolute error ``||Phi c||`` is returned instead and the
    flag (``return_flag=True``) reports it.
    """
    c = model.coefficients if isinstance(model, SparseSurrogate) else np.asarray(model, float)
    y = np.asarray(y, dtype=float)
    r = float(np.linalg.norm(np.asarray(Phi) @ c - y))
    ny = float(np.linalg.norm(y))
    absolute = ny == 0.0
    value = r if absolute else r / ny
    if absolute and not return_flag:
        warnings.warn("||y|| = 0; returning the absolute error", RuntimeWarning, stacklevel=2)
    return (value, absolute) if return_flag else value


def silverman_bandwidth(values) -> float:
    """``0.9 min(std, IQR/1.34) N^{-1/5}`` (falls back to std or 1 when degenerate)."""
    values = np.asarray(values, dtype=float)
    sd = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    q75, q25 = np.percentile(values, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    if spread <= 0:
        spread = sd if sd > 0 else 1.0
    return 0.9 * spread * values.size ** (-0.2)


def kde(values, bandwidth=None, grid=None, grid_size=KDE_GRID):
    """Gaussian kernel density estimate on a regular grid.

    Returns ``(grid, density, bandwidth)``. The default grid spans the data
    range padded by four bandwidths.
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    h = silverman_bandwidth(values) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise ValidationError("bandwidth must be positive")
    if grid is None:
        grid = np.linspace(values.min() - 4 * h, values.max() + 4 * h, grid_size)
    grid = np.asarray(grid, dtype=float)
    dens = np.zeros_like(grid)
    for s in range(0, values.size, 4096):
        z = (grid[:, None] - values[None, s:s + 4096]) / h
        dens += np.exp(-0.5 * z * z).sum(axis=1)
    dens /= values.size * h * math.sqrt(2 * math.pi)
    return grid, dens, h


def count_modes(density, rel_height=0.01) -> int:
    """Interior local maxima at least ``rel_height`` times the global peak."""
    f = np.asarray(density, dtype=float)
    if f.size < 3:
        return 0
    floor = rel_height * f.max()
    peak = (f[1:-1] > f[:-2]) & (f[1:-1] >= f[2:]) & (f[1:-1] >= floor)
    return int(np.count_nonzero(peak))


def density(model: SparseSurrogate, n_samples=100_000, bandwidth=None, seed=0,
            grid_size=KDE_GRID):
    """KDE of the surrogate's pushforward of the input distribution.

    Returns ``(grid, values, bandwidth)``.
    """
    if n_samples < 1000:
        raise ValidationError("density estimation needs at least 1000 samples")
    if model.distribution is None:
        raise ValidationError("model has no input distribution to sample")
    xs = model.distribution.sample(n_samples, seed)
    return kde(predict(model, xs), bandwidth, grid_size=grid_size)


@dataclass
class ValidationReport:
    training_error: float | None
    testing_error: float
    mean: float
    std: float
    m_used: int | None = None
    grid: np.ndarray | None = None
    density: np.ndarray | None = None
    bandwidth: float | None = None
    kde_samples: int | None = None
    modes: int | None = None

    def __post_init__(self):
        if self.testing_error < 0 or (self.training_error or 0) < 0 or self.std < 0:
            raise ValidationError("errors and std must be nonnegative")

    def summary(self):
        return {
            "mean": self.mean,
            "std": self.std,
            "train_err": self.training_error,
            "test_err": self.testing_error,
            "m_used": self.m_used,
            "kde_bandwidth": self.bandwidth,
            "kde_samples": self.kde_samples,
            "modes": self.modes,
        }


def validate(model: SparseSurrogate, points, y, training_error=None, kde_samples=100_000,
             seed=0) -> ValidationReport:
    """Testing error on held-out ``(points, y)`` plus statistics and a density grid."""
    y = np.asarray(y, dtype=float)
    pred = predict(model, points)
    ny = float(np.linalg.norm(y))
    err = float(np.linalg.norm(pred - y)) / ny if ny > 0 else float(np.linalg.norm(pred))
    mean, var = stats(model)
    grid = dens = h = modes = None
    if model.distribution is not None and kde_samples:
        grid, dens, h = density(model, kde_samples, seed=seed)
        modes = count_modes(dens)
    return ValidationReport(training_error, err, mean, math.sqrt(var),
                            model.metadata.get("m_used"), grid, dens, h,
                            kde_samples if grid is not None else None, modes)
