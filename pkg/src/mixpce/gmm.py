"""Gaussian-mixture input distributions and block-independent parameter groups.

Random draws use numpy's PCG64 bit generator, so a seed reproduces the same
candidate pool on every platform numpy supports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import special, stats

from .errors import ValidationError

LOG_2PI = np.log(2.0 * np.pi)


def rng_from_seed(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True, eq=False)
class GaussianComponent:
    """One multivariate normal ``N(mean, covariance)``.

    The lower Cholesky factor is computed once at construction; nearly
    singular covariances are rejected rather than jittered.
    """

    mean: np.ndarray
    covariance: np.ndarray
    cholesky_factor: np.ndarray = None

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        d = mean.shape[0]
        if mean.ndim != 1 or cov.shape != (d, d):
            raise ValidationError(
                f"mean has shape {mean.shape} but covariance has shape {cov.shape}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValidationError("mean and covariance must be finite")
        scale = max(np.abs(cov).max(), np.finfo(float).tiny)
        if np.abs(cov - cov.T).max() > 1e-12 * scale:
            raise ValidationError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValidationError("covariance is not positive definite") from exc
        pivots = np.diag(chol) ** 2
        if pivots.min() < 1e-12 * np.diag(cov).max():
            raise ValidationError(
                f"covariance is numerically singular (smallest pivot {pivots.min():.3e})"
            )
        mean.setflags(write=False)
        cov.setflags(write=False)
        chol.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "cholesky_factor", chol)

    @property
    def dimension(self) -> int:
        return self.mean.shape[0]

    def whiten(self):
        """Return ``(A, mu)`` with ``xi = A @ eta + mu`` for ``eta ~ N(0, I)``."""
        return self.cholesky_factor, self.mean

    def logpdf(self, points) -> np.ndarray:
        points = np.atleast_2d(points)
        z = np.linalg.solve(self.cholesky_factor, (points - self.mean).T)
        logdet = 2.0 * np.log(np.diag(self.cholesky_factor)).sum()
        return -0.5 * (np.sum(z * z, axis=0) + logdet + self.dimension * LOG_2PI)


def whiten(component: GaussianComponent):
    return component.whiten()


class GaussianMixture:
    """Weighted sum of Gaussian components sharing one dimension."""

    def __init__(self, weights, components):
        weights = np.atleast_1d(np.asarray(weights, dtype=float))
        components = list(components)
        if len(components) == 0 or len(components) != weights.shape[0]:
            raise ValidationError(
                f"{weights.shape[0]} weights for {len(components)} components"
            )
        if np.any(weights <= 0):
            raise ValidationError("mixture weights must be strictly positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValidationError(f"mixture weights sum to {weights.sum():.15g}, not 1")
        dims = {c.dimension for c in components}
        if len(dims) != 1:
            raise ValidationError(f"components have different dimensions {sorted(dims)}")
        weights.setflags(write=False)
        self.weights = weights
        self.components = tuple(components)
        self.dimension = dims.pop()

    @classmethod
    def from_arrays(cls, weights, means, covariances):
        return cls(
            weights,
            [GaussianComponent(m, c) for m, c in zip(means, covariances)],
        )

    @classmethod
    def standard_normal(cls, d):
        return cls([1.0], [GaussianComponent(np.zeros(d), np.eye(d))])

    def __len__(self):
        return len(self.components)

    def __repr__(self):
        return f"GaussianMixture(d={self.dimension}, r={len(self)})"

    def _check_points(self, points):
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[None, :]
        if points.shape[-1] != self.dimension:
            raise ValidationError(
                f"points have {points.shape[-1]} coordinates, mixture has {self.dimension}"
            )
        return points

    def logpdf(self, points) -> np.ndarray:
        points = self._check_points(points)
        terms = np.stack(
            [np.log(w) + c.logpdf(points) for w, c in zip(self.weights, self.components)]
        )
        return special.logsumexp(terms, axis=0)

    def pdf(self, points) -> np.ndarray:
        return np.exp(self.logpdf(points))

    def mean(self) -> np.ndarray:
        return sum(w * c.mean for w, c in zip(self.weights, self.components))

    def covariance(self) -> np.ndarray:
        mu = self.mean()
        second = sum(
            w * (c.covariance + np.outer(c.mean, c.mean))
            for w, c in zip(self.weights, self.components)
        )
        return second - np.outer(mu, mu)

    def sample_labeled(self, count, rng):
        """Draw ``count`` points; also return which component produced each."""
        if count < 1:
            raise ValidationError(f"count must be >= 1, got {count}")
        u = rng.random(count)
        cdf = np.cumsum(self.weights)
        cdf[-1] = 1.0
        labels = np.searchsorted(cdf, u, side="right")
        eta = rng.standard_normal((count, self.dimension))
        out = np.empty((count, self.dimension))
        for i, comp in enumerate(self.components):
            rows = labels == i
            out[rows] = eta[rows] @ comp.cholesky_factor.T + comp.mean
        return out, labels

    def sample(self, count, seed) -> np.ndarray:
        rng = seed if isinstance(seed, np.random.Generator) else rng_from_seed(seed)
        return self.sample_labeled(count, rng)[0]

    def to_dict(self):
        return {
            "weights": self.weights.tolist(),
            "means": [c.mean.tolist() for c in self.components],
            "covariances": [c.covariance.tolist() for c in self.components],
        }


def density(mix: GaussianMixture, point) -> float:
    """Mixture density at a single point."""
    point = np.asarray(point, dtype=float)
    if point.ndim != 1 or point.shape[0] != mix.dimension:
        raise ValidationError(
            f"point must be a vector of length {mix.dimension}, got shape {point.shape}"
        )
    return float(mix.pdf(point)[0])


def sample(mix: GaussianMixture, count: int, seed) -> np.ndarray:
    return mix.sample(count, seed)


class Univariate:
    """A 1-D marginal: ``gaussian(mean, std)`` or ``gamma(shape, scale)``."""

    def __init__(self, kind, **params):
        if kind == "gaussian":
            mean, std = float(params.get("mean", 0.0)), float(params.get("std", 1.0))
            if not std > 0:
                raise ValidationError(f"gaussian std must be positive, got {std}")
            self.params = {"mean": mean, "std": std}
            self._dist = stats.norm(loc=mean, scale=std)
        elif kind == "gamma":
            shape, scale = float(params["shape"]), float(params["scale"])
            if not (shape > 0 and scale > 0):
                raise ValidationError("gamma shape and scale must be positive")
            self.params = {"shape": shape, "scale": scale}
            self._dist = stats.gamma(a=shape, scale=scale)
        else:
            raise ValidationError(f"unknown univariate kind {kind!r}")
        self.kind = kind
        self.dimension = 1

    def __repr__(self):
        args = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"Univariate({self.kind}, {args})"

    def pdf(self, points):
        return self._dist.pdf(np.asarray(points, dtype=float).reshape(-1))

    def moment(self, k: int) -> float:
        """Raw moment ``E[x**k]``."""
        if self.kind == "gamma":
            a, s = self.params["shape"], self.params["scale"]
            return float(np.exp(special.gammaln(a + k) - special.gammaln(a)) * s**k)
        mu, sd = self.params["mean"], self.params["std"]
        # E[(mu + sd z)^k] = sum_j C(k,j) mu^(k-j) sd^j E[z^j]
        return float(
            sum(
                special.comb(k, j, exact=True) * mu ** (k - j) * sd**j * gaussian_moment(j)
                for j in range(0, k + 1, 2)
            )
        )

    def recurrence(self, order: int):
        """Monic three-term recurrence coefficients ``(a_k, b_k)``, k < order+1.

        ``P_{k+1}(x) = (x - a_k) P_k(x) - b_k P_{k-1}(x)``.
        """
        k = np.arange(order + 1, dtype=float)
        if self.kind == "gaussian":
            a = np.full(order + 1, self.params["mean"])
            b = k * self.params["std"] ** 2
        else:
            shape, s = self.params["shape"], self.params["scale"]
            a = s * (2.0 * k + shape)
            b = s**2 * k * (k + shape - 1.0)
        return a, b

    def sample(self, count, rng):
        if self.kind == "gaussian":
            return self.params["mean"] + self.params["std"] * rng.standard_normal(count)
        return rng.gamma(self.params["shape"], self.params["scale"], size=count)

    def to_dict(self):
        return dict(self.params)


def gaussian_moment(k: int) -> float:
    """``E[z**k]`` for standard normal ``z``: ``(k-1)!!`` for even k, else 0."""
    if k % 2:
        return 0.0
    return float(special.factorial2(k - 1, exact=True)) if k else 1.0


@dataclass(frozen=True, eq=False)
class Group:
    indices: tuple
    dist: object  # GaussianMixture or Univariate

    @property
    def kind(self):
        return "mixture" if isinstance(self.dist, GaussianMixture) else self.dist.kind


class ParameterGroups:
    """Partition of coordinates into mutually independent blocks."""

    def __init__(self, dimension, groups):
        self.dimension = int(dimension)
        self.groups = tuple(groups)
        seen = []
        for g in self.groups:
            if len(g.indices) != g.dist.dimension:
                raise ValidationError(
                    f"group {list(g.indices)} has {len(g.indices)} indices but its "
                    f"distribution has dimension {g.dist.dimension}"
                )
            seen.extend(g.indices)
        if sorted(seen) != list(range(self.dimension)):
            raise ValidationError(
                "groups must be disjoint and cover coordinates 0..d-1 exactly"
            )

    @classmethod
    def single(cls, mix: GaussianMixture):
        return cls(mix.dimension, [Group(tuple(range(mix.dimension)), mix)])

    @property
    def is_single_mixture(self):
        return len(self.groups) == 1 and self.groups[0].kind == "mixture"

    @property
    def mixture(self) -> GaussianMixture:
        if not self.is_single_mixture:
            raise ValidationError("distribution is not a single mixture block")
        return self.groups[0].dist

    def sample(self, count, seed) -> np.ndarray:
        rng = seed if isinstance(seed, np.random.Generator) else rng_from_seed(seed)
        out = np.empty((count, self.dimension))
        for g in self.groups:
            if isinstance(g.dist, GaussianMixture):
                out[:, list(g.indices)] = g.dist.sample_labeled(count, rng)[0]
            else:
                out[:, g.indices[0]] = g.dist.sample(count, rng)
        return out

    def pdf(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.ones(points.shape[0])
        for g in self.groups:
            out *= g.dist.pdf(points[:, list(g.indices)])
        return out

    def to_dict(self):
        groups = []
        for g in self.groups:
            entry = {"indices": list(g.indices), "kind": g.kind}
            entry.update(g.dist.to_dict())
            groups.append(entry)
        return {"dimension": self.dimension, "groups": groups}

    @classmethod
    def from_dict(cls, spec):
        return parse_distribution(spec)


def parse_distribution(spec) -> ParameterGroups:
    """Build :class:`ParameterGroups` from the JSON mixture-spec layout.

    Indices in the file are 0-based. Weights must sum to 1 within 1e-9; they
    are renormalized exactly after that check.
    """
    try:
        d = int(spec["dimension"])
        raw_groups = spec["groups"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"distribution spec missing field: {exc}") from exc
    groups = []
    for entry in raw_groups:
        try:
            kind = entry["kind"]
            indices = tuple(int(i) for i in entry["indices"])
            if kind == "mixture":
                w = np.asarray(entry["weights"], dtype=float)
                if abs(w.sum() - 1.0) > 1e-9:
                    raise ValidationError(f"weights sum to {w.sum():.12g}, not 1")
                dist = GaussianMixture.from_arrays(
                    w / w.sum(), entry["means"], entry["covariances"]
                )
            elif kind in ("gaussian", "gamma"):
                params = {k: v for k, v in entry.items() if k not in ("kind", "indices")}
                dist = Univariate(kind, **params)
            else:
                raise ValidationError(f"unknown group kind {kind!r}")
        except KeyError as exc:
            raise ValidationError(f"group entry missing field {exc}") from exc
        groups.append(Group(indices, dist))
    return ParameterGroups(d, groups)


def load_distribution(path) -> ParameterGroups:
    try:
        spec = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read distribution spec {path}: {exc}") from exc
    return parse_distribution(spec)


def as_groups(dist) -> ParameterGroups:
    if isinstance(dist, ParameterGroups):
        return dist
    if isinstance(dist, GaussianMixture):
        return ParameterGroups.single(dist)
    raise ValidationError(f"not a distribution: {dist!r}")


def random_mixture(d, r, rng, mean_scale=1.0, cov_scale=1.0, min_eig=0.2):
    """Random mixture used by tests, benchmarks and synthetic oracles."""
    weights = rng.dirichlet(np.full(r, 4.0))
    means = mean_scale * rng.uniform(-1.0, 1.0, size=(r, d))
    covs = []
    for _ in range(r):
        q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        eig = cov_scale * rng.uniform(min_eig, 1.0, size=d)
        covs.append((q * eig) @ q.T)
    return GaussianMixture.from_arrays(weights / weights.sum(), means, covs)
