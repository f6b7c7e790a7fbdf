"""Built-in synthetic simulators with known ground truth.

Each entry couples an input distribution, an expansion order and a response
function. ``get(name, seed)`` builds a :class:`SyntheticProblem`.

``synthetic8d``
    d = 8, p = 3, a seeded 3-component correlated mixture. The response is
    ``Phi(xi) c`` over the orthonormal basis of that mixture, with a planted
    12-sparse ``c`` whose sorted magnitudes decay from 1 to 2e-4, plus a tiny
    deterministic per-point noise (std ``1e-6 / sqrt(200)``, so 200 samples
    carry noise of norm about 1e-6).
``bimodal``
    d = 2, two well separated components along ``xi_1``; response
    ``xi_1 + 0.1 xi_2^2 + 0.05 xi_1 xi_2``, whose distribution has two peaks.
``quadratic-ill``
    d = 4, two components with correlation 0.95 between all coordinates;
    response ``1 + xi_1 - 2 xi_2 xi_3 + 0.5 xi_4^2``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .basis import build_grouped_basis
from .errors import ValidationError
from .gmm import GaussianMixture, ParameterGroups, random_mixture, rng_from_seed

SYNTH_MAGNITUDES = (1.0, 0.5, 0.3, 0.2, 0.1, 0.05, 3e-3, 2e-3, 1e-3, 5e-4, 3e-4, 2e-4)
SYNTH_NOISE_NORM = 1e-6
SYNTH_REFERENCE_M = 200


@dataclass(eq=False)
class SyntheticProblem:
    name: str
    distribution: ParameterGroups
    p: int
    response: Callable
    description: str
    truth: np.ndarray | None = None
    basis: object = None
    noise_std: float = 0.0
    calls: int = field(default=0)

    def ensure_basis(self):
        if self.basis is None:
            self.basis = build_grouped_basis(self.distribution, self.p)
        return self.basis

    def __call__(self, point) -> float:
        self.calls += 1
        return float(self.response(np.asarray(point, dtype=float)[None, :])[0])

    def evaluate_many(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        self.calls += points.shape[0]
        return self.response(points)


def point_noise(points, std, tag=b"") -> np.ndarray:
    """Deterministic pseudo-noise: a standard normal seeded by each point's bytes."""
    out = np.empty(points.shape[0])
    for i, row in enumerate(np.ascontiguousarray(points, dtype=float)):
        h = hashlib.blake2b(tag + row.tobytes(), digest_size=8).digest()
        out[i] = np.random.Generator(np.random.PCG64(int.from_bytes(h, "little"))).standard_normal()
    return std * out


def planted_coefficients(n, magnitudes, seed) -> np.ndarray:
    """Sparse vector with the given magnitudes at seeded positions and signs."""
    rng = rng_from_seed(seed)
    k = len(magnitudes)
    if k > n:
        raise ValidationError("more planted terms than basis functions")
    pos = rng.choice(n, size=k, replace=False)
    signs = rng.choice([-1.0, 1.0], size=k)
    c = np.zeros(n)
    c[pos] = signs * np.asarray(magnitudes, dtype=float)
    return c


def synthetic_mixture(d=8, seed=0) -> GaussianMixture:
    return random_mixture(d, 3, rng_from_seed([seed, 8]))


def synthetic8d(seed=0, noise=True) -> SyntheticProblem:
    mix = synthetic_mixture(8, seed)
    dist = ParameterGroups.single(mix)
    prob = SyntheticProblem("synthetic8d", dist, 3, None, "planted sparse expansion, d=8 p=3")
    basis = prob.ensure_basis()
    c = planted_coefficients(basis.n, SYNTH_MAGNITUDES, [seed, 9])
    std = SYNTH_NOISE_NORM / np.sqrt(SYNTH_REFERENCE_M) if noise else 0.0
    tag = str(seed).encode()

    def response(points):
        y = basis.evaluate(points) @ c
        return y + point_noise(points, std, tag) if std else y

    prob.response, prob.truth, prob.noise_std = response, c, std
    return prob


def bimodal(seed=0) -> SyntheticProblem:
    mix = GaussianMixture.from_arrays(
        [0.5, 0.5],
        [[-2.0, 0.0], [2.0, 0.5]],
        [[[0.25, 0.05], [0.05, 0.5]], [[0.25, -0.05], [-0.05, 0.5]]],
    )

    def response(x):
        return x[:, 0] + 0.1 * x[:, 1] ** 2 + 0.05 * x[:, 0] * x[:, 1]

    return SyntheticProblem("bimodal", ParameterGroups.single(mix), 2, response,
                            "xi_1 + 0.1 xi_2^2 + 0.05 xi_1 xi_2 on a two-peak mixture")


def quadratic_ill(seed=0) -> SyntheticProblem:
    d = 4
    corr = np.full((d, d), 0.95) + 0.05 * np.eye(d)
    mix = GaussianMixture.from_arrays(
        [0.6, 0.4], [np.zeros(d), np.full(d, 0.5)], [corr, 0.5 * corr]
    )

    def response(x):
        return 1.0 + x[:, 0] - 2.0 * x[:, 1] * x[:, 2] + 0.5 * x[:, 3] ** 2

    return SyntheticProblem("quadratic-ill", ParameterGroups.single(mix), 2, response,
                            "1 + xi_1 - 2 xi_2 xi_3 + 0.5 xi_4^2, correlation 0.95")


REGISTRY = {
    "synthetic8d": synthetic8d,
    "bimodal": bimodal,
    "quadratic-ill": quadratic_ill,
}


def get(name, seed=0) -> SyntheticProblem:
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise ValidationError(f"unknown oracle {name!r}; choose from {sorted(REGISTRY)}") from None
    return factory(seed)
