import json
import math

import numpy as np
import pytest

from mixpce.errors import ValidationError
from mixpce.gmm import (
    GaussianComponent,
    GaussianMixture,
    ParameterGroups,
    Univariate,
    density,
    load_distribution,
    parse_distribution,
    random_mixture,
    rng_from_seed,
    sample,
    whiten,
)


def direct_density(weights, means, covs, x):
    """Sum of component densities written out from the Gaussian formula."""
    total = 0.0
    for w, m, S in zip(weights, means, covs):
        S = np.asarray(S, float)
        r = np.asarray(x, float) - np.asarray(m, float)
        q = r @ np.linalg.inv(S) @ r
        total += w * math.exp(-0.5 * q) / math.sqrt((2 * math.pi) ** len(r) * np.linalg.det(S))
    return total


def test_standard_normal_peak():
    mix = GaussianMixture.standard_normal(1)
    assert density(mix, [0.0]) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-14)


def test_symmetric_pair():
    mix = GaussianMixture.from_arrays([0.5, 0.5], [[-1.0], [1.0]], [[[1.0]], [[1.0]]])
    for x in (0.3, 1.7, 4.0):
        assert density(mix, [x]) == pytest.approx(density(mix, [-x]), rel=1e-14)


def test_three_component_matches_direct_sum():
    w = [0.2, 0.5, 0.3]
    means = [[0.0, 0.0], [1.0, -1.0], [-2.0, 0.5]]
    covs = [[[1.0, 0.3], [0.3, 0.5]], [[0.4, 0.0], [0.0, 2.0]], [[1.5, -0.6], [-0.6, 0.9]]]
    mix = GaussianMixture.from_arrays(w, means, covs)
    for x in ([0.0, 0.0], [0.7, -0.2], [-3.0, 1.0], [2.5, 2.5]):
        assert density(mix, x) == pytest.approx(direct_density(w, means, covs, x), rel=1e-12)


def test_density_dimension_mismatch():
    with pytest.raises(ValidationError):
        density(GaussianMixture.standard_normal(2), [0.0])


def test_density_integrates_to_one_1d():
    mix = GaussianMixture.from_arrays([0.3, 0.7], [[-1.0], [2.0]], [[[0.5]], [[1.5]]])
    h = 0.005
    x = np.arange(-15.0, 15.0, h) + h / 2
    assert np.sum(mix.pdf(x[:, None])) * h == pytest.approx(1.0, abs=1e-4)


def test_density_integrates_to_one_2d():
    mix = GaussianMixture.from_arrays(
        [0.4, 0.6], [[0.0, 0.0], [1.0, 1.0]],
        [[[1.0, 0.2], [0.2, 0.5]], [[0.3, -0.1], [-0.1, 0.8]]],
    )
    h = 0.04
    g = np.arange(-10.0, 10.0, h) + h / 2
    X, Y = np.meshgrid(g, g, indexing="ij")
    vals = mix.pdf(np.column_stack([X.ravel(), Y.ravel()]))
    assert vals.sum() * h * h == pytest.approx(1.0, abs=1e-4)


def test_sampling_is_deterministic():
    mix = random_mixture(3, 2, rng_from_seed(1))
    assert np.array_equal(sample(mix, 50, 7), sample(mix, 50, 7))
    assert not np.array_equal(sample(mix, 50, 7), sample(mix, 50, 8))


def test_standard_normal_sample_mean():
    xs = sample(GaussianMixture.standard_normal(3), 10**6, 0)
    assert np.all(np.abs(xs.mean(axis=0)) < 0.01)


def test_component_frequencies():
    mix = GaussianMixture.from_arrays([0.3, 0.7], [[0.0], [5.0]], [[[1.0]], [[1.0]]])
    n = 10**5
    _, labels = mix.sample_labeled(n, rng_from_seed(3))
    frac = np.mean(labels == 0)
    assert abs(frac - 0.3) < 3 * math.sqrt(0.3 * 0.7 / n)


def test_sample_covariance_converges():
    mix = random_mixture(3, 3, rng_from_seed(5))
    n = 10**5
    xs = sample(mix, n, 11)
    c = xs - xs.mean(axis=0)
    emp = c.T @ c / (n - 1)
    prods = c[:, :, None] * c[:, None, :]
    se = prods.std(axis=0) / math.sqrt(n)
    assert np.all(np.abs(emp - mix.covariance()) <= 3 * se)


def test_mixture_covariance_formula():
    mix = GaussianMixture.from_arrays([0.5, 0.5], [[-1.0], [1.0]], [[[1.0]], [[1.0]]])
    assert mix.mean() == pytest.approx([0.0])
    assert mix.covariance()[0, 0] == pytest.approx(2.0)


def test_whiten_identity_and_diagonal():
    A, mu = whiten(GaussianComponent(np.zeros(2), np.eye(2)))
    assert np.array_equal(A, np.eye(2)) and np.array_equal(mu, np.zeros(2))
    A, _ = whiten(GaussianComponent(np.zeros(2), np.diag([4.0, 9.0])))
    assert np.allclose(A, np.diag([2.0, 3.0]), atol=0, rtol=1e-15)


def test_whiten_reconstructs_random_covariance():
    rng = np.random.default_rng(2)
    for _ in range(20):
        B = rng.standard_normal((5, 5))
        S = B @ B.T + 0.1 * np.eye(5)
        A, _ = GaussianComponent(np.zeros(5), S).whiten()
        assert np.linalg.norm(A @ A.T - S) <= 1e-10 * np.linalg.norm(S)


@pytest.mark.parametrize(
    "cov",
    [
        [[1.0, 2.0], [2.0, 1.0]],          # indefinite
        [[1.0, 0.1], [0.2, 1.0]],          # asymmetric
        [[1.0, 1.0], [1.0, 1.0]],          # singular
        [[1.0, 0.0], [0.0, np.nan]],       # not finite
    ],
)
def test_invalid_covariance_rejected(cov):
    with pytest.raises(ValidationError):
        GaussianComponent(np.zeros(2), np.array(cov))


def test_near_singular_covariance_rejected():
    eps = 1e-14
    with pytest.raises(ValidationError):
        GaussianComponent(np.zeros(2), np.array([[1.0, 1.0], [1.0, 1.0 + eps]]))


@pytest.mark.parametrize(
    "weights",
    [[0.5, 0.6], [1.2, -0.2], [1.0, 0.0]],
)
def test_bad_weights(weights):
    comps = [GaussianComponent(np.zeros(1), np.eye(1))] * 2
    with pytest.raises(ValidationError):
        GaussianMixture(weights, comps)


def test_component_dimensions_must_agree():
    with pytest.raises(ValidationError):
        GaussianMixture([0.5, 0.5], [GaussianComponent(np.zeros(1), np.eye(1)),
                                      GaussianComponent(np.zeros(2), np.eye(2))])


SPEC = {
    "dimension": 4,
    "groups": [
        {"indices": [0, 1], "kind": "mixture", "weights": [0.25, 0.75],
         "means": [[0, 0], [1, -1]],
         "covariances": [[[1, 0.5], [0.5, 1]], [[0.5, 0], [0, 0.5]]]},
        {"indices": [2], "kind": "gaussian", "mean": 1.0, "std": 2.0},
        {"indices": [3], "kind": "gamma", "shape": 2.0, "scale": 0.5},
    ],
}


def test_parse_roundtrip(tmp_path):
    dist = parse_distribution(SPEC)
    assert dist.dimension == 4 and len(dist.groups) == 3
    assert [g.kind for g in dist.groups] == ["mixture", "gaussian", "gamma"]
    path = tmp_path / "d.json"
    path.write_text(json.dumps(dist.to_dict()))
    again = load_distribution(path)
    assert again.to_dict() == dist.to_dict()


def test_grouped_sampling_marginals():
    dist = parse_distribution(SPEC)
    xs = dist.sample(200_000, 4)
    assert xs[:, 2].mean() == pytest.approx(1.0, abs=0.02)
    assert xs[:, 3].mean() == pytest.approx(1.0, abs=0.01)  # shape * scale
    assert np.all(xs[:, 3] > 0)


def test_weights_must_sum_to_one_within_1e9():
    bad = json.loads(json.dumps(SPEC))
    bad["groups"][0]["weights"] = [0.25, 0.75 + 1e-8]
    with pytest.raises(ValidationError):
        parse_distribution(bad)
    ok = json.loads(json.dumps(SPEC))
    ok["groups"][0]["weights"] = [0.25, 0.75 + 1e-11]
    assert parse_distribution(ok).groups[0].dist.weights.sum() == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("indices", [[[0, 1], [2], [2]], [[0, 1], [2], [4]]])
def test_groups_must_partition(indices):
    bad = json.loads(json.dumps(SPEC))
    for g, idx in zip(bad["groups"], indices):
        g["indices"] = idx
    with pytest.raises(ValidationError):
        parse_distribution(bad)


def test_missing_fields_and_unknown_kind():
    with pytest.raises(ValidationError):
        parse_distribution({"groups": []})
    with pytest.raises(ValidationError):
        parse_distribution({"dimension": 1, "groups": [{"indices": [0], "kind": "beta"}]})
    with pytest.raises(ValidationError):
        parse_distribution({"dimension": 1, "groups": [{"indices": [0], "kind": "gamma"}]})


def test_univariate_moments():
    g = Univariate("gamma", shape=2.5, scale=0.7)
    for k in range(6):
        assert g.moment(k) == pytest.approx(math.gamma(2.5 + k) / math.gamma(2.5) * 0.7**k)
    n = Univariate("gaussian", mean=1.0, std=2.0)
    assert [n.moment(k) for k in range(4)] == pytest.approx([1.0, 1.0, 5.0, 13.0])


def test_single_group_wrapper():
    mix = random_mixture(2, 2, rng_from_seed(0))
    groups = ParameterGroups.single(mix)
    assert groups.is_single_mixture and groups.mixture is mix
    pts = groups.sample(10, 3)
    assert np.allclose(groups.pdf(pts), mix.pdf(pts))
