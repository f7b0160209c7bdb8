from fractions import Fraction
import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from pubpriv.dp_core import Accountant, PrivacyBudget, ZeroNoise
from pubpriv.errors import (ArityError, DegenerateDataError, IncompleteClusteringError,
                            InputError, ParameterError)
from pubpriv.gmm_est import (Ball, MixtureParams, Partition, PcaConfig, clipped_moment,
                             dp_hard_clustering, dp_low_dim_partitioner, easy_clustering,
                             estimate_gmm_easy, estimate_gmm_hard, estimate_mixture, f_pca,
                             low_dim_partitioner, private_pca, q_priv, q_pub, radius_schedule,
                             supercluster, weight_rule)
from pubpriv.gauss_est import GaussianParams
from pubpriv.synth import clean_partition, make_separated_mixture, pure_ball, sample_mixture

from reference import exact_pca, exact_q_priv, hard_clusters

Z = PrivacyBudget.zcdp


# --- types ---------------------------------------------------------------

def test_ball_rejects_bad_radius():
    for r in (0.0, -1.0, np.inf, np.nan):
        with pytest.raises(ParameterError):
            Ball([0.0], r)


def test_ball_is_closed():
    assert Ball([0.0], 1.0).contains([[1.0], [1.0 + 1e-12]]).tolist() == [True, False]


def test_mixture_weights_validated():
    g = GaussianParams([0.0], [[1.0]])
    with pytest.raises(ParameterError):
        MixtureParams(((g, 0.5), (g, 0.4)))
    with pytest.raises(ParameterError):
        MixtureParams(((g, 0.9), (g, 0.1)), w_min=0.2)
    MixtureParams(((g, 0.5), (g, 0.5 + 1e-12)))


def test_partition_validation():
    Partition([[0, 1], [3]]).validate(4)
    with pytest.raises(InputError):
        Partition([[0, 1], [1]]).validate(4)
    with pytest.raises(InputError):
        Partition([[4]]).validate(4)


def test_pca_config_sigma():
    cfg = PcaConfig(2, 3.0)
    assert cfg.sigma(Z(0.5)) == pytest.approx(2 * 9 * 1.0)
    assert f_pca(PrivacyBudget.approx(1.0, 1e-6)) == pytest.approx(math.sqrt(2 * math.log(2e6)))
    with pytest.raises(ParameterError):
        PcaConfig(0, 1.0)


# --- superclustering -----------------------------------------------------

def test_supercluster_hand_trace(oracle):
    trace = []
    ball = supercluster(np.array([[0.0], [1.0], [100.0]]), 3, trace)
    assert [ball.center[0], ball.radius] == oracle["supercluster_0_1_100"]
    # R is logged before the final r step
    assert trace == [(1584.0, "return-grow")]


def test_supercluster_branch_sequence():
    # a first shell that picks up points, then a clean shell: grow-pure then return-pure
    x = np.array([[0.0], [0.1], [2.5], [2.6]])
    trace = []
    ball = supercluster(x, 3, trace)
    assert [b for _, b in trace] == ["grow-pure", "return-pure"]
    assert ball.radius == pytest.approx(16 * 0.1 * 3)


def test_supercluster_jump_branch():
    # nothing in the first shell, something in the second: jump by 3r
    x = np.array([[0.0], [1.0], [40.0], [41.0]])
    trace = []
    ball = supercluster(x, 1, trace)
    assert trace == [(64.0, "jump"), (64.0, "cap")]
    assert ball.radius == 64.0 and ball.contains(x).all()


def test_supercluster_errors():
    with pytest.raises(ArityError):
        supercluster(np.zeros((1, 2)), 2)
    with pytest.raises(DegenerateDataError):
        supercluster(np.zeros((4, 2)), 2)


def test_supercluster_isolates_far_cluster(rng):
    a = rng.normal(0, 0.1, (30, 2))
    b = rng.normal(0, 0.1, (30, 2)) + [1000.0, 0]
    x = np.vstack([a, b])
    ball = supercluster(x, 2)
    inside = ball.contains(x)
    assert inside.sum() == 30 and (inside[:30].all() or inside[30:].all())


def test_supercluster_single_cluster_takes_everything(rng):
    x = rng.normal(0, 1, (200, 3))
    trace = []
    ball = supercluster(x, 3, trace)
    r = trace_r = 16 * max(np.sort(np.linalg.norm(x - p, axis=1))[1] for p in x)
    assert ball.contains(x).all() and ball.radius <= 2 * r + 1e-9
    assert trace_r > 0


@given(st.integers(0, 2 ** 31), st.integers(1, 6), st.integers(2, 40))
@settings(max_examples=60, deadline=None)
def test_supercluster_radius_cap(seed, k, m):
    g = np.random.default_rng(seed)
    x = g.standard_normal((m, 2)) * g.exponential(5, (m, 1))
    ball = supercluster(x, k)
    nn = max(np.sort(np.linalg.norm(x - p, axis=1))[1] for p in x)
    assert ball.radius <= (3 * k + 1) * 16 * nn * (1 + 1e-12)


# --- PCA -----------------------------------------------------------------

@given(st.integers(0, 2 ** 31), st.integers(1, 6))
@settings(max_examples=40, deadline=None)
def test_pca_projector_properties(seed, ell):
    g = np.random.default_rng(seed)
    z = g.standard_normal((50, 6)) * [5, 4, 3, 2, 1, 0.5]
    p = private_pca(z, PcaConfig(ell, 8.0), Z(1.0), g)
    np.testing.assert_allclose(p, p.T, atol=1e-12)
    np.testing.assert_allclose(p @ p, p, atol=1e-8)
    assert np.trace(p) == pytest.approx(ell, abs=1e-6)
    assert np.linalg.matrix_rank(p, tol=1e-6) == ell


def test_pca_zero_noise_is_exact(rng):
    z = rng.standard_normal((100, 5)) * [4, 3, 2, 1, 1]
    p = private_pca(z, PcaConfig(2, 3.0), Z(1.0), ZeroNoise())
    assert np.array_equal(p, exact_pca(z, 2, 3.0))
    w, v = np.linalg.eigh(clipped_moment(z, 3.0))
    np.testing.assert_allclose(p, v[:, -2:] @ v[:, -2:].T, atol=1e-10)


def test_pca_ell_too_large(rng):
    with pytest.raises(ParameterError):
        private_pca(np.zeros((5, 2)), PcaConfig(3, 1.0), Z(1.0), rng)


def test_pca_spends_budget(rng):
    acc = Accountant(Z(1.0))
    private_pca(rng.standard_normal((10, 3)), PcaConfig(1, 1.0), Z(0.25), rng, acc)
    assert acc.spent().rho == 0.25


def test_pca_sensitivity_random_neighbours(rng):
    for _ in range(100):
        d, r = int(rng.integers(1, 8)), float(rng.uniform(0.1, 5))
        z = rng.standard_normal((20, d)) * rng.uniform(0.1, 10)
        z2 = z.copy()
        z2[int(rng.integers(20))] = rng.standard_normal(d) * rng.uniform(0.1, 100)
        diff = clipped_moment(z, r) - clipped_moment(z2, r)
        assert np.linalg.norm(diff, "fro") <= 2 * r * r * (1 + 1e-12)


# --- terrific-ball queries -----------------------------------------------

X7 = np.array([0, 0.1, 0.2, 50, 50.1, 100, 100.2])[:, None]


def test_q_pub_examples():
    assert q_pub(X7, [0.1], 0.5, 2)
    assert not q_pub(X7[:3], [0.1], 0.5, 1)
    assert not q_pub(X7, [0.1], 5.0, 2)


def test_q_priv_zero_noise_examples():
    a = np.zeros((100, 1))
    b = np.full((100, 1), 20.0)
    assert q_priv(np.vstack([a, b]), [0.0], 1.0, 50, Z(1), ZeroNoise())
    assert not q_priv(a, [0.0], 1.0, 50, Z(1), ZeroNoise())


@given(st.integers(0, 2 ** 31), st.floats(0.1, 5), st.floats(1, 60))
@settings(max_examples=60, deadline=None)
def test_q_priv_zero_noise_is_exact_predicate(seed, r, t):
    g = np.random.default_rng(seed)
    x = g.standard_normal((60, 2)) * g.choice([0.3, 30.0], (60, 1))
    c = x[0]
    assert q_priv(x, c, r, t, Z(1), ZeroNoise()) == exact_q_priv(x, c, r, t)


def test_q_priv_always_spends_three_counts(rng):
    acc = Accountant(Z(1.0))
    q_priv(np.zeros((0, 1)), [0.0], 1.0, 5, Z(0.3), rng, acc)
    assert acc.spent_exact()[0] == 3 * Fraction(Z(0.3).scaled(1, 3).rho)
    assert acc.within_budget()


def test_q_priv_flip_rate_near_threshold(oracle):
    # inner count sits t/1280 above t; the flip rate is the Laplace tail at that margin
    t, eps = 12800.0, 0.03
    g = np.random.default_rng(0)
    b = PrivacyBudget.approx(3 * eps, 0.0)
    x = np.vstack([np.zeros((int(t + t / 1280), 1)), np.full((int(2 * t), 1), 100.0)])
    flips = sum(not q_priv(x, [0.0], 1.0, t, b, g) for _ in range(4000)) / 4000
    margin = t / 1280
    # inner and exterior may each flip; the annulus count is 0 against t/320 = 40
    bound = 0.5 * math.exp(-eps * margin) + math.exp(-eps * 40) + 0.5 * math.exp(-eps * t)
    assert flips <= bound + 3 * math.sqrt(bound / 4000)


# --- partitioners --------------------------------------------------------

def test_radius_schedule():
    assert radius_schedule(8.0, 1.0) == [8.0, 4.0, 2.0, 1.0]
    assert radius_schedule(8.0, 1.1) == [8.0, 4.0, 2.0]
    assert radius_schedule(1.0, 2.0) == []
    with pytest.raises(ParameterError):
        radius_schedule(1.0, 0.0)


def _two_clusters(rng, n_each, gap=100.0, d=2):
    a = rng.normal(0, 1, (n_each, d))
    b = rng.normal(0, 1, (n_each, d))
    b[:, 0] += gap
    from pubpriv.synth import LabeledDataset
    return LabeledDataset(np.vstack([a, b]), np.repeat([0, 1], n_each))


def test_partitioners_find_pure_ball(rng):
    pub, priv = _two_clusters(rng, 50), _two_clusters(rng, 5000)
    ball = low_dim_partitioner(pub.rows, 200.0, 0.5, 100, 0.5)
    assert ball is not None and pure_ball(ball, priv) and ball.contains(priv.rows).any()
    ball = dp_low_dim_partitioner(priv.rows, pub.rows, 200.0, 0.5, 10000, 100, 0.5, Z(1),
                                  ZeroNoise())
    assert ball is not None and pure_ball(ball, priv)


def test_partitioners_refuse_single_cluster(rng):
    y = rng.normal(0, 1, (100, 2))
    z = rng.normal(0, 1, (10000, 2))
    assert low_dim_partitioner(y, 50.0, 0.1, 100, 0.5) is None
    assert dp_low_dim_partitioner(z, y, 50.0, 0.1, 10000, 100, 0.5, Z(1), rng) is None


def test_partitioners_empty_public():
    assert low_dim_partitioner(np.zeros((0, 2)), 4.0, 1.0, 10, 0.5) is None
    assert dp_low_dim_partitioner(np.zeros((5, 2)), np.zeros((0, 2)), 4.0, 1.0, 5, 10, 0.5,
                                  Z(1), ZeroNoise()) is None


def test_partitioners_small_r_max():
    # two evenly spaced clusters of width 10, gap 100: with r_max < 100/22 no
    # ball can cover a whole cluster, so its annulus always holds neighbours
    y = np.concatenate([np.arange(0, 10, 0.1), 100 + np.arange(0, 10, 0.1)])[:, None]
    assert low_dim_partitioner(y, 100.0 / 23, 0.01, y.shape[0], 0.5) is None
    assert low_dim_partitioner(y, 20.0, 0.01, y.shape[0], 0.5) is not None


def test_partitioner_r_min_must_be_positive(rng):
    with pytest.raises(ParameterError):
        low_dim_partitioner(np.zeros((3, 1)), 1.0, 0.0, 3, 0.5)


# --- clustering ----------------------------------------------------------

def _instance(rng, d=32, k=3, s=400.0, m=200, n=20000, spread=3.0):
    truth = make_separated_mixture(d, k, s, 0.2, spread, rng)
    return truth, sample_mixture(truth, m, rng), sample_mixture(truth, n, rng)


def test_hard_clustering_k1_returns_everything(rng):
    y = rng.normal(0, 1, (50, 4))
    z = rng.normal(0, 1, (300, 4))
    part = dp_hard_clustering(y, z, 1, 1.0, 0.1, Z(1), rng)
    assert len(part.clusters) == 1 and np.array_equal(part.clusters[0], np.arange(300))


def test_easy_clustering_k1_returns_everything(rng):
    y = rng.normal(0, 1, (50, 4))
    z = rng.normal(0, 1, (300, 4))
    part = easy_clustering(y, z, 1, 1.0, 0.1)
    assert len(part.clusters) == 1 and np.array_equal(part.clusters[0], np.arange(300))


def test_hard_clustering_zero_noise_clean_and_matches_reference(rng):
    truth, pub, priv = _instance(rng)
    part = dp_hard_clustering(pub, priv, 3, 0.2, 0.1, Z(1), ZeroNoise())
    assert clean_partition(part, priv.labels, 3)
    ref = hard_clusters(pub.rows, priv.rows, 3, 0.2)
    assert len(ref) == len(part.clusters)
    assert all(np.array_equal(a, b) for a, b in zip(ref, part.clusters))


def test_hard_clustering_partition_valid_and_within_budget(rng):
    truth, pub, priv = _instance(rng)
    for budget in (Z(1.0), PrivacyBudget.approx(2.0, 1e-6)):
        acc = Accountant(budget)
        try:
            part = dp_hard_clustering(pub, priv, 3, 0.2, 0.1, budget, rng, acc)
        except IncompleteClusteringError as exc:
            part = exc.partial
        part.validate(len(priv))
        assert acc.within_budget()


def test_incomplete_clustering_carries_partial(rng):
    y = rng.normal(0, 1, (50, 3))
    z = rng.normal(0, 1, (500, 3))
    with pytest.raises(IncompleteClusteringError) as info:
        easy_clustering(y, z, 3, 0.2, 0.1)
    assert info.value.partial is not None
    info.value.partial.validate(500)


def test_easy_clustering_clean_with_different_counts(rng):
    truth = make_separated_mixture(16, 3, 40.0, 0.2, 2.0, rng)
    pub = sample_mixture(truth, 400, rng)
    # private side drawn with a different component mix
    skew = MixtureParams(tuple((p, w) for p, w in zip(truth.params, (0.6, 0.25, 0.15))))
    priv = sample_mixture(skew, 20000, rng)
    part = easy_clustering(pub, priv, 3, 0.2, 0.1)
    assert clean_partition(part, priv.labels, 3)


# --- estimation ----------------------------------------------------------

def test_weight_rule(oracle):
    assert weight_rule(250, 1000, 0.4, 2) == oracle["weight_rule_250_1000"]
    assert weight_rule(1, 10 ** 6, 0.2, 2) == oracle["weight_rule_floor_alpha0.2_k2"]


def test_estimate_mixture_zero_noise_weights(rng):
    z = np.vstack([rng.normal(0, 1, (250, 2)), rng.normal(50, 1, (750, 2))])
    part = Partition([np.arange(250), np.arange(250, 1000)],
                     [Ball([0, 0], 10.0), Ball([50, 50], 10.0)])
    est = estimate_mixture(z, part, 0.4, 0.1, Z(1.0), "hard", ZeroNoise())
    np.testing.assert_allclose(est.weights, [0.25, 0.75])


def test_estimate_mixture_records_empty_cluster(rng):
    z = rng.normal(0, 1, (500, 2))
    part = Partition([np.arange(500), np.zeros(0, dtype=int)],
                     [Ball([0, 0], 10.0), Ball([100, 0], 1.0)])
    acc = Accountant(Z(1.0))
    est = estimate_mixture(z, part, 0.2, 0.1, Z(1.0), "hard", rng, accountant=acc)
    assert est.k == 1 and [i for i, _ in est.failures] == [1]
    assert est.weights.tolist() == [1.0]
    assert acc.within_budget()


def test_estimate_mixture_all_failed(rng):
    part = Partition([np.zeros(0, dtype=int)], [Ball([0.0], 1.0)])
    with pytest.raises(DegenerateDataError):
        estimate_mixture(np.zeros((3, 1)), part, 0.2, 0.1, Z(1), "hard", rng)


def test_estimate_mixture_bad_mode(rng):
    with pytest.raises(ParameterError):
        estimate_mixture(np.zeros((3, 1)), Partition([[0, 1, 2]]), 0.2, 0.1, Z(1), "medium", rng)


def test_pipelines_within_budget(rng):
    truth, pub, priv = _instance(rng, n=50000)
    acc = Accountant(Z(2.0))
    estimate_gmm_hard(pub, priv, 3, 0.2, 0.3, 0.1, Z(2.0), rng, acc)
    assert acc.within_budget()
    assert acc.spent().rho <= 2.0
    truth = make_separated_mixture(16, 3, 40.0, 0.2, 2.0, rng)
    pub, priv = sample_mixture(truth, 400, rng), sample_mixture(truth, 50000, rng)
    acc = Accountant(Z(2.0))
    estimate_gmm_easy(pub, priv, 3, 0.2, 0.25, 0.1, Z(2.0), rng, acc)
    assert acc.within_budget()
