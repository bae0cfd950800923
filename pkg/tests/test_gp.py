import math

import mpmath as mp
import numpy as np
import pytest

from mlgp.gp import (FactorizationError, LevelData, ModelSpec, cholesky_jittered, increments_from_cumulative,
                     krige_fit, krige_predict, mc_l2_sq, multilevel_fit, multilevel_predict, sample_gp_path,
                     sample_multilevel_truth)
from mlgp.kernel import KernelSpec, correlation_matrix, cross_correlation_batch, matern_correlation
from mlgp.lowdisc import DomainBox, NestedDesign, build_nested_design, halton_points
from mlgp.allocator import truncation_bound

from oracles import joint_conditional_mean


def test_single_point_predictor():
    spec = KernelSpec(1.25)
    p = krige_fit(spec, [[0.3]], [2.0])
    assert p([0.3]) == pytest.approx(2.0)
    assert p([0.9]) == pytest.approx(2.0 * matern_correlation(spec, 0.6))


def test_two_point_weights_exponential():
    p = krige_fit(KernelSpec(0.5), [[0.0], [1.0]], [1.0, 0.0])
    e1, e2 = math.exp(-1), math.exp(-2)
    assert p.weights == pytest.approx([1 / (1 - e2), -e1 / (1 - e2)], rel=1e-12)


def test_interpolates_training_data(rng):
    x = rng.random((25, 2))
    y = rng.normal(size=25)
    p = krige_fit(KernelSpec(1.25, 0.4), x, y)
    assert np.all(np.abs(p.predict(x) - y) <= 1e-8 * (1 + np.abs(y)))


def test_far_query_goes_to_zero():
    p = krige_fit(KernelSpec(1.25), [[0.0], [0.5]], [1.0, -2.0])
    assert p([1e6]) == 0.0


def test_batch_against_high_precision_inverse(rng):
    spec = KernelSpec(1.25, 0.8)
    x = rng.random((6, 1))
    y = rng.normal(size=6)
    q = rng.random((5, 1))
    p = krige_fit(spec, x, y)
    got = krige_predict(p, q)
    with mp.workdps(40):
        from test_kernel import matern_oracle
        R = mp.matrix([[matern_oracle(1.25, abs(a - b), 0.8, 40) for b in x[:, 0]] for a in x[:, 0]])
        w = R**-1 * mp.matrix(y.tolist())
        for qi, g in zip(q[:, 0], got):
            a = mp.matrix([[matern_oracle(1.25, abs(qi - b), 0.8, 40) for b in x[:, 0]]])
            want = float((a * w)[0])
            assert abs(g - want) <= 1e-10 * max(1.0, abs(want))


def test_batch_preserves_order(rng):
    p = krige_fit(KernelSpec(2.0), rng.random((8, 2)), rng.normal(size=8))
    q = rng.random((10, 2))
    batch = p.predict(q)
    assert [p.predict(row) for row in q] == pytest.approx(batch.tolist(), rel=1e-13)


def test_scale_invariance(rng):
    # a covariance s*R gives the same predictor as the correlation R
    x, y = halton_points(9, 2), rng.normal(size=9)
    spec = KernelSpec(1.25, 0.5)
    q = rng.random((6, 2))
    for s in (1e-3, 3.7, 250.0):
        C = s * correlation_matrix(spec, x)
        want = (s * cross_correlation_batch(spec, q, x)) @ np.linalg.solve(C, y)
        assert krige_fit(spec, x, y).predict(q) == pytest.approx(want, rel=1e-10, abs=1e-12)


def test_linearity(rng):
    x = rng.random((12, 2))
    y1, y2 = rng.normal(size=12), rng.normal(size=12)
    spec = KernelSpec(1.5, 0.5)
    q = rng.random((7, 2))
    lhs = krige_fit(spec, x, 2.0 * y1 - 0.5 * y2).predict(q)
    rhs = 2.0 * krige_fit(spec, x, y1).predict(q) - 0.5 * krige_fit(spec, x, y2).predict(q)
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_empty_and_mismatched_inputs():
    with pytest.raises(ValueError):
        krige_fit(KernelSpec(1.0), np.empty((0, 1)), [])
    with pytest.raises(ValueError):
        krige_fit(KernelSpec(1.0), [[0.0], [1.0]], [1.0])


def test_cholesky_failure_names_level():
    R = np.array([[1.0, 2.0], [2.0, 1.0]])  # indefinite
    with pytest.raises(FactorizationError, match="level 3.*condition"):
        cholesky_jittered(R, "level 3 correlation matrix")


def test_jitter_escalates_on_near_singular():
    x = np.linspace(0, 1, 60)[:, None]
    R = correlation_matrix(KernelSpec(5.0), x)
    _, jitter = cholesky_jittered(R)
    assert 1e-12 <= jitter <= 1e-6
    _, none_needed = cholesky_jittered(correlation_matrix(KernelSpec(1.0), [[0.0], [1.0]]))
    assert none_needed == 0.0


def _model(K, lam2=0.5, nu=1.25, d=1, theta=1.0):
    return ModelSpec(lam2, 1.0, K, KernelSpec(nu, theta), DomainBox.unit(d))


def _fit_from_cumulative(model, design, cum_by_level):
    """cum_by_level[i] holds y_i at design.levels[i], plus y_{i-1} there for i >= 1."""
    data = []
    for i, X in enumerate(design.levels):
        yi, yprev = cum_by_level[i]
        data.append(LevelData(i, X, yi - yprev))
    return multilevel_fit(model, design, data)


def _sample_nested(model, counts, rng, box=None):
    box = box or model.box
    unit = rng.random((counts[0], model.dim))
    pts = box.scale(unit)
    levels = [pts[:c] for c in counts]
    design = NestedDesign(levels, box)
    truth = sample_multilevel_truth(model, pts, rng)
    cum = []
    for i, c in enumerate(counts):
        prev = truth.cumulative[i - 1, :c] if i else np.zeros(c)
        cum.append((truth.cumulative[i, :c], prev))
    vals = [truth.cumulative[i, :c] for i, c in enumerate(counts)]
    return design, cum, levels, vals


def test_k0_reduces_to_kriging(rng):
    m = _model(0)
    x, y = rng.random((6, 1)), rng.normal(size=6)
    em = multilevel_fit(m, NestedDesign([x], m.box), [LevelData(0, x, y)])
    q = rng.random((9, 1))
    assert np.array_equal(em.predict(q), krige_fit(m.kernel, x, y).predict(q))


def test_zero_upper_increments(rng):
    m = _model(2)
    d = build_nested_design((6, 3, 2), m.box)
    y0 = rng.normal(size=6)
    data = [LevelData(0, d.levels[0], y0), LevelData(1, d.levels[1], np.zeros(3)), LevelData(2, d.levels[2], np.zeros(2))]
    q = rng.random((11, 1))
    assert multilevel_predict(multilevel_fit(m, d, data), q) == pytest.approx(krige_fit(m.kernel, d.levels[0], y0).predict(q), abs=1e-14)


@pytest.mark.parametrize("counts", [(4, 2), (6, 3, 1)])
def test_matches_joint_conditioning(rng, counts):
    m = _model(len(counts) - 1)
    design, cum, levels, vals = _sample_nested(m, counts, rng)
    em = _fit_from_cumulative(m, design, cum)
    q = rng.random((8, 1))
    want = joint_conditional_mean(m.kernel, m.lambda_sq, m.sigma_sq, levels, vals, q)
    assert np.max(np.abs(em.predict(q) - want)) <= 1e-8


def test_query_at_top_level_point_returns_observation(rng):
    m = _model(1)
    design, cum, levels, vals = _sample_nested(m, (5, 2), rng)
    em = _fit_from_cumulative(m, design, cum)
    assert em.predict(levels[1]) == pytest.approx(vals[1], abs=1e-8)


def test_doubling_increments_doubles_prediction(rng):
    m = _model(1)
    design, cum, _, _ = _sample_nested(m, (5, 3), rng)
    q = rng.random((4, 1))
    a = _fit_from_cumulative(m, design, cum).predict(q)
    b = _fit_from_cumulative(m, design, [(2 * y, 2 * p) for y, p in cum]).predict(q)
    assert b == pytest.approx(2 * a, abs=1e-12)


def test_non_nested_breaks_equivalence(rng):
    # the decomposition needs X_1 inside X_0; with disjoint sets it is not the conditional mean
    m = _model(1, theta=0.5)
    X0, X1 = np.array([[0.1], [0.5], [0.9]]), np.array([[0.3], [0.7]])
    truth = sample_multilevel_truth(m, np.vstack([X0, X1]), rng)
    y0_X0, y1_X1 = truth.cumulative[0, :3], truth.cumulative[1, 3:]
    inc1 = truth.increments[1, 3:]
    d = NestedDesign([X0, X1], m.box, nested=False)
    assert not d.is_nested()
    em = multilevel_fit(m, d, [LevelData(0, X0, y0_X0), LevelData(1, X1, inc1)])
    q = np.linspace(0, 1, 9)[:, None]
    want = joint_conditional_mean(m.kernel, m.lambda_sq, m.sigma_sq, [X0, X1], [y0_X0, y1_X1], q)
    assert np.max(np.abs(em.predict(q) - want)) > 1e-4


def test_fit_rejects_mismatches(rng):
    m = _model(1)
    d = build_nested_design((4, 2), m.box)
    good = [LevelData(0, d.levels[0], np.zeros(4)), LevelData(1, d.levels[1], np.zeros(2))]
    with pytest.raises(ValueError):
        multilevel_fit(m, d, good[:1])
    with pytest.raises(ValueError):
        multilevel_fit(m, d, [good[1], good[0]])
    with pytest.raises(ValueError):
        multilevel_fit(m, d, [good[0], LevelData(1, d.levels[1] + 0.01, np.zeros(2))])
    with pytest.raises(ValueError):
        multilevel_fit(_model(2), d, good)
    with pytest.raises(ValueError):
        LevelData(0, np.zeros((3, 1)), np.zeros(2))


def test_increments_from_cumulative():
    y = np.array([[1.0, 2.0], [1.5, 2.5], [1.25, 3.0]])
    assert increments_from_cumulative(y).tolist() == [[1.0, 2.0], [0.5, 0.5], [-0.25, 0.5]]


def test_sample_zero_variance():
    out = sample_gp_path(KernelSpec(1.0), 0.0, np.zeros((3, 1)) + [[0.0], [1.0], [2.0]], np.random.default_rng(0))
    assert out.tolist() == [0.0, 0.0, 0.0]


def test_sample_single_point_variance():
    rng = np.random.default_rng(1)
    draws = np.array([sample_gp_path(KernelSpec(1.25), 2.5, [[0.2]], rng)[0] for _ in range(10000)])
    assert abs(draws.var() / 2.5 - 1) < 0.05


def test_sample_distant_points_uncorrelated():
    rng = np.random.default_rng(2)
    draws = np.array([sample_gp_path(KernelSpec(1.25), 1.0, [[0.0], [100.0]], rng) for _ in range(10000)])
    assert abs(np.corrcoef(draws.T)[0, 1]) < 0.05


def test_sampling_deterministic_given_stream():
    pts = np.linspace(0, 1, 7)[:, None]
    a = sample_gp_path(KernelSpec(1.25), 1.0, pts, np.random.default_rng(5))
    b = sample_gp_path(KernelSpec(1.25), 1.0, pts, np.random.default_rng(5))
    assert np.array_equal(a, b)


def test_truth_k0_is_one_path_draw():
    m = _model(0)
    pts = np.linspace(0, 1, 5)[:, None]
    t = sample_multilevel_truth(m, pts, np.random.default_rng(9))
    assert np.array_equal(t.cumulative[0], sample_gp_path(m.kernel, 1.0, pts, np.random.default_rng(9)))


def test_truth_level_variances():
    m = _model(3, lam2=0.4)
    rng = np.random.default_rng(3)
    incs = np.array([sample_multilevel_truth(m, [[0.3]], rng).increments[:, 0] for _ in range(10000)])
    for i in range(4):
        assert abs(incs[:, i].var() / (0.4**i) - 1) < 0.05
    assert np.allclose(np.cumsum(incs, axis=1)[-1], np.cumsum(incs[-1]))


def test_truncation_tail_monte_carlo():
    # E||y_K' - y_K||^2 over 2000 draws vs the geometric tail, and below the bound
    lam2, K, Kp = 0.5, 1, 6
    box = DomainBox((0.0,), (3.0,))
    m = ModelSpec(lam2, 1.0, Kp, KernelSpec(1.25), box)
    rng = np.random.default_rng(11)
    pts = box.scale(rng.random((30, 1)))
    vals = []
    for _ in range(2000):
        t = sample_multilevel_truth(m, pts, rng)
        vals.append(mc_l2_sq(t.cumulative[Kp] - t.cumulative[K], box))
    exact = box.volume * sum(lam2**i for i in range(K + 1, Kp + 1))
    assert abs(np.mean(vals) / exact - 1) < 0.10
    assert np.mean(vals) <= truncation_bound(ModelSpec(lam2, 1.0, K, KernelSpec(1.25), box), K)


def test_model_validation():
    with pytest.raises(ValueError):
        ModelSpec(1.0)
    with pytest.raises(ValueError):
        ModelSpec(0.5, sigma_sq=0)
    with pytest.raises(ValueError):
        ModelSpec(0.5, levels=-1)
    m = ModelSpec(0.25, box=DomainBox.unit(1))
    assert m.c_l == pytest.approx(2.0)
