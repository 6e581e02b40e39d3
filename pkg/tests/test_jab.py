import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jabboot import (
    Stream,
    Target,
    TimeSeries,
    block_jackknife_variance,
    bootstrap_center,
    builtin_model,
    deletion_plan,
    jab_estimate,
    jab_point_value_fresh,
    jab_point_value_reuse,
    jab_variance,
    make_block_scheme,
    pseudo_values,
    replicate_statistic,
    run_bootstrap,
)

MEAN = builtin_model("mean")
ECDF0 = Target.parse("ecdf:0")


def tiny_instance(values=(0.8, -1.1, 0.4, 2.0)):
    ts = TimeSeries(np.array(values))
    scheme = make_block_scheme(ts.n, 2)
    return ts, scheme


def test_deletion_plan_windows():
    plan = deletion_plan(5, 2)
    assert plan.M == 4
    # second window (0-based i=1) removes blocks {1, 2}
    np.testing.assert_array_equal(plan.allowed(1), [0, 3, 4])
    assert all(plan.allowed(i).size == 3 for i in range(plan.M))


def test_deletion_plan_delete_one():
    plan = deletion_plan(6, 1)
    assert plan.M == 6
    np.testing.assert_array_equal(plan.allowed(2), [0, 1, 3, 4, 5])


def test_deletion_plan_rejects_bad_width():
    with pytest.raises(ValueError):
        deletion_plan(5, 0)
    with pytest.raises(ValueError):
        deletion_plan(5, 5)
    with pytest.raises(ValueError):
        deletion_plan(5, 2).allowed(4)


def test_pseudo_values_formula():
    plan = deletion_plan(10, 2)
    got = pseudo_values(plan, 0.5, np.full(plan.M, 0.4))
    np.testing.assert_allclose(got, 0.9)  # (10*0.5 - 8*0.4)/2


def test_pseudo_values_fixed_point():
    plan = deletion_plan(7, 3)
    got = pseudo_values(plan, 0.25, np.full(plan.M, 0.25))
    np.testing.assert_allclose(got, 0.25, rtol=1e-15)


def test_pseudo_values_length_check():
    with pytest.raises(ValueError):
        pseudo_values(deletion_plan(5, 2), 0.1, np.zeros(3))


@settings(max_examples=200, deadline=None)
@given(
    N=st.integers(3, 150),
    frac=st.floats(0.01, 0.99),
    phi=st.floats(-5, 5),
    shift=st.floats(-1, 1),
)
def test_pseudo_deviation_identity(N, frac, phi, shift):
    # (pseudo_i - phi) == ((N - m)/m) (phi - point_i) to machine precision
    m = max(1, min(N - 1, int(frac * N)))
    plan = deletion_plan(N, m)
    points = np.full(plan.M, phi + shift)
    lhs = pseudo_values(plan, phi, points) - phi
    rhs = (N - m) / m * (phi - points)
    # float error of the pseudo-value route scales with N*|phi|/m, not with
    # the deviation itself
    tol = 1e-12 * (1.0 + N / m * (abs(phi) + abs(shift)))
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=tol)


def test_jab_variance_hand_example():
    # N=3, m=1, phi=0, points (0.1, -0.1, 0): Var = (1/2)(1/3)(0.04+0.04) = 1/75
    est = jab_variance(deletion_plan(3, 1), 0.0, np.array([0.1, -0.1, 0.0]))
    assert est.variance == pytest.approx(1 / 75, rel=1e-12)
    np.testing.assert_allclose(est.pseudo_values, [-0.2, 0.2, 0.0])


def test_jab_variance_zero_iff_points_equal_phi():
    plan = deletion_plan(8, 2)
    # dyadic value: the pseudo-value round trip is exact in floats
    assert jab_variance(plan, 0.5, np.full(plan.M, 0.5)).variance == 0.0
    # non-dyadic value: zero up to float dust
    assert jab_variance(plan, 0.4, np.full(plan.M, 0.4)).variance <= 1e-30
    est = jab_variance(plan, 0.4, np.full(plan.M, 0.41))
    assert est.variance > 1e-8


def test_jab_variance_quadratic_scaling():
    plan = deletion_plan(9, 3)
    rng = np.random.default_rng(1)
    points = rng.normal(size=plan.M)
    base = jab_variance(plan, 0.2, points).variance
    scaled = jab_variance(plan, 0.2 * 3.0, points * 3.0).variance
    assert scaled == pytest.approx(9.0 * base, rel=1e-12)


def test_block_jackknife_classical_mean_example():
    # delete-1 on (1,2,3): pseudo-values (1,2,3), variance exactly 1/3
    ts = TimeSeries(np.array([1.0, 2.0, 3.0]))
    got = block_jackknife_variance(ts, lambda v: float(np.mean(v)), 1)
    assert got == 1 / 3


def test_block_jackknife_constant_series():
    ts = TimeSeries(np.full(12, 3.0))
    assert block_jackknife_variance(ts, lambda v: float(np.mean(v)), 4) == 0.0


def test_block_jackknife_against_direct_evaluation():
    rng = np.random.default_rng(4)
    x = rng.normal(size=15)
    ts = TimeSeries(x)
    ell = 3
    n, N = 15, 13
    g = x.mean()
    pseudo = []
    for i in range(N):
        gi = np.delete(x, slice(i, i + ell)).mean()
        pseudo.append((n * g - (n - ell) * gi) / ell)
    expect = ell / (n - ell) / N * np.sum((np.array(pseudo) - g) ** 2)
    got = block_jackknife_variance(ts, lambda v: float(np.mean(v)), ell)
    assert got == pytest.approx(expect, rel=1e-12)


def test_block_jackknife_pseudo_value_mean_is_weighted_data_mean():
    # for the mean statistic, pseudo_i reduces to the i-th block mean, so the
    # pseudo-value average is the block-count weighted data mean
    rng = np.random.default_rng(9)
    x = rng.normal(size=10)
    n, ell = 10, 3
    N = n - ell + 1
    g = x.mean()
    pseudo = np.array(
        [
            (n * g - (n - ell) * np.delete(x, slice(i, i + ell)).mean()) / ell
            for i in range(N)
        ]
    )
    block_mean_i = np.array([x[i : i + ell].mean() for i in range(N)])
    np.testing.assert_allclose(pseudo, block_mean_i, rtol=1e-10)
    counts = np.array(
        [min(t, N - 1) - max(0, t - ell + 1) + 1 for t in range(n)], dtype=float
    )
    assert pseudo.mean() == pytest.approx(float(counts @ x) / (N * ell), rel=1e-10)


def test_block_jackknife_rejects_bad_ell():
    ts = TimeSeries(np.arange(5, dtype=float))
    with pytest.raises(ValueError):
        block_jackknife_variance(ts, lambda v: float(np.mean(v)), 5)


def test_fresh_point_value_constant_series_matches_full_ecdf():
    ts = TimeSeries(np.full(8, 2.0))
    scheme = make_block_scheme(8, 2)
    plan = deletion_plan(scheme.N, 2)
    ens = run_bootstrap(ts, scheme, MEAN, None, 50, Stream(1, (1,)))
    phi = ECDF0.apply(ens.t_star)
    for i in range(plan.M):
        got = jab_point_value_fresh(ts, scheme, MEAN, plan, i, ECDF0, 50, Stream(1, (2, i)))
        assert got == phi == 1.0


def test_fresh_point_value_tiny_enumeration_oracle():
    """m=1 on the tiny instance: deletion point 0 resamples from blocks {1, 2};
    enumerate its 4 equally likely draws directly and compare at 3 sigma."""
    ts, scheme = tiny_instance()
    plan = deletion_plan(scheme.N, 1)
    allowed = plan.allowed(0)
    center = bootstrap_center(ts, scheme, allowed, MEAN)
    atoms = [
        replicate_statistic(ts, scheme, center, MEAN, list(d)).t_star
        for d in itertools.product(allowed, repeat=scheme.b)
    ]
    exact = np.mean(np.asarray(atoms) <= 0.0)
    K = 20_000
    got = jab_point_value_fresh(ts, scheme, MEAN, plan, 0, ECDF0, K, Stream(11))
    sigma = np.sqrt(exact * (1 - exact) / K)
    assert abs(got - exact) <= 3 * sigma


def test_fresh_point_value_degenerate_single_block_pool():
    # m = N-1 leaves one block: every draw repeats it and T* degenerates
    ts, scheme = tiny_instance()
    plan = deletion_plan(scheme.N, scheme.N - 1)
    got = jab_point_value_fresh(
        ts, scheme, MEAN, plan, 0, Target.parse("variance"), 200, Stream(2)
    )
    assert got == 0.0


def test_reuse_discards_windowed_replicates_and_recenters():
    rng = np.random.default_rng(3)
    ts = TimeSeries(rng.normal(size=18))
    scheme = make_block_scheme(18, 3)
    ens = run_bootstrap(ts, scheme, MEAN, None, 300, Stream(5, (1,)))
    plan = deletion_plan(scheme.N, 4)
    i = 2
    lo, hi = plan.window(i)
    keep = ~((ens.draws >= lo) & (ens.draws < hi)).any(axis=1)
    value, count = jab_point_value_reuse(
        ens, ts, scheme, MEAN, plan, i, ECDF0, 0, Stream(5, (2, i))
    )
    assert count == int(keep.sum())
    # recomputing the retained statistics from scratch with the reduced-pool
    # center must reproduce the point value exactly
    center_i = bootstrap_center(ts, scheme, plan.allowed(i), MEAN)
    t_direct = np.array(
        [
            replicate_statistic(ts, scheme, center_i, MEAN, d).t_star
            for d in ens.draws[keep]
        ]
    )
    assert value == pytest.approx(np.mean(t_direct <= 0.0), abs=1e-12)


def test_reuse_retention_rate_matches_binomial_law():
    # expected retained fraction ((N-m)/N)^b; N=9, m=1, b=3 gives 512/729
    rng = np.random.default_rng(6)
    ts = TimeSeries(rng.normal(size=11))
    scheme = make_block_scheme(11, 3)  # N=9, b=3
    plan = deletion_plan(scheme.N, 1)
    p = (8 / 9) ** 3
    assert p == pytest.approx(0.70233196, rel=1e-6)
    total, kept = 0, 0
    for r in range(60):
        ens = run_bootstrap(ts, scheme, MEAN, None, 500, Stream(100 + r))
        _, count = jab_point_value_reuse(
            ens, ts, scheme, MEAN, plan, 0, ECDF0, 0, Stream(200 + r)
        )
        total += 500
        kept += count
    sigma = np.sqrt(p * (1 - p) / total)
    assert abs(kept / total - p) <= 3 * sigma


def test_reuse_retained_draws_are_uniform_on_reduced_pool():
    # conditional law of retained draws == i.i.d. uniform on I_i^b: check the
    # empirical frequency of every pattern on a 2-block pool with b=2
    ts, scheme = tiny_instance()  # N=3, b=2
    plan = deletion_plan(scheme.N, 1)
    i = 0
    allowed = plan.allowed(i)  # blocks {1, 2}
    counts = {}
    total = 0
    for r in range(400):
        ens = run_bootstrap(ts, scheme, MEAN, None, 100, Stream(300 + r))
        keep = ~((ens.draws >= 0) & (ens.draws < 1)).any(axis=1)
        for d in map(tuple, ens.draws[keep]):
            counts[d] = counts.get(d, 0) + 1
            total += 1
    patterns = list(itertools.product(allowed, repeat=scheme.b))
    assert set(counts) <= set(patterns)
    p = 1 / len(patterns)
    sigma = np.sqrt(p * (1 - p) / total)
    for pat in patterns:
        assert abs(counts.get(pat, 0) / total - p) <= 4 * sigma


def test_reuse_tops_up_to_retention_floor():
    rng = np.random.default_rng(7)
    ts = TimeSeries(rng.normal(size=20))
    scheme = make_block_scheme(20, 4)  # N=17, b=5
    plan = deletion_plan(scheme.N, 15)  # retention ~ (2/17)^5: essentially zero
    ens = run_bootstrap(ts, scheme, MEAN, None, 100, Stream(8, (1,)))
    ests = jab_estimate(
        ts, scheme, MEAN, [ECDF0], plan, ens, Stream(8, (2,)), mode="reuse", kmin=40
    )
    assert ests[0].retained.min() >= 0
    assert np.isfinite(ests[0].variance)
    # every point value rests on at least kmin replicates by construction
    value, count = jab_point_value_reuse(
        ens, ts, scheme, MEAN, plan, 0, ECDF0, 40, Stream(8, (2, 0))
    )
    assert count <= 40 and np.isfinite(value)


def test_reuse_zero_retention_zero_floor_raises():
    ts, scheme = tiny_instance()
    plan = deletion_plan(scheme.N, 2)
    ens = run_bootstrap(ts, scheme, MEAN, None, 3, Stream(9, (1,)))
    lo, hi = plan.window(0)
    if (~((ens.draws >= lo) & (ens.draws < hi)).any(axis=1)).sum() == 0:
        with pytest.raises(ValueError):
            jab_point_value_reuse(ens, ts, scheme, MEAN, plan, 0, ECDF0, 0, Stream(10))


def test_jab_estimate_matches_point_value_ops():
    # the multi-target driver must agree with the single-point operations
    rng = np.random.default_rng(12)
    ts = TimeSeries(rng.normal(size=16))
    scheme = make_block_scheme(16, 2)
    plan = deletion_plan(scheme.N, 3)
    stream = Stream(13)
    ens = run_bootstrap(ts, scheme, MEAN, None, 150, stream.child(1))
    targets = [ECDF0, Target.parse("quantile:0.35")]
    ests = jab_estimate(
        ts, scheme, MEAN, targets, plan, ens, stream.child(2), mode="reuse", kmin=10
    )
    for j, target in enumerate(targets):
        expect_points = np.array(
            [
                jab_point_value_reuse(
                    ens, ts, scheme, MEAN, plan, i, target, 10, stream.child(2, i)
                )[0]
                for i in range(plan.M)
            ]
        )
        np.testing.assert_allclose(ests[j].point_values, expect_points, rtol=1e-13)
        direct = jab_variance(plan, target.apply(ens.t_star), expect_points)
        assert ests[j].variance == pytest.approx(direct.variance, rel=1e-13)


def test_jab_estimate_fresh_mode_deterministic():
    rng = np.random.default_rng(14)
    ts = TimeSeries(rng.normal(size=14))
    scheme = make_block_scheme(14, 2)
    plan = deletion_plan(scheme.N, 2)
    ens = run_bootstrap(ts, scheme, MEAN, None, 80, Stream(15, (1,)))
    a = jab_estimate(ts, scheme, MEAN, [ECDF0], plan, ens, Stream(15, (2,)), mode="fresh", K=60)
    b = jab_estimate(ts, scheme, MEAN, [ECDF0], plan, ens, Stream(15, (2,)), mode="fresh", K=60)
    assert a[0].variance == b[0].variance
    assert a[0].retained is None
    assert a[0].mode == "fresh"


def test_delete_one_pipeline_reproduces_direct_jackknife_after_bootstrap():
    """ell = m = 1 on i.i.d. data: the full pipeline must agree with a
    from-scratch delete-1 implementation sharing the same ensemble."""
    rng = np.random.default_rng(18)
    x = rng.normal(size=30)
    ts = TimeSeries(x)
    scheme = make_block_scheme(30, 1)
    plan = deletion_plan(scheme.N, 1)
    stream = Stream(19)
    ens = run_bootstrap(ts, scheme, MEAN, None, 250, stream.child(1))
    est = jab_estimate(
        ts, scheme, MEAN, [ECDF0], plan, ens, stream.child(2), mode="reuse", kmin=0
    )[0]

    # direct script: for each left-out observation, keep the resamples that
    # avoid it, restudentize about the leave-one-out mean, apply the ecdf
    n = 30
    phi = np.mean(ens.t_star <= 0.0)
    points = np.empty(n)
    for i in range(n):
        keep = ~(ens.draws == i).any(axis=1)
        mu_i = np.delete(x, i).mean()
        resamples = x[ens.draws[keep]]
        xbar = resamples.mean(axis=1)
        tau = np.sqrt(np.mean((resamples - xbar[:, None]) ** 2, axis=1))
        t = np.sqrt(n) * (xbar - mu_i) / (tau + 1.0 / n)
        points[i] = np.mean(t <= 0.0)
    pseudo = n * phi - (n - 1) * points
    expect = (1 / (n - 1)) * np.mean((pseudo - phi) ** 2)
    assert est.variance == pytest.approx(expect, rel=1e-12)
    np.testing.assert_allclose(est.point_values, points, atol=1e-12)
