import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps
from scipy.special import ndtr

from dcgof.model import AssumptionViolationError, ModelSpec, Series, Theta, simulate
from dcgof.rng import substream
from dcgof.stats import (
    StatKind,
    StatValue,
    aggregate,
    box_pierce,
    cvm_stat,
    evaluate_statistics,
    jarque_bera,
    ks_stat,
    residuals_discrete,
    residuals_gaussian,
    v2_limit_cov,
    v_process_1,
    v_process_2j,
)

U3 = np.array([0.25, 0.5, 0.75])


def brute_v1(u, r):
    """Direct-summation oracle for the one-parameter process."""
    T = len(u)
    total = 0.0
    for t in range(2, T + 1):
        total += (1.0 if u[t - 2] <= r else 0.0) - r
    return total / math.sqrt(T - 2)


def brute_v2j(u, j, r1, r2):
    T = len(u)
    total = 0.0
    for t in range(j + 1, T + 1):
        i1 = 1.0 if u[t - 1] <= r1 else 0.0
        i2 = 1.0 if u[t - j - 1] <= r2 else 0.0
        total += i1 * i2 - r1 * r2
    return total / math.sqrt(T - j)


class TestVProcesses:
    def test_v1_hand_value(self):
        assert v_process_1(U3, 0.4) == pytest.approx(0.2, abs=1e-14)

    def test_v1_boundaries(self):
        assert v_process_1(U3, 0.0) == 0.0
        assert v_process_1(U3, 1.0) == pytest.approx(0.0, abs=1e-14)

    def test_v2j_hand_value(self):
        assert v_process_2j(np.array([0.2, 0.8]), 1, 0.5, 0.5) == pytest.approx(-0.25, abs=1e-14)

    def test_v2j_boundary(self):
        u = substream(0, "u").random(30)
        assert v_process_2j(u, 1, 1.0, 1.0) == pytest.approx(0.0, abs=1e-12)

    @given(st.integers(0, 1000), st.floats(0.0, 1.0), st.integers(1, 3))
    @settings(max_examples=60)
    def test_matches_brute_force(self, seed, r, j):
        u = substream(seed, "brute").random(12)
        assert v_process_1(u, r) == pytest.approx(brute_v1(u, r), abs=1e-12)
        assert v_process_2j(u, j, r, 0.3) == pytest.approx(brute_v2j(u, j, r, 0.3), abs=1e-12)


def cvm_quadrature_oracle_1d(u, n_grid=200):
    """Integrate the squared process with 2-point Gauss rules on the uniform
    grid refined by the jump coordinates (the integrand is piecewise
    quadratic, so this is exact)."""
    T = len(u)
    a = u[:-1]
    denom = math.sqrt(T - 2)
    cuts = np.unique(np.concatenate((np.linspace(0.0, 1.0, n_grid + 1), a)))
    nodes_x, nodes_w = np.polynomial.legendre.leggauss(2)
    mid, half = (cuts[1:] + cuts[:-1]) / 2.0, (cuts[1:] - cuts[:-1]) / 2.0
    r = (mid[:, None] + half[:, None] * nodes_x[None, :]).ravel()
    w = (half[:, None] * nodes_w[None, :]).ravel()
    V = ((a[None, :] <= r[:, None]).sum(axis=1) - len(a) * r) / denom
    return float(w @ (V * V))


def cvm_quadrature_oracle_2d(u, kind, n_grid=200):
    T = len(u)
    if kind.tag == "CvM_2j":
        a, b, denom = u[kind.j:], u[:-kind.j], math.sqrt(T - kind.j)
    else:
        a, b, denom = u[1 : T - 1], u[: T - 2], math.sqrt(T - 3)
    nodes_x, nodes_w = np.polynomial.legendre.leggauss(2)

    def axis(vals):
        cuts = np.unique(np.concatenate((np.linspace(0.0, 1.0, n_grid + 1), vals)))
        mid, half = (cuts[1:] + cuts[:-1]) / 2.0, (cuts[1:] - cuts[:-1]) / 2.0
        r = (mid[:, None] + half[:, None] * nodes_x[None, :]).ravel()
        w = (half[:, None] * nodes_w[None, :]).ravel()
        return r, w

    r1, w1 = axis(a)
    r2, w2 = axis(b)
    ind1 = (a[None, :] <= r1[:, None]).astype(float)
    ind2 = (b[None, :] <= r2[:, None]).astype(float)
    V = (ind1 @ ind2.T - len(a) * np.outer(r1, r2)) / denom
    return float(w1 @ (V * V) @ w2)


class TestCvm:
    def test_hand_value(self):
        got = cvm_stat(U3, StatKind.from_name("CvM0")).value
        assert got == pytest.approx(5.0 / 24.0, abs=1e-14)
        assert got == pytest.approx(cvm_quadrature_oracle_1d(U3), abs=1e-12)

    def test_identical_values(self):
        # all u at 0.5, T=3: integral of (2*1{0.5<=r} - 2r)^2 / 1 equals 1/3
        u = np.array([0.5, 0.5, 0.5])
        assert cvm_stat(u, StatKind.from_name("CvM0")).value == pytest.approx(1.0 / 3.0, abs=1e-14)

    def test_matches_quadrature_1d(self):
        u = substream(1, "cvm").random(60)
        closed = cvm_stat(u, StatKind.from_name("CvM0")).value
        assert abs(closed - cvm_quadrature_oracle_1d(u)) <= 1e-4

    @pytest.mark.parametrize("name", ["CvM1", "CvM2", "CvMp2"])
    def test_matches_quadrature_2d(self, name):
        u = substream(2, "cvm2").random(40)
        kind = StatKind.from_name(name)
        closed = cvm_stat(u, kind).value
        assert abs(closed - cvm_quadrature_oracle_2d(u, kind)) <= 1e-4

    def test_matches_independent_double_sum(self):
        u = substream(3, "cvm3").random(25)
        a, b = u[1:], u[:-1]
        n = len(a)
        total = 0.0
        for s in range(n):
            for t in range(n):
                term = (1.0 - max(a[s], a[t])) * (1.0 - max(b[s], b[t]))
                term -= (1.0 - a[s] ** 2) / 2.0 * (1.0 - b[s] ** 2) / 2.0
                term -= (1.0 - a[t] ** 2) / 2.0 * (1.0 - b[t] ** 2) / 2.0
                term += 1.0 / 9.0
                total += term
        brute = total / (len(u) - 1)
        closed = cvm_stat(u, StatKind.from_name("CvM1")).value
        assert closed == pytest.approx(brute, abs=1e-12)


class TestKs:
    def test_hand_value(self):
        # V jumps to 1 at r=0.5: sup is 1
        assert ks_stat(U3, StatKind.from_name("KS0")).value == pytest.approx(1.0, abs=1e-14)

    def test_dominates_dense_grid_1d(self):
        u = substream(4, "ks").random(50)
        exact = ks_stat(u, StatKind.from_name("KS0")).value
        r = substream(5, "probe").random(100_000)
        a = u[:-1]
        vals = np.abs((a[None, :] <= r[:, None]).sum(axis=1) - len(a) * r) / math.sqrt(len(u) - 2)
        assert exact >= vals.max() - 1e-12

    def test_finer_grid_changes_nothing(self):
        # candidate-set sup equals the sup over a 10x finer evaluation grid
        u = substream(6, "ks2").random(30)
        exact = ks_stat(u, StatKind.from_name("KS1")).value
        a, b = u[1:], u[:-1]
        n = len(a)
        grid = np.linspace(0.0, 1.0, 10 * n + 1)
        cand = np.unique(np.concatenate((grid, a, b, np.nextafter(a, -1), np.nextafter(b, -1))))
        ind1 = (a[None, :] <= cand[:, None]).astype(float)
        ind2 = (b[None, :] <= cand[:, None]).astype(float)
        V = np.abs(ind1 @ ind2.T - n * np.outer(cand, cand)) / math.sqrt(len(u) - 1)
        assert exact >= V.max() - 1e-12
        assert exact == pytest.approx(V.max(), abs=1e-9)


class TestAggregate:
    def test_single_value_identity(self):
        v = StatValue(StatKind.from_name("CvM1"), 0.42)
        assert aggregate([v], weights=lambda j, m: 1.0).value == pytest.approx(0.42)

    def test_bartlett_hand_value(self):
        vals = [StatValue(StatKind.from_name("CvM1"), 1.0), StatValue(StatKind.from_name("CvM2"), 2.0)]
        assert aggregate(vals).value == pytest.approx(4.0 / 3.0, abs=1e-14)

    def test_zeros(self):
        vals = [StatValue(StatKind.from_name("KS1"), 0.0), StatValue(StatKind.from_name("KS2"), 0.0)]
        assert aggregate(vals).value == 0.0

    def test_empty_and_mixed_family_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])
        with pytest.raises(ValueError):
            aggregate([StatValue(StatKind.from_name("CvM1"), 1.0),
                       StatValue(StatKind.from_name("KS2"), 1.0)])


class TestResiduals:
    def test_gaussian_median(self):
        assert residuals_gaussian(np.array([0.5]))[0] == pytest.approx(0.0, abs=1e-12)

    def test_gaussian_unit_quantile(self):
        assert residuals_gaussian(np.array([0.8413447460685429]))[0] == pytest.approx(1.0, abs=1e-6)

    @given(st.lists(st.floats(1e-6, 1.0 - 1e-6), min_size=1, max_size=20))
    def test_gaussian_inverse_identity(self, us):
        u = np.array(us)
        assert np.max(np.abs(ndtr(residuals_gaussian(u)) - u)) <= 1e-10

    def test_discrete_symmetric_case(self):
        spec = ModelSpec(link="probit", n_regressors=0)
        series = Series(y=np.array([1, 1]), x=np.zeros((2, 0)))
        e = residuals_discrete(spec, Theta(pi0=0.0), series)
        assert e[0] == pytest.approx(1.0, abs=1e-12)

    def test_discrete_hand_value(self):
        from scipy.special import ndtri
        spec = ModelSpec(link="probit", n_regressors=0)
        theta = Theta(pi0=float(ndtri(0.3)))
        series = Series(y=np.array([0, 0]), x=np.zeros((2, 0)))
        e = residuals_discrete(spec, theta, series)
        assert e[0] == pytest.approx(-0.6546536707079771, abs=1e-9)

    def test_discrete_mean_zero_under_model(self):
        spec = ModelSpec(link="probit", q=1, n_regressors=1)
        theta = Theta(pi0=0.1, delta=(0.5,), beta=(0.8,))
        T = 20_000
        rng = substream(7, "resid")
        data = simulate(spec, theta, T, x=rng.standard_normal((T, 1)), rng=rng)
        e = residuals_discrete(spec, theta, data)
        assert abs(e.mean()) <= 3.0 / math.sqrt(T)


class TestBoxPierce:
    def test_hand_value(self):
        assert box_pierce(np.array([1.0, -1.0, 1.0, -1.0]), 1).value == pytest.approx(2.25, abs=1e-12)

    def test_chi2_range_under_independence(self):
        x = substream(8, "bp").standard_normal(10_000)
        val = box_pierce(x, 25).value
        lo, hi = sps.chi2.ppf([0.005, 0.995], df=25)
        assert lo <= val <= hi

    def test_constant_series_rejected(self):
        with pytest.raises(ValueError):
            box_pierce(np.ones(50), 2)

    @given(st.integers(0, 500), st.sampled_from([2.0, 0.5, -4.0, 0.25]))
    @settings(max_examples=40)
    def test_affine_invariance_exact_for_power_of_two_scale(self, seed, a):
        x = substream(seed, "aff").standard_normal(80)
        assert box_pierce(a * x, 3).value == box_pierce(x, 3).value

    @given(st.integers(0, 500), st.floats(0.1, 5.0), st.floats(-3.0, 3.0))
    @settings(max_examples=40)
    def test_affine_invariance_general(self, seed, a, b):
        x = substream(seed, "aff2").standard_normal(80)
        assert box_pierce(a * x + b, 3).value == pytest.approx(box_pierce(x, 3).value, rel=1e-9)


class TestJarqueBera:
    def test_zero_skew_kurtosis_three(self):
        # four zeros plus +-1 gives sample kurtosis exactly 3 and skewness 0
        x = np.array([0.0, 0.0, 0.0, 0.0, 1.0, -1.0] * 4)
        assert jarque_bera(x).value == pytest.approx(0.0, abs=1e-20)

    def test_two_point_hand_value(self):
        x = np.array([1.0, -1.0] * 8)
        assert jarque_bera(x).value == pytest.approx(16.0 / 6.0, abs=1e-12)

    def test_chi2_range_under_normality(self):
        x = substream(9, "jb").standard_normal(10_000)
        val = jarque_bera(x).value
        lo, hi = sps.chi2.ppf([0.005, 0.995], df=2)
        assert lo <= val <= hi

    def test_short_series_rejected(self):
        with pytest.raises(ValueError):
            jarque_bera(np.arange(5.0))


class TestV2LimitCov:
    def test_upper_boundary_vanishes(self):
        assert v2_limit_cov((1.0, 1.0), (1.0, 1.0)) == pytest.approx(0.0, abs=1e-15)

    def test_hand_value(self):
        assert v2_limit_cov((0.5, 0.5), (0.5, 0.5)) == pytest.approx(0.3125, abs=1e-15)

    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
    def test_zero_coordinate_gives_zero(self, a, b, c):
        assert v2_limit_cov((0.0, a), (b, c)) == pytest.approx(0.0, abs=1e-15)

    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
    def test_symmetry(self, r1, r2, s1, s2):
        assert v2_limit_cov((r1, r2), (s1, s2)) == pytest.approx(
            v2_limit_cov((s1, s2), (r1, r2)), abs=1e-14
        )


class TestStatKind:
    @pytest.mark.parametrize("name", [
        "CvM0", "CvM1", "CvM2", "KS0", "KS1", "KS2", "CvMp2", "KSp2",
        "BPU_1", "BPN_2", "BPD_25", "JB", "ADP", "ADJ",
    ])
    def test_name_round_trip(self, name):
        assert StatKind.from_name(name).name == name

    def test_invalid(self):
        with pytest.raises(ValueError):
            StatKind.from_name("CvM")
        with pytest.raises(ValueError):
            StatKind(tag="CvM_p", p=3)
        with pytest.raises(ValueError):
            StatKind(tag="CvM_2j", j=0)

    def test_negative_statistic_rejected(self):
        with pytest.raises(ValueError):
            StatValue(StatKind.from_name("JB"), -0.5)


class TestEvaluateStatistics:
    def test_requires_discrete_residuals_for_bpd(self):
        u = substream(10, "ev").random(50)
        with pytest.raises(ValueError):
            evaluate_statistics([StatKind.from_name("BPD_1")], u, None)

    def test_all_names_present(self):
        u = substream(11, "ev2").random(60)
        e = substream(12, "ev3").standard_normal(60)
        kinds = [StatKind.from_name(n) for n in
                 ("CvM0", "CvM1", "KS0", "KS1", "BPU_2", "BPN_2", "BPD_2", "JB", "ADP", "ADJ")]
        out = evaluate_statistics(kinds, u, e)
        assert set(out) == {k.name for k in kinds}
        assert all(v >= 0.0 and math.isfinite(v) for v in out.values())

    def test_adj_equals_manual_aggregate(self):
        u = substream(13, "ev4").random(80)
        out = evaluate_statistics([StatKind(tag="ADJ", m=2)], u)
        c1 = cvm_stat(u, StatKind.from_name("CvM1")).value
        c2 = cvm_stat(u, StatKind.from_name("CvM2")).value
        assert out["ADJ"] == pytest.approx((2.0 / 3.0) * c1 + (1.0 / 3.0) * c2, abs=1e-12)
