"""Oracle-based tests for the symmetric-function layer.

The oracles are deliberately independent of the implementation: subset
enumeration for elementary symmetric values, central finite differences for
gradients and Hessians, and eigenvalue perturbation for the matrix-direction
second-derivative form.
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flowlab.symfun import (
    CurvatureVector,
    SpeedFunction,
    SpeedFunctionError,
    elementary_all,
    euler_residual,
    eval_bundle,
    eval_on_axisymmetric,
    power_sum,
    second_derivative_form,
    sigma,
    sigma_identity_residuals,
)


def sigma_oracle(values, k):
    """Brute-force subset enumeration."""
    if k == 0:
        return 1.0
    return float(sum(math.prod(c) for c in itertools.combinations(values, k)))


positive_vectors = st.lists(
    st.floats(min_value=1e-3, max_value=1e3), min_size=2, max_size=7
).map(tuple)


class TestSigma:
    def test_worked_example(self):
        lam = CurvatureVector((1.0, 2.0, 3.0))
        assert sigma(lam, 2) == 11.0
        assert sigma(lam, 2, excluded=(1,)) == 6.0
        assert sigma(lam, 0) == 1.0
        assert sigma(lam, 3) == 6.0

    @given(positive_vectors, st.integers(min_value=0, max_value=7))
    @settings(max_examples=200, deadline=None)
    def test_matches_subset_enumeration(self, values, k):
        lam = CurvatureVector(values)
        if k > lam.n:
            assert sigma(lam, k) == 0.0
            assert sigma(lam, -1) == 0.0
            return
        ref = sigma_oracle(lam.values, k)
        assert sigma(lam, k) == pytest.approx(ref, rel=1e-12, abs=1e-300)

    @given(positive_vectors, st.integers(min_value=0, max_value=6),
           st.integers(min_value=1, max_value=7))
    @settings(max_examples=200, deadline=None)
    def test_exclusion_matches_enumeration(self, values, k, i):
        lam = CurvatureVector(values)
        if i > lam.n or k > lam.n - 1:
            return
        rest = [v for idx, v in enumerate(lam.values) if idx != i - 1]
        ref = sigma_oracle(rest, k)
        assert sigma(lam, k, excluded=(i,)) == pytest.approx(ref, rel=1e-12)

    def test_pair_exclusion(self):
        lam = CurvatureVector((0.5, 1.5, 2.5, 4.0))
        rest = [0.5, 4.0]
        assert sigma(lam, 2, excluded=(2, 3)) == pytest.approx(
            sigma_oracle(rest, 2), rel=1e-14)

    def test_bad_indices(self):
        lam = CurvatureVector((1.0, 2.0))
        with pytest.raises(ValueError):
            sigma(lam, 1, excluded=(0,))
        with pytest.raises(ValueError):
            sigma(lam, 1, excluded=(3,))
        with pytest.raises(ValueError):
            sigma(lam, 1, excluded=(1, 1))

    def test_elementary_all(self):
        vals = np.array([1.0, 2.0, 3.0, 4.0])
        out = elementary_all(vals)
        for k in range(5):
            assert out[k] == pytest.approx(sigma_oracle(vals, k), rel=1e-14)


class TestCurvatureVector:
    def test_sorted_and_frozen(self):
        lam = CurvatureVector((3.0, 1.0, 2.0))
        assert lam.values == (1.0, 2.0, 3.0)
        with pytest.raises(Exception):
            lam.values = (1.0,)

    def test_rejects_bad_entries(self):
        for bad in [(1.0,), (0.0, 1.0), (-1.0, 2.0), (float("nan"), 1.0),
                    (float("inf"), 1.0)]:
            with pytest.raises(ValueError):
                CurvatureVector(bad)


class TestPowerSum:
    @given(positive_vectors, st.integers(min_value=1, max_value=6))
    @settings(max_examples=100, deadline=None)
    def test_matches_direct_sum(self, values, k):
        lam = CurvatureVector(values)
        ref = float(sum(v ** k for v in lam.values))
        assert power_sum(lam, k) == pytest.approx(ref, rel=1e-13)


class TestIdentities:
    @given(positive_vectors, st.integers(min_value=0, max_value=6))
    @settings(max_examples=200, deadline=None)
    def test_residuals_vanish(self, values, k):
        lam = CurvatureVector(values)
        if k > lam.n:
            return
        scale = max(abs(sigma(lam, min(j, lam.n)))
                    for j in range(max(k - 1, 0), min(k + 3, lam.n) + 1))
        scale = max(scale, 1.0) * max(lam.values) ** 2
        for r in sigma_identity_residuals(lam, k):
            assert abs(r) <= 1e-12 * scale


class TestParser:
    def test_single_power(self):
        F = SpeedFunction.parse("sigma(2)^0.5")
        assert F.beta == pytest.approx(1.0)
        assert F.condition_candidate

    def test_power_sum_and_fraction_exponent(self):
        F = SpeedFunction.parse("S(3)^(1/3)")
        assert F.beta == pytest.approx(1.0)

    def test_multi_term(self):
        F = SpeedFunction.parse("1.0*sigma(1)^2 - 3.0*sigma(2)")
        assert F.beta == pytest.approx(2.0)
        assert not F.condition_candidate
        lam = CurvatureVector((1.0, 2.0))
        # sigma1^2 - 3 sigma2 = 9 - 6
        assert eval_bundle(F, lam).value == pytest.approx(3.0)

    def test_rejects_mixed_degree(self):
        with pytest.raises(SpeedFunctionError) as e:
            SpeedFunction.parse("sigma(1) + sigma(2)")
        assert "sigma" in str(e.value)

    def test_rejects_garbage(self):
        for text in ["", "sigma", "sigma(0)", "sigma(2)^", "2 ** sigma(1)",
                     "sigma(2)^(1/0)", "frob(2)"]:
            with pytest.raises(SpeedFunctionError):
                SpeedFunction.parse(text)

    def test_roundtrip(self):
        for text in ["sigma(2)^0.5", "1*sigma(1)^2 - 3*sigma(2)", "S(2)^2"]:
            F = SpeedFunction.parse(text)
            again = SpeedFunction.parse(str(F))
            assert str(again) == str(F)

    def test_value_at_ones(self):
        assert SpeedFunction.parse("sigma(2)").value_at_ones(3) == pytest.approx(3.0)
        assert SpeedFunction.parse("sigma(2)^0.5").value_at_ones(4) == pytest.approx(
            math.sqrt(6.0))
        assert SpeedFunction.parse("S(2)").value_at_ones(3) == pytest.approx(3.0)


def fd_gradient(F, arr, h=1e-6):
    g = np.zeros_like(arr)
    for i in range(arr.size):
        hp = h * max(1.0, abs(arr[i]))
        up = arr.copy(); up[i] += hp
        dn = arr.copy(); dn[i] -= hp
        fu = eval_bundle(F, CurvatureVector(tuple(up))).value
        fd = eval_bundle(F, CurvatureVector(tuple(dn))).value
        g[i] = (fu - fd) / (2 * hp)
    return g


def fd_hessian(F, arr, h=1e-4):
    n = arr.size
    H = np.zeros((n, n))
    f0 = eval_bundle(F, CurvatureVector(tuple(arr))).value

    def val(delta):
        return eval_bundle(F, CurvatureVector(tuple(arr + delta))).value

    for i in range(n):
        hi = h * max(1.0, abs(arr[i]))
        ei = np.zeros(n); ei[i] = hi
        H[i, i] = (val(ei) - 2 * f0 + val(-ei)) / hi ** 2
        for j in range(i + 1, n):
            hj = h * max(1.0, abs(arr[j]))
            ej = np.zeros(n); ej[j] = hj
            H[i, j] = H[j, i] = (val(ei + ej) - val(ei - ej)
                                 - val(-ei + ej) + val(-ei - ej)) / (4 * hi * hj)
    return H


SPEEDS = [
    SpeedFunction.sigma_power(1, 1.0),
    SpeedFunction.sigma_power(2, 0.5),
    SpeedFunction.sigma_power(3, 1.0),
    SpeedFunction.sigma_power(2, 2.0),
    SpeedFunction.power_sum_power(2, 0.5),
    SpeedFunction.power_sum_power(3, 1.0),
    SpeedFunction.parse("1*sigma(1)^2 - 3*sigma(2)"),
]


class TestDerivatives:
    @pytest.mark.parametrize("F", SPEEDS, ids=str)
    def test_gradient_matches_fd(self, F):
        rng = np.random.default_rng(11)
        for _ in range(20):
            arr = np.sort(rng.uniform(0.3, 4.0, size=4))
            bun = eval_bundle(F, CurvatureVector(tuple(arr)))
            ref = fd_gradient(F, arr)
            scale = np.max(np.abs(ref)) + 1e-12
            assert np.max(np.abs(bun.gradient - ref)) <= 1e-6 * scale

    @pytest.mark.parametrize("F", SPEEDS, ids=str)
    def test_hessian_matches_fd(self, F):
        rng = np.random.default_rng(12)
        for _ in range(10):
            arr = np.sort(rng.uniform(0.3, 4.0, size=4))
            bun = eval_bundle(F, CurvatureVector(tuple(arr)))
            ref = fd_hessian(F, arr)
            # the FD stencil carries noise ~ |F| eps / h^2, so an affine
            # speed (zero Hessian) needs a value-based floor in the scale
            scale = np.max(np.abs(ref)) + 1e-2 * (abs(bun.value) + 1.0)
            assert np.max(np.abs(bun.hessian - ref)) <= 1e-5 * scale

    def test_log_fields(self):
        F = SpeedFunction.sigma_power(2, 0.5)
        lam = CurvatureVector((0.7, 1.3, 2.9))
        bun = eval_bundle(F, lam)
        assert bun.has_log
        assert np.allclose(bun.log_gradient, bun.gradient / bun.value)
        ref = (bun.hessian / bun.value
               - np.outer(bun.gradient, bun.gradient) / bun.value ** 2)
        assert np.allclose(bun.log_hessian, ref)

    def test_no_log_for_negative_value(self):
        F = SpeedFunction.parse("1*sigma(1)^2 - 3*sigma(2)")
        lam = CurvatureVector((1.0, 1.0))  # 4 - 3 = 1 > 0
        assert eval_bundle(F, lam).has_log
        lam2 = CurvatureVector((1.0, 4.0))  # 25 - 12 > 0 still; use a true negative
        F2 = SpeedFunction.parse("1*sigma(2) - 1*sigma(1)^2")
        assert not eval_bundle(F2, lam2).has_log

    @pytest.mark.parametrize("F", SPEEDS, ids=str)
    def test_euler_residual_zero(self, F):
        rng = np.random.default_rng(13)
        for _ in range(10):
            arr = np.sort(rng.uniform(0.2, 5.0, size=5))
            lam = CurvatureVector(tuple(arr))
            val = abs(eval_bundle(F, lam).value) + 1.0
            assert abs(euler_residual(F, lam)) <= 1e-11 * val * max(arr)


def eig_perturbation_oracle(F, arr, B, h=1e-4):
    """Finite difference of t -> F(eigenvalues(diag(arr) + t B)) at 0."""
    def f(t):
        vals = np.linalg.eigvalsh(np.diag(arr) + t * B)
        return eval_bundle(F, CurvatureVector(tuple(vals))).value
    first = (f(h) - f(-h)) / (2 * h)
    second = (f(h) - 2 * f(0.0) + f(-h)) / h ** 2
    return first, second


class TestSecondDerivativeForm:
    def test_worked_example(self):
        F = SpeedFunction.sigma_power(2, 1.0)
        lam = CurvatureVector((1.0, 2.0))
        B = np.array([[0.0, 1.0], [1.0, 0.0]])
        first, second = second_derivative_form(F, lam, B)
        assert first == pytest.approx(0.0, abs=1e-14)
        assert second == pytest.approx(-2.0, rel=1e-12)

    def test_diagonal_direction_is_pure_hessian(self):
        F = SpeedFunction.sigma_power(2, 0.5)
        lam = CurvatureVector((0.6, 1.1, 2.2))
        d = np.array([0.3, -0.7, 1.1])
        bun = eval_bundle(F, lam)
        first, second = second_derivative_form(F, lam, np.diag(d))
        assert first == pytest.approx(float(bun.gradient @ d), rel=1e-13)
        assert second == pytest.approx(float(d @ bun.hessian @ d), rel=1e-12)

    @pytest.mark.parametrize("F", SPEEDS[:5], ids=str)
    def test_matches_eigen_perturbation(self, F):
        rng = np.random.default_rng(21)
        for _ in range(10):
            arr = np.sort(rng.uniform(0.5, 3.0, size=4))
            B = rng.standard_normal((4, 4))
            B = (B + B.T) / 2
            first, second = second_derivative_form(F, CurvatureVector(tuple(arr)), B)
            rf, rs = eig_perturbation_oracle(F, arr, B)
            assert first == pytest.approx(rf, rel=1e-6, abs=1e-8)
            assert second == pytest.approx(rs, rel=1e-4, abs=1e-4)

    def test_clustered_eigenvalues(self):
        F = SpeedFunction.sigma_power(2, 0.5)
        arr = np.array([1.0, 1.0 + 1e-12, 2.0, 3.0])
        B = np.array([[0.0, 1.0, 0.0, 0.0],
                      [1.0, 0.0, 0.0, 0.0],
                      [0.0, 0.0, 0.0, 0.5],
                      [0.0, 0.0, 0.5, 0.0]])
        first, second = second_derivative_form(F, CurvatureVector(tuple(arr)), B)
        assert math.isfinite(second)
        # the perturbed pair must agree with the exactly-degenerate limit
        arr2 = np.array([1.0, 1.0, 2.0, 3.0])
        _, second2 = second_derivative_form(F, CurvatureVector(tuple(arr2)), B)
        assert second == pytest.approx(second2, rel=1e-6)

    def test_rejects_asymmetric(self):
        F = SpeedFunction.sigma_power(1, 1.0)
        lam = CurvatureVector((1.0, 2.0))
        with pytest.raises(ValueError):
            second_derivative_form(F, lam, np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestAxisymmetricEval:
    @pytest.mark.parametrize("F", SPEEDS, ids=str)
    def test_matches_full_bundle(self, F):
        rng = np.random.default_rng(31)
        n = 4
        for _ in range(10):
            # keep lm strictly below lp so the sorted spectrum is
            # (lm, lp, lp, lp) and gradient components are unambiguous
            lm = float(rng.uniform(0.3, 0.9))
            lp = float(rng.uniform(1.1, 2.0))
            full = (lm,) + (lp,) * (n - 1)
            bun = eval_bundle(F, CurvatureVector(full))
            v, dm, dp = eval_on_axisymmetric(F, np.array([lm]), np.array([lp]), n)
            assert v[0] == pytest.approx(bun.value, rel=1e-12)
            assert dm[0] == pytest.approx(bun.gradient[0], rel=1e-10)
            assert dp[0] == pytest.approx(bun.gradient[1], rel=1e-10)
