"""Special functions and small linear algebra."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial.legendre import leggauss

from halfcavity.numerics import (
    DegenerateKernelError,
    SingularMatrixError,
    expm_convolution,
    kummer_minus_exp,
    matrix_exponential,
    null_eigenvector,
    poisson_weight,
    solve_linear,
)

try:
    import mpmath
    HAVE_MPMATH = True
except ImportError:  # pragma: no cover
    HAVE_MPMATH = False


def kummer_series_naive(n, s, terms=600):
    """Raw hypergeometric series minus exp, plus its cancellation floor.

    The raw series converges for every s but loses digits in proportion to
    its largest intermediate term; the floor returned alongside the value
    is that term times machine epsilon.
    """
    total = 0.0 + 0.0j
    term = 1.0 + 0.0j
    biggest = 0.0
    for k in range(terms):
        contrib = term * (n / (n + k) if n else (1.0 if k == 0 else 0.0))
        total += contrib
        biggest = max(biggest, abs(contrib))
        term *= s / (k + 1)
    return total - np.exp(s), 10.0 * biggest * np.finfo(float).eps


def lower_gamma_quadrature(a, z, nodes=400):
    """int_0^z t^(a-1) e^-t dt along the straight ray, Gauss-Legendre."""
    x, w = leggauss(nodes)
    t = 0.5 * z * (x + 1.0)
    return 0.5 * z * np.sum(w * t ** (a - 1) * np.exp(-t))


class TestKummerMinusExp:
    def test_order_zero_closed_form(self):
        assert kummer_minus_exp(0, 2.0) == pytest.approx(1.0 - math.e**2, rel=1e-14)

    def test_order_one_unit_argument(self):
        # 1F1(1,2;s) = (e^s - 1)/s, so the gap at order 1, s=1 is exactly -1
        assert kummer_minus_exp(1, 1.0) == pytest.approx(-1.0, rel=1e-13)

    def test_zero_argument(self):
        assert kummer_minus_exp(3, 0.0) == 0.0
        assert kummer_minus_exp(0, 0.0) == 0.0

    def test_matches_naive_series_moderate_domain(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(0, 30))
            s = complex(rng.uniform(-10, 3), rng.uniform(-10, 10))
            ref, floor = kummer_series_naive(n, s)
            got = kummer_minus_exp(n, s)
            assert abs(got - ref) <= 1e-10 * max(abs(ref), 1e-12) + floor

    def test_incomplete_gamma_identity(self):
        # 1F1(n, n+1; s) = n (-s)^-n lower_gamma(n, -s), gamma by quadrature
        for n in range(1, 11):
            for s in (-0.5, -3.0, -12.0, -0.2 + 4.0j, -8.0 - 6.0j, 1.5 + 0.5j):
                f11 = kummer_minus_exp(n, s) + np.exp(s)
                ref = n * (-s) ** (-n) * lower_gamma_quadrature(n, -s)
                assert abs(f11 - ref) <= 1e-8 * max(abs(ref), 1e-12)

    @settings(max_examples=120, deadline=None)
    @given(st.integers(1, 40),
           st.floats(-50.0, 2.0), st.floats(-60.0, 60.0))
    def test_contiguous_recurrence(self, n, re, im):
        # gamma(n+1, z) = n gamma(n, z) - z^n e^-z, rewritten through the gap
        # function as z G_n[s] = n G_{n-1}[s] - z e^s with z = -s
        s = complex(re, im)
        if abs(s) < 1e-6:
            s += 0.5
        z = -s
        lhs = z * kummer_minus_exp(n, s)
        rhs = n * kummer_minus_exp(n - 1, s) - z * np.exp(s)
        scale = max(abs(lhs), abs(rhs), 1e-12)
        assert abs(lhs - rhs) <= 1e-8 * scale

    @pytest.mark.skipif(not HAVE_MPMATH, reason="mpmath unavailable")
    def test_wide_domain_against_mpmath(self):
        mpmath.mp.dps = 40
        rng = np.random.default_rng(11)
        for _ in range(120):
            n = int(rng.integers(0, 101))
            re = -rng.uniform(0.0, 120.0)
            im = rng.uniform(-160.0, 160.0)
            s = complex(re, im)
            if abs(s) > 200:
                s *= 200 / abs(s)
            ref = complex(mpmath.hyp1f1(n, n + 1, s) - mpmath.e**mpmath.mpc(s))
            got = kummer_minus_exp(n, s)
            if abs(ref) > 1e-25:
                assert abs(got - ref) <= 1e-10 * abs(ref)

    def test_vectorized_matches_scalar(self):
        s = np.array([-0.3 + 1j, -20.0, -5.0 - 40.0j, 0.7])
        vec = kummer_minus_exp(4, s)
        for i, si in enumerate(s):
            assert vec[i] == pytest.approx(kummer_minus_exp(4, complex(si)), rel=1e-13)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            kummer_minus_exp(-1, 1.0)
        with pytest.raises(ValueError):
            kummer_minus_exp(2, complex("nan"))


def test_poisson_weight_matches_direct():
    assert poisson_weight(5, 2.0) == pytest.approx(2.0**5 / 120.0, rel=1e-13)
    assert poisson_weight(0, 0.0) == 1.0
    assert poisson_weight(3, 0.0) == 0.0
    # regime where x^n alone would overflow
    w = poisson_weight(400, 100.0)
    assert math.isfinite(w)


class TestMatrixExponential:
    def test_zero_matrix(self):
        assert np.allclose(matrix_exponential(np.zeros((4, 4)), 3.0), np.eye(4))

    def test_known_diagonal(self):
        a = np.diag([1.0 + 2.0j, -0.5])
        out = matrix_exponential(a, 2.0)
        assert np.allclose(np.diag(out), np.exp(2.0 * np.diag(a)), rtol=1e-13)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 4), st.integers(0, 10_000))
    def test_semigroup_and_determinant(self, dim, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        t1, t2 = rng.uniform(0.05, 1.5, size=2)
        whole = matrix_exponential(a, t1 + t2)
        split = matrix_exponential(a, t1) @ matrix_exponential(a, t2)
        assert np.max(np.abs(whole - split)) <= 1e-10 * max(1.0, np.max(np.abs(whole)))
        det = np.linalg.det(matrix_exponential(a, t1))
        assert abs(det - np.exp(np.trace(a) * t1)) <= 1e-8 * max(1.0, abs(det))

    def test_undriven_bloch_first_row_decouples(self):
        from halfcavity.bloch import obe_generator4
        from halfcavity.params import SystemParams

        tau = 0.7
        a4 = obe_generator4(SystemParams(epsilon=0.0, tau=tau, rabi=0.0))
        u = matrix_exponential(a4, tau)
        assert u[0, 0] == pytest.approx(math.exp(-0.5 * tau), rel=1e-12)
        assert np.max(np.abs(u[0, 1:])) < 1e-14

    def test_against_ode_integration(self):
        # columns of exp(A t) solve dU/dt = A U
        from halfcavity import dde
        from halfcavity.bloch import obe_generator4
        from halfcavity.params import SystemParams

        a = obe_generator4(SystemParams(epsilon=0.0, tau=1.0, rabi=2.0))
        t = 1.0
        expm = matrix_exponential(a, t)

        def rhs(_, y):
            return (a @ y.reshape(4, 4)).ravel()

        out = dde.solve_ode(rhs, (0.0, t), np.eye(4, dtype=complex).ravel(),
                            [t], tol=1e-12)[0].reshape(4, 4)
        assert np.max(np.abs(out - expm)) < 1e-9


def test_expm_convolution_against_quadrature():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    b = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    c = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    tau = 0.8
    got = expm_convolution(a, b, c, tau)
    x, w = leggauss(80)
    u = 0.5 * tau * (x + 1.0)
    ref = np.zeros((3, 4), dtype=complex)
    for ui, wi in zip(u, w):
        ref += wi * (matrix_exponential(a, tau - ui) @ b @ matrix_exponential(c, ui))
    ref *= 0.5 * tau
    assert np.max(np.abs(got - ref)) < 1e-9


class TestSolveLinear:
    def test_identity(self):
        b = np.array([1.0, 2.0 + 1j, -3.0])
        assert np.allclose(solve_linear(np.eye(3), b), b)

    def test_diagonal(self):
        m = np.diag([2.0, 4.0j])
        x = solve_linear(m, np.array([2.0, 4.0j]))
        assert np.allclose(x, [1.0, 1.0])

    def test_residual_random(self):
        rng = np.random.default_rng(2)
        m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) + 3 * np.eye(3)
        b = rng.normal(size=3) + 1j * rng.normal(size=3)
        x = solve_linear(m, b)
        assert np.linalg.norm(m @ x - b) <= 1e-10 * np.linalg.norm(b)

    def test_singular_rejected(self):
        m = np.array([[1.0, 1.0], [1.0, 1.0 + 1e-15]])
        with pytest.raises(SingularMatrixError):
            solve_linear(m, np.ones(2))


class TestNullEigenvector:
    def test_diagonal_kernel(self):
        v = null_eigenvector(np.diag([0.0, 1.0, 2.0, 3.0]))
        v = v / v[0]
        assert np.allclose(v, [1.0, 0.0, 0.0, 0.0], atol=1e-12)

    def test_free_space_bloch_steady(self):
        from halfcavity.bloch import obe_generator4
        from halfcavity.params import SystemParams

        a4 = obe_generator4(SystemParams(epsilon=0.0, tau=1.0, rabi=1.0))
        v = null_eigenvector(a4)
        v = v / (v[2] + v[3])
        assert v[2].real == pytest.approx(1.0 / 3.0, abs=1e-10)

    def test_residual_bound(self):
        from halfcavity import delay_kernel
        from halfcavity.params import SystemParams

        p = SystemParams(epsilon=0.1, tau=0.1, theta_l=0.3, rabi=20.0)
        from halfcavity.bloch import obe_generator4
        m = obe_generator4(p) + p.epsilon * delay_kernel(p).k_tau
        v = null_eigenvector(m)
        assert np.linalg.norm(m @ v) <= 1e-8 * np.linalg.norm(v)

    def test_row_scaling_invariance(self):
        m = np.diag([1e-14, 1.0, 2.0, 3.0]).astype(complex)
        m[0, 1] = 1e-15
        v1 = null_eigenvector(m)
        scale = np.diag([2.0, 0.5, 1.5, 3.0])
        v2 = null_eigenvector(scale @ m)
        cosang = abs(np.vdot(v1, v2)) / (np.linalg.norm(v1) * np.linalg.norm(v2))
        assert cosang > 1.0 - 1e-8

    def test_degenerate_rejected(self):
        with pytest.raises(DegenerateKernelError):
            null_eigenvector(np.diag([1e-3, 5e-3, 1.0, 2.0]))
