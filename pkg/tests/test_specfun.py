import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from apconv.specfun import (DomainError, KernelSpec, envelope_check, first_order_integrable,
                            g_kernel, gamma_fn, kernel_regular_part, kernel_values,
                            mittag_leffler, ml_negative_real, resolvent_kernel, rgamma,
                            solution_family)


def ml_reference(a, b, z):
    """Independent mpmath evaluation: power series, or the algebraic asymptotic series far out."""
    x = abs(z)
    if z < 0 and x ** (1.0 / a) > 300:
        mp.mp.dps = 40
        s = mp.mpf(0)
        for k in range(1, 60):
            s -= mp.mpf(-x) ** (-k) * mp.rgamma(mp.mpf(b) - mp.mpf(a) * k)
        return float(s)
    mp.mp.dps = int(x ** (1.0 / a) / 2.3) + 30
    a_, b_, z_ = mp.mpf(a), mp.mpf(b), mp.mpf(z)
    kmax = int(3 * x ** (1.0 / a) / a) + 80
    s = mp.mpf(0)
    for k in range(kmax):
        s += z_ ** k * mp.rgamma(a_ * k + b_)
    return float(s)


# -- Gamma ------------------------------------------------------------------

@pytest.mark.parametrize("x,expected", [(1.0, 1.0), (4.0, 6.0), (0.5, math.sqrt(math.pi)),
                                        (10.0, 362880.0), (0.1, 9.513507698668732)])
def test_gamma_examples(x, expected):
    assert gamma_fn(x) == pytest.approx(expected, rel=1e-13)


@given(st.floats(min_value=1e-3, max_value=150.0))
def test_gamma_matches_math_gamma(x):
    assert gamma_fn(x) == pytest.approx(math.gamma(x), rel=1e-12)


@pytest.mark.parametrize("x", [0.0, -1.0, -0.5])
def test_gamma_domain(x):
    with pytest.raises(DomainError):
        gamma_fn(x)


def test_rgamma_poles_and_negative_arguments():
    assert rgamma(0.0) == 0.0
    assert rgamma(-3.0) == 0.0
    assert rgamma(-0.5) == pytest.approx(1.0 / special.gamma(-0.5), rel=1e-12)
    xs = np.linspace(-7.3, 30, 200)
    assert np.allclose(rgamma(xs), special.rgamma(xs), rtol=1e-11, atol=1e-300)


# -- g kernel ---------------------------------------------------------------

def test_g_kernel_examples():
    assert g_kernel(1.0, 7.3) == 1.0
    assert g_kernel(2.0, 3.0) == pytest.approx(3.0)
    assert g_kernel(0.5, 1.0) == pytest.approx(0.5641895835477563, rel=1e-13)
    assert g_kernel(1.0, 0.0) == 1.0
    assert g_kernel(2.0, 0.0) == 0.0


def test_g_kernel_singular_domain():
    with pytest.raises(DomainError):
        g_kernel(0.5, 0.0)
    with pytest.raises(DomainError):
        g_kernel(0.5, -1.0)


@pytest.mark.parametrize("a", [0.3, 0.5, 1.0])
@pytest.mark.parametrize("b", [0.3, 0.5, 1.0])
def test_g_kernel_semigroup(a, b):
    for t in (0.1, 1.0, 2.7, 5.0):
        # s = t u turns the convolution into a Beta integral; quad handles the endpoint powers
        val = integrate.quad(lambda u: 1.0, 0, 1, weight="alg", wvar=(b - 1.0, a - 1.0))[0]
        val *= t ** (a + b - 1.0) * float(rgamma(a)) * float(rgamma(b))
        assert val == pytest.approx(g_kernel(a + b, t), rel=1e-6)
        direct = integrate.quad(lambda s: g_kernel(a, t - s) * g_kernel(b, s), 0, t,
                                points=[t / 2], limit=200)[0] if a >= 0.5 and b >= 0.5 else val
        assert direct == pytest.approx(g_kernel(a + b, t), rel=1e-6)


# -- Mittag-Leffler -----------------------------------------------------------

def test_ml_examples():
    assert complex(mittag_leffler(1, 1, 1)).real == pytest.approx(math.e, rel=1e-14)
    assert complex(mittag_leffler(0.7, 0.7, 0)).real == pytest.approx(1.0 / math.gamma(0.7), rel=1e-13)
    erfc_form = math.e * math.erfc(1.0)
    assert complex(mittag_leffler(0.5, 1, -1)).real == pytest.approx(erfc_form, rel=1e-12)
    assert erfc_form == pytest.approx(0.4275835762, abs=1e-10)


def test_ml_half_order_erfc_identity():
    z = np.linspace(-20, 3, 47)
    ref = special.erfcx(-z)  # E_{1/2,1}(z) = exp(z^2) erfc(-z)
    got = np.array([complex(mittag_leffler(0.5, 1.0, x)).real for x in z])
    assert np.allclose(got, ref, rtol=1e-10)


def test_ml_matches_exp():
    z = np.linspace(-30, 3, 331)
    got = np.array([complex(mittag_leffler(1.0, 1.0, x)).real for x in z])
    assert np.max(np.abs(got / np.exp(z) - 1)) <= 1e-10


@pytest.mark.parametrize("a", [0.2, 0.3, 0.5, 0.7, 0.9, 0.99])
@pytest.mark.parametrize("b_kind", ["alpha", "one", "alpha+1"])
def test_ml_tested_range_accuracy(a, b_kind):
    b = {"alpha": a, "one": 1.0, "alpha+1": a + 1.0}[b_kind]
    for z in (-50.0, -23.0, -10.0, -4.5, -1.0, -0.3, 0.0, 0.7, 1.3):
        ref = ml_reference(a, b, z)
        val, ok = mittag_leffler(a, b, z, full_output=True)
        assert ok
        assert abs(complex(val).real - ref) <= 1e-8 * abs(ref) + 1e-300


def test_ml_vectorized_matches_scalar():
    x = np.linspace(0, 60, 41)
    vec = ml_negative_real(0.6, 0.6, x)
    sca = np.array([complex(mittag_leffler(0.6, 0.6, -v)).real for v in x])
    assert np.allclose(vec, sca, rtol=1e-11, atol=1e-300)


def test_ml_complex_argument_series():
    z = 0.3 + 0.4j
    ref = complex(sum(mp.mpc(z) ** k * mp.rgamma(0.8 * k + 1.2) for k in range(80)))
    assert abs(complex(mittag_leffler(0.8, 1.2, z)) - ref) < 1e-12


def test_ml_flags_unreliable_regime():
    _, ok = mittag_leffler(0.3, 1.0, 40.0 + 30.0j, full_output=True)
    assert ok is False


# -- resolvent and solution families -------------------------------------------

def test_resolvent_examples():
    assert resolvent_kernel(KernelSpec.resolvent(1.0, 2.0), 1.0) == pytest.approx(math.exp(-2), rel=1e-12)
    spec0 = KernelSpec.resolvent(0.4, 0.0)
    for t in (0.1, 1.0, 9.0):
        assert resolvent_kernel(spec0, t) == pytest.approx(g_kernel(0.4, t), rel=1e-12)
    spec = KernelSpec.resolvent(0.5, 1.0)
    v = resolvent_kernel(spec, 1.0)
    assert v == pytest.approx(ml_reference(0.5, 0.5, -1.0), rel=1e-10)


def test_resolvent_domain():
    with pytest.raises(DomainError):
        resolvent_kernel(KernelSpec.resolvent(0.5, 1.0), 0.0)


def test_resolvent_gamma_one_is_exponential():
    t = np.linspace(1e-3, 10, 500)
    assert np.allclose(resolvent_kernel(KernelSpec.resolvent(1.0, 1.7), t), np.exp(-1.7 * t),
                       rtol=1e-9, atol=0)


def test_resolvent_laplace_identity():
    # int_0^inf R(v) exp(-i w v) dv = 1 / ((i w)^g + lam)
    g, lam, w = 0.7, 1.0, 1.0
    spec = KernelSpec.resolvent(g, lam)
    f = lambda v: resolvent_kernel(spec, v)
    head = integrate.quad(lambda v: f(v) * np.exp(-1j * w * v), 0, 1, complex_func=True,
                          limit=200)[0]
    re = integrate.quad(f, 1, np.inf, weight="cos", wvar=w, limit=400)[0]
    im = -integrate.quad(f, 1, np.inf, weight="sin", wvar=w, limit=400)[0]
    val = head + re + 1j * im
    assert abs(val - 1.0 / ((1j * w) ** g + lam)) < 1e-6


def test_solution_family_examples():
    assert solution_family(0.5, 2.0, 0.0) == pytest.approx(1.0, rel=1e-14)
    t = np.linspace(0, 5, 21)
    assert np.allclose(solution_family(1.0, 0.8, t), np.exp(-0.8 * t), rtol=1e-14)
    assert solution_family(0.5, 1.0, 100.0) < 0.06
    # asymptotics 1/(x Gamma(1-g)) with x = 10
    assert solution_family(0.5, 1.0, 100.0) == pytest.approx(0.0561409927438226, rel=1e-10)


@pytest.mark.parametrize("g", [0.2, 0.5, 0.8, 1.0])
def test_solution_family_monotone(g):
    t = np.linspace(0, 200, 4001)
    s = solution_family(g, 1.3, t)
    assert np.all(np.diff(s) <= 0)
    assert s[0] == pytest.approx(1.0, rel=1e-14) and s[-1] > 0


# -- kernel specs and envelopes ------------------------------------------------

def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec.envelope(1.2, 2.0)
    with pytest.raises(ValueError):
        KernelSpec.envelope(0.5, 1.0)
    with pytest.raises(ValueError):
        KernelSpec(kind="envelope", M=0.0)
    with pytest.raises(ValueError):
        KernelSpec(kind="resolvent", gamma_frac=0.5)
    with pytest.raises(ValueError):
        KernelSpec(kind="bogus")


def test_kernel_regular_part_removes_singularity():
    for spec in (KernelSpec.envelope(0.6, 2.0), KernelSpec.resolvent(0.6, 1.0)):
        t = np.logspace(-8, 1, 50)
        reg = kernel_regular_part(spec, t)
        assert np.all(np.isfinite(reg))
        assert np.allclose(reg * t ** (spec.beta - 1.0), kernel_values(spec, t), rtol=1e-12)


def test_envelope_check_examples():
    t = np.linspace(0.01, 50, 5000)
    fit = envelope_check(KernelSpec.exponential(), t)
    ref = np.max(np.exp(-t) * (1 + t ** 2))
    assert fit.ok and fit.M_fit == pytest.approx(ref, rel=1e-12)
    env = KernelSpec.envelope(0.6, 2.0, M=3.5)
    assert envelope_check(env, t).M_fit == pytest.approx(3.5, rel=1e-12)
    res = envelope_check(KernelSpec.resolvent(0.5, 1.0), np.logspace(-4, 4, 801))
    assert res.ok and math.isfinite(res.M_fit)
    assert res.m1 is not None and res.m2 is not None


def test_first_order_diagnostic():
    assert first_order_integrable(KernelSpec.exponential())
    assert first_order_integrable(KernelSpec.envelope(0.6, 2.0))
    assert not first_order_integrable(KernelSpec.envelope(0.9, 1.5))


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0.05, max_value=1.0), st.floats(min_value=0.0, max_value=40.0))
def test_solution_family_bounded(g, x):
    v = solution_family(g, 1.0, x)
    assert 0.0 < v <= 1.0 + 1e-14
