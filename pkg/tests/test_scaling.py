import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quadboundary import scaling as S
from quadboundary.scaling import QuadratureConfig, ScalingError


# ---------------------------------------------------------------------------
# independent arbitrary-precision oracles: real-axis integration, no contour shift

def mp_f(D, s):
    q = mp.sqrt(s)
    a = mp.sqrt(1.5) * q * D
    return mp.sqrt(1.5) * q * mp.coth(a)


def mp_Phi(D):
    def g(xi):
        s = -1j * xi
        F = 2 * (mp_f(D, s) ** 2 - s)
        return 1j * xi * mp.exp(-xi**2) * F
    return mp.re(2 / mp.sqrt(mp.pi) * mp.quad(g, [-mp.inf, -2, 0, 2, mp.inf]))


def mp_Phi_bar(D, P):
    def g(xi):
        s = -1j * xi
        fv = mp_f(D, s)
        J = mp.quad(lambda K: 2 * K * mp.exp(-K**2 / P - 2 * fv * K), [0, mp.inf])
        return (xi / 1j) * mp.exp(-xi**2 + 1j * xi * P) * (1 + (3 * s - 2 * fv**2) * J)
    return mp.re(2 / (mp.sqrt(mp.pi) * P) * mp.exp(mp.mpf(P) ** 2 / 4) * mp.quad(g, [-mp.inf, -2, 0, 2, mp.inf]))


@pytest.mark.parametrize("D", [0.5, 1.0, 2.0, 3.0])
def test_Phi_matches_mpmath(D):
    with mp.workdps(20):
        ref = float(mp_Phi(D))
    assert S.Phi(D) == pytest.approx(ref, abs=1e-10)


@pytest.mark.parametrize("D,P", [(1.0, 0.5), (0.7, 2.0)])
def test_Phi_bar_matches_mpmath(D, P):
    with mp.workdps(15):
        ref = float(mp_Phi_bar(D, P))
    assert S.Phi_bar(D, P) == pytest.approx(ref, abs=1e-9)


def test_Phi_values_at_moderate_D():
    # the two-point function approaches 1 only slowly: 1 - Phi(3) is about 4e-2
    assert S.Phi(3.0) == pytest.approx(0.959, abs=1e-3)
    assert S.Phi(8.0) == pytest.approx(1.0, abs=1e-8)


# ---------------------------------------------------------------------------
# kernels and branch

def test_kernel_large_D():
    k = S.kernels(40.0, 1.0)
    assert k["f"] == pytest.approx(math.sqrt(1.5), abs=1e-12)
    assert k["F"] == pytest.approx(1.0, abs=1e-12)
    k = S.kernels(40.0, -1.0, sqrt_mu=-1j)
    assert k["F"] == pytest.approx(-1j, abs=1e-12)


@settings(max_examples=60)
@given(st.floats(0.01, 20), st.floats(-30, 30), st.floats(-30, 30))
def test_F_identity(D, re, im):
    s = complex(re, im)
    f = S.f_kernel(D, s)
    F = S.F_kernel(D, s)
    assert abs(F - 2 * (f * f - s)) <= 1e-12 * max(1, abs(F))


@settings(max_examples=60)
@given(st.floats(0.05, 10), st.floats(0.01, 30))
def test_F_sinh_form(D, s):
    a = math.sqrt(1.5 * s) * D
    if a > 300:
        return
    expected = s * (1 + 3 / math.sinh(a) ** 2)
    assert S.F_kernel(D, s).real == pytest.approx(expected, rel=1e-10)


def test_kernel_even_in_q_no_overflow():
    # huge |a| on every ray stays finite
    for s in (1e6, -1e6j, 1e6j, -1e6 + 1e-3j):
        assert np.isfinite(S.f_kernel(2.0, s))


@given(st.floats(-50, 50).filter(lambda x: x != 0))
def test_branch_real_part(xi):
    s, q = S.branch(xi)
    assert q.real > 0
    assert s == pytest.approx(-1j * xi)


def test_xcoth_series_continuity():
    for a in (0.2999999, 0.3000001, 0.3 + 0.2j, 0.29j):
        g = S._xcoth_minus_one(a)
        assert g == pytest.approx(complex(mp.mpc(a) * mp.coth(mp.mpc(a)) - 1), abs=1e-14)


# ---------------------------------------------------------------------------
# transform

def test_transform_odd_integrand_vanishes():
    assert S.gaussian_transform(lambda s: np.ones_like(s)).value == pytest.approx(0, abs=1e-14)


def test_transform_normalization():
    # F -> sqrt(mu) at large D gives Phi(inf) = 1
    t = S.gaussian_transform(lambda s: s)
    assert -2 / math.sqrt(math.pi) * t.value == pytest.approx(1.0, abs=1e-13)


def test_transform_reports_branch_error():
    with pytest.raises(ScalingError):
        S.gaussian_transform(lambda s: 1j * s)


def test_quadrature_refinement_stable():
    coarse = QuadratureConfig(nodes=512)
    for D in (0.3, 1.0, 2.5):
        assert S.Phi(D, coarse) == pytest.approx(S.Phi(D), abs=1e-12)
        val, err = S.Phi_with_error(D)
        assert err < 1e-10


@pytest.mark.parametrize("fn", [S.Phi, lambda D: S.Phi_bar(D, 1.0), lambda D: S.Phi_hat(D, 0.5),
                                lambda D: S.Phi_bar(D, 0.01)])
def test_cdfs_monotone(fn):
    grid = np.linspace(0.02, 6, 80)
    vals = np.array([fn(D) for D in grid])
    assert np.all(np.diff(vals) > -1e-12)
    assert 0 <= vals[0] < 1e-3 and vals[-1] > 0.99


def test_small_D_expansions():
    for D in (0.02, 0.05):
        assert S.Phi(D) == pytest.approx(3 / 28 * D**4, rel=2e-2)
    assert S.Phi_bar(0.05, 1.0) == pytest.approx(1.875e-3, abs=1e-5)
    for P in (0.5, 2.0):
        D = 0.05
        assert S.Phi_bar(D, P) == pytest.approx(0.75 * P * D**2 - 0.375 * (P * P - 1) * D**4, abs=1e-5)


def test_inner_integral_routes_agree():
    fs = np.array([0.3 + 0.1j, 2.0 - 1.5j, 5.0 + 4.0j, -0.2 + 0.5j])
    for P in (0.1, 1.0, 10.0):
        a = S.inner_K_integral(fs, P, "closed")
        b = S.inner_K_integral(fs, P, "quad")
        assert np.allclose(a, b, rtol=1e-9, atol=1e-12)
    cfg = QuadratureConfig(nodes=256, inner="quad")
    assert S.Phi_bar(1.2, 1.0, cfg) == pytest.approx(S.Phi_bar(1.2, 1.0), abs=1e-8)


def test_Phi_bar_sa_is_rescaled():
    assert S.Phi_bar_sa(0.8, 0.4) == pytest.approx(S.Phi_bar(0.8, 1.2), abs=1e-15)


# ---------------------------------------------------------------------------
# H family

def test_H_large_D():
    for s, muB in ((1.0, 0.5), (0.3, 2.0)):
        assert S.H_family("H", D=60.0, s=s, mu_B=muB) == pytest.approx(math.sqrt(muB + s), abs=1e-12)


def test_H_bar_limits():
    D, s = 1.3, 0.7
    P = 1e-4
    lead = S.H_bar_small_P(D, P, s)
    assert abs(S.H_bar(D, P, s) - lead) < 5 * P**-0.5
    P = 40.0
    assert S.H_bar(D, P, s) == pytest.approx(S.H_bar_large_P(D, P, s), rel=1e-3)


def test_H_family_dispatch():
    assert S.H_family("Hbar", D=1.0, P=1.0, mu=0.25) == pytest.approx(complex(S.H_bar(1.0, 1.0, 0.5)))
    assert S.H_family("sigma1", D=1.0, P=1.0) == S.sigma1(1.0, 1.0)
    with pytest.raises(ScalingError):
        S.H_family("nope", D=1.0, mu=1.0)
    with pytest.raises(ScalingError):
        S.H_family("H", D=-1.0, mu=1.0, mu_B=0.0)


@pytest.mark.parametrize("kind,tol", [("ode_H", 1e-6), ("pde_Gstar", 1e-5), ("diffusion_pde", 1e-5),
                                      ("laplace_HHbar", 1e-4)])
def test_residuals(kind, tol):
    r = S.residual_checks(kind)
    assert r.max_residual < tol and r.points > 0


# ---------------------------------------------------------------------------
# densities and limit laws

def test_small_P_density_normalized():
    assert S.integrate_density(S.rho_tilde_bound_small_P) == pytest.approx(1.0, abs=1e-10)
    assert S.integrate_density(S.rayleigh) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("P", [0.5, 5.0])
def test_rho_tilde_normalized(P):
    assert S.rho_tilde_normalization(P) == pytest.approx(1.0, abs=1e-8)


def test_rho_tilde_u_normalized():
    assert S.rho_tilde_u_normalization(0.3, 1.0) == pytest.approx(1.0, abs=1e-8)


def mp_sigma(D, P, k):
    c = mp.mpf(P) / 2

    def g(t):
        xi = t + 1j * c
        return (xi / 1j) * mp.exp(-xi**2 + 1j * xi * P + mp.mpf(P) ** 2 / 4) * mp_f(D, -1j * xi) ** k
    return 2 / (mp.sqrt(mp.pi) * P) * mp.quad(g, [-mp.inf, -2, 0, 2, mp.inf])


def mp_rho_tilde(delta, P):
    D = delta * mp.sqrt(P)
    s1, s2 = mp_sigma(D, P, 1), mp_sigma(D, P, 2)
    P = mp.mpf(P)
    body = (2 * D**3 - 3 * D * P) + (4 * D**2 * P - 2 * P**2) * s1 + 2 * D * P**2 * s2
    return mp.re(mp.sqrt(P) * 4 / (3 * P**4) * mp.exp(-D**2 / P) * body)


@pytest.mark.parametrize("delta,P", [(0.3, 50.0), (1.0, 1.0), (0.5, 0.2)])
def test_rho_tilde_matches_mpmath(delta, P):
    with mp.workdps(25):
        ref = float(mp_rho_tilde(delta, P))
    assert S.rho_tilde_bound(delta, P) == pytest.approx(ref, abs=1e-10)


def test_limit_law_values():
    assert S.mean_delta_large_P(0.5) == pytest.approx(2 / math.sqrt(math.pi))
    assert S.integrate_density(lambda d: S.rho_tilde_u_large_P(d, 0.3), 12) == pytest.approx(1.0, abs=1e-8)
    assert S.integrate_density(lambda d: S.rho_tilde_u_small_P(d, 0.3), 12) == pytest.approx(1.0, abs=1e-8)


def test_mean_delta_between_limits():
    for P in (0.5, 5.0):
        m = S.mean_delta(0.5, P)
        assert S.mean_delta_large_P(0.5) < m < S.mean_delta_small_P(0.5)


def test_large_P_crossover():
    D = np.linspace(0.05, 1.0, 10) / math.sqrt(50)
    gap = max(abs(S.Phi_bar(d, 50) - S.Phi_bar_large_P(d, 50)) for d in D)
    assert gap < 1e-3


def test_supercritical_density_normalized():
    assert S.integrate_density(lambda D: S.rho_bound_supercritical(D, 0.2), 20) == pytest.approx(1.0, abs=1e-8)


# ---------------------------------------------------------------------------
# critical constants and discrete laws

def test_critical_constants():
    assert S.g_crit2(1 / 8) == pytest.approx(1 / 12, abs=1e-15)
    assert S.g_tilde_crit(2 / 9) == pytest.approx(1 / 12, abs=1e-15)
    assert S.g_hat_crit(4 / 81) == pytest.approx(1 / 12, abs=1e-15)
    assert S.x_crit(1 / 8) == 1.0
    assert S.x_tilde_crit(2 / 9) == pytest.approx(1.0, abs=1e-12)
    assert S.mean_p_super(1 / 6) == pytest.approx(1.0)
    assert S.critical_value("g_crit2", 1 / 8) == S.g_crit2(1 / 8)
    with pytest.raises(ScalingError):
        S.critical_value("nope", 0.1)
    with pytest.raises(ScalingError):
        S.mean_p_sub(0.2)


def test_amplitudes():
    assert S.A(1 / 8) == pytest.approx(2.0)
    assert S.A_tilde(2 / 9) == pytest.approx(1.5)


def test_loop_constants():
    assert S.a_loop(0.04) == pytest.approx(0.10794, abs=1e-5)
    assert S.b_loop(0.04) == pytest.approx(0.11288, abs=1e-5)


@pytest.mark.parametrize("z", [0.13, 0.2, 0.24])
def test_phi_z_is_cdf(z):
    d = np.arange(0, 400)
    v = S.phi_z(d, z)
    assert np.all(np.diff(v) >= 0) and v[-1] == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("Z", [0.23, 0.26, 0.3])
def test_phi_tilde_forms_agree(Z):
    d = np.arange(0, 200)
    assert np.allclose(S.phi_tilde_Z(d, Z), S.phi_tilde_Z_from_f(d, Z), atol=1e-12)
    v = S.phi_tilde_Z(d, Z)
    assert np.all(np.diff(v) >= -1e-15) and v[-1] == pytest.approx(1.0, abs=1e-9)


def test_ratio_scans_monotone():
    for kind in ("phi_z", "phi_tilde_Z"):
        scans = S.tanh_ratio_scan(kind)
        devs = [r.max_dev for r in scans]
        assert all(a > b for a, b in zip(devs, devs[1:]))
        assert devs[-1] < 0.05


def test_distribution_dispatch():
    assert S.distribution("Phi", D=1.0) == S.Phi(1.0)
    assert S.distribution("rayleigh", delta=1.0) == pytest.approx(2 / math.e)
    v, e = S.distribution_with_error("Phi_bar", D=1.0, P=1.0)
    assert e is not None and e < 1e-8
    assert S.distribution_with_error("rayleigh", delta=1.0)[1] is None
    with pytest.raises(ScalingError):
        S.distribution("Phi_bar", D=1.0)
    with pytest.raises(ScalingError):
        S.distribution("unknown")
    assert "mean_delta" in S.distribution_kinds()


def test_domain_errors():
    with pytest.raises(ScalingError):
        S.Phi(-1.0)
    with pytest.raises(ScalingError):
        S.phi_z(3, 0.1)
    with pytest.raises(ScalingError):
        S.inner_K_integral(1.0, 0.0)
