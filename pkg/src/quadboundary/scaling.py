"""Continuum scaling functions, limit laws and critical constants.

Conventions
-----------
All kernels are written in terms of s = sqrt(mu). In the fixed-area
transforms mu = -xi**2 and the branch is s = -i xi, which makes
F(D; -xi^2) -> -i xi as D -> infinity. Every kernel used here is an even
function of mu^(1/4), hence analytic in s; the only singularities are the
poles of coth, which sit on the negative imaginary xi axis.

The xi integrals all have the form

    I(lam) = int dxi (xi / i) exp(-xi^2 + i xi lam + lam^2 / 4) K(-i xi)

and are evaluated on the shifted line Im xi = lam / 2, where the weight
becomes (xi / i) exp(-t^2) with xi = t + i lam / 2. The trapezoid rule on a
symmetric grid is then spectrally accurate; the error is estimated by
halving the number of nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

SQ32 = math.sqrt(1.5)
SQRT_PI = math.sqrt(math.pi)


class ScalingError(ValueError):
    """Parameters outside the regime of a formula, or a failed numerical check."""


# ---------------------------------------------------------------------------
# quadrature configuration


@dataclass(frozen=True)
class QuadratureConfig:
    xi_max: float = 8.0
    nodes: int = 2048
    tolerance: float = 1e-9
    inner: str = "closed"  # inner K integral: "closed" (erfcx) or "quad"

    def __post_init__(self):
        if self.xi_max <= 0 or self.nodes < 16 or self.nodes % 2:
            raise ScalingError("need xi_max > 0 and an even number of nodes >= 16")
        if self.inner not in ("closed", "quad"):
            raise ScalingError("inner must be 'closed' or 'quad'")


DEFAULT_QUAD = QuadratureConfig()


@dataclass(frozen=True)
class Transform:
    value: float
    error: float
    imag: float


# ---------------------------------------------------------------------------
# kernels

# a coth(a) - 1 = sum_{n>=1} 4^n B_{2n} a^{2n} / (2n)!
_BERN = special.bernoulli(16)
_XCOTH = [4**n * _BERN[2 * n] / math.factorial(2 * n) for n in range(1, 9)]


def _xcoth_minus_one(a):
    """a coth(a) - 1, accurate near a = 0 and without overflow for large |a|."""
    a = np.asarray(a, dtype=complex)
    out = np.empty_like(a)
    small = np.abs(a) < 0.3
    if np.any(small):
        a2 = a[small] ** 2
        acc = np.zeros_like(a2)
        for c in reversed(_XCOTH):
            acc = (acc + c) * a2
        out[small] = acc
    big = ~small
    if np.any(big):
        b = a[big]
        sign = np.where(b.real >= 0, 1.0, -1.0)
        bb = b * sign
        e = np.exp(-2 * bb)
        out[big] = bb * (1 + e) / (1 - e) - 1
    return out


def branch(xi):
    """s = sqrt(mu) for mu = -xi^2 on the branch s = -i xi, and q = sqrt(s) with Re q >= 0."""
    s = -1j * np.asarray(xi, dtype=complex)
    return s, np.sqrt(s)


def _a(D, s):
    return SQ32 * np.sqrt(np.asarray(s, dtype=complex)) * D


def f_kernel(D, s):
    """f(D; mu) = sqrt(3/2) mu^(1/4) coth(sqrt(3/2) mu^(1/4) D)."""
    return (1 + _xcoth_minus_one(_a(D, s))) / D


def F_kernel(D, s):
    """F(D; mu) = 2 (f^2 - sqrt(mu)) = sqrt(mu) (1 + 3 / sinh^2(sqrt(3/2) mu^(1/4) D))."""
    f = f_kernel(D, s)
    return 2 * (f * f - np.asarray(s, dtype=complex))


def kernels(D: float, mu: complex, sqrt_mu: complex | None = None) -> dict:
    """f and F at one point; sqrt_mu fixes the branch (principal root by default)."""
    if D <= 0:
        raise ScalingError("kernels need D > 0")
    s = np.sqrt(complex(mu)) if sqrt_mu is None else complex(sqrt_mu)
    f = complex(f_kernel(D, s))
    return {"f": f, "F": 2 * (f * f - s)}


def inner_K_integral(f, P, method: str = "closed"):
    """int_0^inf 2K exp(-K^2/P - 2 f K) dK = P - sqrt(pi) f P^(3/2) erfcx(f sqrt(P))."""
    if P <= 0:
        raise ScalingError("inner integral needs P > 0")
    f = np.asarray(f, dtype=complex)
    if method == "closed":
        u = f * math.sqrt(P)
        return P * (1 - SQRT_PI * u * special.erfcx(u))
    out = np.empty_like(f)
    for idx, fv in np.ndenumerate(f):
        def part(K, which):
            v = 2 * K * np.exp(-K * K / P - 2 * fv * K)
            return v.real if which == 0 else v.imag
        upper = max(10 * math.sqrt(P), 10.0)
        re = integrate.quad(part, 0, upper, args=(0,), limit=200, epsabs=1e-14, epsrel=1e-12)[0]
        im = integrate.quad(part, 0, upper, args=(1,), limit=200, epsabs=1e-14, epsrel=1e-12)[0]
        out[idx] = re + 1j * im
    return out


def _X(D, P, s, method="closed"):
    """1 + (3 sqrt(mu) - 2 f^2) int_0^inf dK 2K exp(-K^2/P - 2 f K)."""
    s = np.asarray(s, dtype=complex)
    f = f_kernel(D, s)
    return 1 + (3 * s - 2 * f * f) * inner_K_integral(f, P, method)


def H_bar(D, P, s, method="closed"):
    s = np.asarray(s, dtype=complex)
    return np.exp(-s * P) / (SQRT_PI * P**1.5) * _X(D, P, s, method)


def H_hat(D, P, s, method="closed"):
    s = np.asarray(s, dtype=complex)
    return 3 * np.exp(-6 * s * P) / (math.pi * (3 * P) ** 4) * (1 + 3 * P * s) * _X(D, 3 * P, s, method)


def H_crit(D, s, mu_B):
    """H(D; mu, mu_B) = f + (mu_B - sqrt(mu)/2) / (sqrt(mu_B + sqrt(mu)) + f)."""
    s = np.asarray(s, dtype=complex)
    f = f_kernel(D, s)
    return f + (mu_B - s / 2) / (np.sqrt(mu_B + s) + f)


def G_star(D, s, mu_B):
    """d_D d_{mu_B} H, in closed form: -f' (3 sqrt(mu)/2 + r f) / (r (r + f)^3), r = sqrt(mu_B + sqrt(mu))."""
    s = np.asarray(s, dtype=complex)
    f = f_kernel(D, s)
    fprime = -(F_kernel(D, s) - s) / 2
    r = np.sqrt(mu_B + s)
    return -fprime * (1.5 * s + r * f) / (r * (r + f) ** 3)


def K_coefficient(s, mu_B):
    """K(mu, mu_B) = (mu_B - sqrt(mu)/2) sqrt(mu_B + sqrt(mu))."""
    return (mu_B - s / 2) * np.sqrt(mu_B + s)


def diffusion_kernel(D, U, s):
    """P(D, U; mu) up to normalization: e^{-sqrt(mu) U} U^{-5/2} e^{-D^2/4U} (D^2 - 2U + 2 U D f)."""
    s = np.asarray(s, dtype=complex)
    f = f_kernel(D, s)
    return np.exp(-s * U) * U**-2.5 * np.exp(-D * D / (4 * U)) * (D * D - 2 * U + 2 * U * D * f)


def H_family(kind: str, **args):
    """Dispatch to the scaling kernels by name.

    kinds: H, Hbar, Hhat, Gstar, sigma1, sigma2, diffusionP. Arguments are
    D, P, U, mu (or s = sqrt(mu)), mu_B as relevant.
    """
    D = args.get("D")
    if D is not None and D <= 0:
        raise ScalingError("D must be positive")
    if kind == "sigma1":
        return sigma1(D, args["P"])
    if kind == "sigma2":
        return sigma2(D, args["P"])
    s = args.get("s")
    if s is None:
        if "mu" not in args:
            raise ScalingError(f"{kind} needs mu or s")
        s = np.sqrt(complex(args["mu"]))
    if kind == "H":
        return complex(H_crit(D, s, args["mu_B"]))
    if kind == "Hbar":
        return complex(H_bar(D, args["P"], s, args.get("method", "closed")))
    if kind == "Hhat":
        return complex(H_hat(D, args["P"], s, args.get("method", "closed")))
    if kind == "Gstar":
        return complex(G_star(D, s, args["mu_B"]))
    if kind == "diffusionP":
        return complex(diffusion_kernel(D, args["U"], s))
    raise ScalingError(f"unknown kernel {kind!r}")


# ---------------------------------------------------------------------------
# Gaussian transform


def _trapezoid(kernel: Callable, lam: float, xi_max: float, nodes: int) -> complex:
    t = np.linspace(-xi_max, xi_max, nodes + 1)
    h = t[1] - t[0]
    xi = t + 0.5j * lam
    s = -1j * xi
    vals = s * np.exp(-t * t) * kernel(s)
    vals[0] *= 0.5
    vals[-1] *= 0.5
    return complex(h * vals.sum())


def gaussian_transform(kernel: Callable, lam: float = 0.0, config: QuadratureConfig = DEFAULT_QUAD) -> Transform:
    """int dxi (xi/i) exp(-xi^2 + i xi lam + lam^2/4) kernel(-i xi), evaluated on Im xi = lam/2.

    ``kernel`` receives s = sqrt(mu) as a complex array. The result must be
    real; the imaginary part of the raw sum is returned as a branch check.
    """
    full = _trapezoid(kernel, lam, config.xi_max, config.nodes)
    half = _trapezoid(kernel, lam, config.xi_max, config.nodes // 2)
    tail = math.exp(-config.xi_max**2) * (1 + config.xi_max + 0.5 * lam) ** 4
    err = abs(full.real - half.real) + tail
    if abs(full.imag) > max(config.tolerance, 1e-8 * abs(full.real)):
        raise ScalingError(f"imaginary residue {full.imag:.3e} in a real transform (branch error)")
    return Transform(full.real, err, full.imag)


# ---------------------------------------------------------------------------
# distributions


def Phi(D: float, config: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Two-point function: (2/sqrt(pi)) int dxi i xi e^{-xi^2} F(D; -xi^2)."""
    return Phi_with_error(D, config)[0]


def Phi_with_error(D: float, config: QuadratureConfig = DEFAULT_QUAD) -> tuple[float, float]:
    if D < 0:
        raise ScalingError("D must be non-negative")
    if D == 0:
        return 0.0, 0.0
    # i xi = -(xi / i)
    tr = gaussian_transform(lambda s: F_kernel(D, s), 0.0, config)
    c = -2 / SQRT_PI
    return c * tr.value, abs(c) * tr.error


def Phi_bar_with_error(D: float, P: float, config: QuadratureConfig = DEFAULT_QUAD) -> tuple[float, float]:
    """Bulk-boundary CDF at renormalized half-perimeter P."""
    if P <= 0:
        raise ScalingError("P must be positive")
    if D < 0:
        raise ScalingError("D must be non-negative")
    if D == 0:
        return 0.0, 0.0
    tr = gaussian_transform(lambda s: _X(D, P, s, config.inner), P, config)
    c = 2 / (SQRT_PI * P)
    return c * tr.value, c * tr.error


def Phi_bar(D: float, P: float, config: QuadratureConfig = DEFAULT_QUAD) -> float:
    return Phi_bar_with_error(D, P, config)[0]


def Phi_bar_sa(D: float, P: float, config: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Self-avoiding boundary: the generic law at three times the perimeter."""
    return Phi_bar(D, 3 * P, config)


def Phi_hat_with_error(D: float, P: float, config: QuadratureConfig = DEFAULT_QUAD) -> tuple[float, float]:
    """Bulk-loop CDF for a self-avoiding loop of renormalized half-length P."""
    if P <= 0:
        raise ScalingError("P must be positive")
    if D < 0:
        raise ScalingError("D must be non-negative")
    if D == 0:
        return 0.0, 0.0
    tr = gaussian_transform(lambda s: (1 + 3 * P * s) * _X(D, 3 * P, s, config.inner), 6 * P, config)
    c = 2 / (3 * SQRT_PI * P * (1 + 18 * P * P))
    return c * tr.value, c * tr.error


def Phi_hat(D: float, P: float, config: QuadratureConfig = DEFAULT_QUAD) -> float:
    return Phi_hat_with_error(D, P, config)[0]


def _sigma_regular(D: float, P: float, config: QuadratureConfig) -> tuple[float, float]:
    """sigma_1 - 1/D and sigma_2 - 1/D^2.

    With f = (1 + g)/D, the constant parts of f and f^2 transform exactly
    into 1/D and 1/D^2, so only the regular pieces are integrated.
    """
    c = 2 / (SQRT_PI * P)
    g1 = gaussian_transform(lambda s: _xcoth_minus_one(_a(D, s)) / D, P, config)
    g2 = gaussian_transform(lambda s: (lambda g: (2 * g + g * g) / (D * D))(_xcoth_minus_one(_a(D, s))),
                            P, config)
    return c * g1.value, c * g2.value


def sigma1(D: float, P: float, config: QuadratureConfig = DEFAULT_QUAD) -> float:
    return 1 / D + _sigma_regular(D, P, config)[0]


def sigma2(D: float, P: float, config: QuadratureConfig = DEFAULT_QUAD) -> float:
    return 1 / D**2 + _sigma_regular(D, P, config)[1]


def rho_bar_bound(D: float, P: float, config: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Density of the rescaled boundary-boundary distance D = d n^(-1/4)."""
    if P <= 0 or D < 0:
        raise ScalingError("need P > 0 and D >= 0")
    if D == 0:
        return 0.0
    r1, r2 = _sigma_regular(D, P, config)
    # the 1/D pieces of sigma_1 and sigma_2 combine into 4 D P
    brace = (2 * D**3 - 3 * D * P) + 4 * D * P + (4 * D * D * P - 2 * P * P) * r1 + 2 * D * P * P * r2
    return 4 / (3 * P**4) * math.exp(-D * D / P) * brace


def rho_tilde_bound(delta: float, P: float, config: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Density of the boundary-boundary distance in units of sqrt(p)."""
    return math.sqrt(P) * rho_bar_bound(delta * math.sqrt(P), P, config)


def sigma_tilde_regular(delta: float, P: float, config: QuadratureConfig = DEFAULT_QUAD) -> tuple[float, float]:
    """sigma~_1 - 1/delta and sigma~_2 - 1/delta^2."""
    r1, r2 = _sigma_regular(delta * math.sqrt(P), P, config)
    return math.sqrt(P) * r1, P * r2


def _rho_u_from_sigma(delta, u, P, st1, st2):
    v = u * (1 - u)
    brace = ((delta**2 - 2 * u) * (delta**2 - 2 * (1 - u)) + 2 * delta**2 - 4 * v
             + 2 * delta * (delta**2 - 4 * v) * st1 + 4 * delta**2 * v * st2)
    return np.exp(-delta**2 / (4 * v)) / v**2.5 * brace / (6 * SQRT_PI * P * P)


def rho_tilde_u(delta: float, u: float, P: float, config: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Density of delta for two boundary points a fraction u of the perimeter apart."""
    if not 0 < u < 1:
        raise ScalingError("u must lie in (0, 1)")
    if delta < 0 or P <= 0:
        raise ScalingError("need delta >= 0 and P > 0")
    if delta == 0:
        return 0.0
    st1, st2 = sigma_tilde_regular(delta, P, config)
    return float(_rho_u_from_sigma(delta, u, P, st1, st2))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(96)


def mean_delta(u: float | Sequence[float], P: float, config: QuadratureConfig = DEFAULT_QUAD,
               cut: float = 9.0) -> np.ndarray | float:
    """<delta(u)>_P = int d delta delta rho~(delta, u, P), for one u or an array of u."""
    us = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any((us <= 0) | (us >= 1)):
        raise ScalingError("u must lie in (0, 1)")
    out = np.empty_like(us)
    cache: dict[float, tuple[float, float]] = {}
    for i, uu in enumerate(us):
        width = 2 * math.sqrt(uu * (1 - uu))
        # delta = width * y, y in (0, cut): the Gaussian factor is e^{-y^2}
        ys = 0.5 * cut * (_GL_X + 1)
        ws = 0.5 * cut * _GL_W
        total = 0.0
        for y, w in zip(ys, ws):
            d = width * y
            key = round(d, 15)
            if key not in cache:
                cache[key] = sigma_tilde_regular(d, P, config)
            st1, st2 = cache[key]
            total += w * width * d * _rho_u_from_sigma(d, uu, P, st1, st2)
        out[i] = total
    return out if np.ndim(u) else float(out[0])


# limits


def rayleigh(delta):
    return 2 * np.asarray(delta) * np.exp(-np.asarray(delta) ** 2)


def rho_tilde_bound_small_P(delta):
    d = np.asarray(delta, dtype=float)
    return 2 / 105 * np.exp(-d * d) * (35 * d + 28 * d**3 + 12 * d**5 + 3 * d**7)


def rho_tilde_u_small_P(delta, u):
    d = np.asarray(delta, dtype=float)
    v = u * (1 - u)
    return (np.exp(-d * d / (4 * v)) / (6 * SQRT_PI * v**2.5) * d**4 / 140
            * (70 + 21 * d * d + 3 * d**4 - 42 * v * (d * d + 5)))


def rho_tilde_u_large_P(delta, u):
    d = np.asarray(delta, dtype=float)
    v = u * (1 - u)
    return d * d * np.exp(-d * d / (4 * v)) / (2 * SQRT_PI * v**1.5)


def mean_delta_small_P(u):
    v = np.asarray(u) * (1 - np.asarray(u))
    return 16 / 105 * np.sqrt(v / math.pi) * (35 + 21 * v + 36 * v * v)


def mean_delta_large_P(u):
    v = np.asarray(u) * (1 - np.asarray(u))
    return 4 * np.sqrt(v / math.pi)


def Phi_bar_large_P(D, P):
    return np.tanh(math.sqrt(3) / 2 * np.asarray(D) * math.sqrt(P)) ** 2


def Phi_hat_large_P(D, P):
    return np.tanh(math.sqrt(4.5) * np.asarray(D) * math.sqrt(P)) ** 2


def H_bar_small_P(D, P, s):
    """Leading small-P form (1 - P F(D; mu)) / (sqrt(pi) P^(3/2))."""
    return (1 - P * F_kernel(D, s)) / (SQRT_PI * P**1.5)


def H_bar_large_P(D, P, s):
    s = np.asarray(s, dtype=complex)
    return np.exp(-s * P) / (SQRT_PI * P**1.5) * np.tanh(_a(D, s)) ** 2


def rho_bound_supercritical(D, z):
    """Boundary-boundary density for z > 1/8 in units of n^(1/2)."""
    if not 1 / 8 < z < 1 / 4:
        raise ScalingError("supercritical law needs 1/8 < z < 1/4")
    k = (1 - 4 * z) / (8 * z - 1)
    D = np.asarray(D, dtype=float)
    return 2 * D * k * np.exp(-D * D * k)


# ---------------------------------------------------------------------------
# critical constants


def g_crit1() -> float:
    return 1 / 12


def g_crit2(z: float) -> float:
    if z < 1 / 8:
        raise ScalingError("second critical line exists for z >= 1/8")
    return 4 * z * (1 - 4 * z) / 3


def g_tilde_crit(Z: float) -> float:
    if Z < 2 / 9:
        raise ScalingError("self-avoiding critical line exists for Z >= 2/9")
    return ((4 + 9 * Z) * math.sqrt(16 * Z + 9 * Z * Z) - 9 * Z * (4 + 3 * Z)) / 32


def g_hat_crit(y: float) -> float:
    if y < 4 / 81:
        raise ScalingError("loop critical line exists for y >= 4/81")
    return g_tilde_crit(math.sqrt(y))


def x_crit(z: float) -> float:
    if not 1 / 8 <= z < 1 / 4:
        raise ScalingError("x_crit(z) needs 1/8 <= z < 1/4")
    return (16 * z - 1 - math.sqrt(3 * ((8 * z) ** 2 - 1))) / (2 * (1 - 4 * z))


def x_tilde_crit(Z: float) -> float:
    if Z < 2 / 9:
        raise ScalingError("x~_crit(Z) needs Z >= 2/9")
    r = math.sqrt(Z * (16 + 9 * Z))
    inner = 243 * Z * Z + 144 * Z - 32 + 3 * (27 * Z - 8) * r
    return (27 * Z - 8 + 9 * r - math.sqrt(6) * math.sqrt(max(inner, 0.0))) / 16


def beta(z: float) -> float:
    if z < 1 / 8:
        raise ScalingError("beta(z) needs z >= 1/8")
    return 2 * math.sqrt(3) * math.sqrt(z - 1 / 8)


def beta_tilde(Z: float) -> float:
    if Z < 2 / 9:
        raise ScalingError("beta~(Z) needs Z >= 2/9")
    return 1.5 * math.sqrt(Z - 2 / 9)


def A(z: float) -> float:
    if not 0 < z <= 1 / 8:
        raise ScalingError("A(z) needs 0 < z <= 1/8")
    return (1 - math.sqrt(1 - 8 * z)) / (4 * z)


def A_tilde(Z: float) -> float:
    if not 0 < Z <= 2 / 9:
        raise ScalingError("A~(Z) needs 0 < Z <= 2/9")
    return math.sqrt(2 / Z) * math.sin(math.asin(3 * math.sqrt(Z / 2)) / 3)


def A_tilde_0(Z: float) -> float:
    if not 0 <= Z <= 2 / 9:
        raise ScalingError("A~_0(Z) needs 0 <= Z <= 2/9")
    return 2 / 3 * (-1 + special.hyp2f1(-2 / 3, -1 / 3, 0.5, 4.5 * Z))


def _loop_series(y: float, term: Callable[[int], float], rel: float = 1e-16, p_cap: int = 10**6) -> float:
    total = 0.0
    for p in range(1, p_cap + 1):
        t = term(p)
        total += t
        if p > 10 and t <= rel * total:
            return total
    raise ScalingError("loop series did not converge")


def _lf(k: int) -> float:
    return math.lgamma(k + 1)


def a_loop(y: float) -> float:
    """a(y) = 2 sum_p (4y/9)^p c_p (2 c_p + e_p), c_p = (3p-3)!/(p!(2p-1)!), e_p = (3p-1)!/(p!(2p)!)."""
    if not 0 <= y < 4 / 81:
        raise ScalingError("a(y) needs 0 <= y < 4/81")
    if y == 0:
        return 0.0
    ly = math.log(4 * y / 9)

    def term(p):
        c = _lf(3 * p - 3) - _lf(p) - _lf(2 * p - 1)
        e = _lf(3 * p - 1) - _lf(p) - _lf(2 * p)
        return 2 * (2 * math.exp(p * ly + 2 * c) + math.exp(p * ly + c + e))
    return _loop_series(y, term)


def b_loop(y: float) -> float:
    """b(y) = 6 sum_p (4y/9)^p (3p-3)!/((p-1)!(2p-1)!) (3p-1)!/(p!(2p)!)."""
    if not 0 <= y < 4 / 81:
        raise ScalingError("b(y) needs 0 <= y < 4/81")
    if y == 0:
        return 0.0
    ly = math.log(4 * y / 9)

    def term(p):
        return 6 * math.exp(p * ly + _lf(3 * p - 3) - _lf(p - 1) - _lf(2 * p - 1)
                            + _lf(3 * p - 1) - _lf(p) - _lf(2 * p))
    return _loop_series(y, term)


def mean_p_sub(z: float) -> float:
    """Limit of the mean half-perimeter for z < 1/8."""
    if not 0 < z < 1 / 8:
        raise ScalingError("subcritical mean perimeter needs 0 < z < 1/8")
    r = math.sqrt(1 - 8 * z)
    return 4 * z / ((1 - 8 * z) * (1 - r))


def mean_p_super(z: float) -> float:
    """Coefficient of n in the mean half-perimeter for 1/8 < z < 1/4."""
    if not 1 / 8 < z < 1 / 4:
        raise ScalingError("supercritical mean perimeter needs 1/8 < z < 1/4")
    return (8 * z - 1) / (1 - 4 * z)


@dataclass(frozen=True)
class CriticalConstants:
    g_crit1: float = 1 / 12
    z_crit: float = 1 / 8
    Z_crit: float = 2 / 9
    y_crit: float = 4 / 81

    g_crit2 = staticmethod(g_crit2)
    g_tilde_crit = staticmethod(g_tilde_crit)
    g_hat_crit = staticmethod(g_hat_crit)
    x_crit = staticmethod(x_crit)
    x_tilde_crit = staticmethod(x_tilde_crit)
    beta = staticmethod(beta)
    beta_tilde = staticmethod(beta_tilde)
    A = staticmethod(A)
    A_tilde = staticmethod(A_tilde)
    A_tilde_0 = staticmethod(A_tilde_0)
    a = staticmethod(a_loop)
    b = staticmethod(b_loop)
    mean_p_sub = staticmethod(mean_p_sub)
    mean_p_super = staticmethod(mean_p_super)


CRITICAL = CriticalConstants()

_CRITICAL_KINDS = {
    "g_crit2": g_crit2, "g_tilde_crit": g_tilde_crit, "g_hat_crit": g_hat_crit,
    "x_crit": x_crit, "x_tilde_crit": x_tilde_crit, "beta": beta, "beta_tilde": beta_tilde,
    "mean_p_sub": mean_p_sub, "mean_p_super": mean_p_super, "A": A, "A_tilde": A_tilde,
    "A_tilde_0": A_tilde_0, "a": a_loop, "b": b_loop,
}


def critical_value(kind: str, arg: float) -> float:
    try:
        fn = _CRITICAL_KINDS[kind]
    except KeyError:
        raise ScalingError(f"unknown critical value {kind!r}") from None
    return fn(arg)


# discrete supercritical laws


def phi_z(d, z: float):
    """Bulk-boundary CDF at finite distance d for 1/8 < z < 1/4."""
    if not 1 / 8 < z < 1 / 4:
        raise ScalingError("phi_z needs 1/8 < z < 1/4")
    x = x_crit(z)
    d = np.asarray(d, dtype=float)
    a, b = x ** (d + 1), x ** (d + 2)
    return (1 - a) * (1 - b) / ((1 + a) * (1 + b))


def phi_tilde_Z(d, Z: float):
    """Bulk-boundary CDF for a self-avoiding boundary, Z > 2/9."""
    if Z <= 2 / 9:
        raise ScalingError("phi~_Z needs Z > 2/9")
    x = x_tilde_crit(Z)
    d = np.asarray(d, dtype=float)
    c = (2 + x) / (1 + 2 * x)
    a, b = x**d, x ** (d + 1)
    lead = 27 * x * (1 + x + x * x) / ((2 + x) ** 2 * (1 + 2 * x) ** 2)
    return 1 - lead * (1 - (c - a) * (c - b) / ((c + a) * (c + b)))


def phi_tilde_Z_from_f(d, Z: float):
    """Same law through f~_d = x (1 - x^d)/(1 - x^(d+2)) (cross-check of the two printed forms)."""
    x = x_tilde_crit(Z)
    d = np.asarray(d, dtype=float)

    def ft(k):
        return x * (1 - x**k) / (1 - x ** (k + 2))
    f1 = ft(1)
    fd, fd1 = ft(d), ft(d + 1)
    return 1 + 54 * f1**2 / (2 + 3 * f1) * (fd - fd1) / ((3 * f1 - fd) * (3 * f1 - fd1))


FIG_Z_VALUES = (0.13, 0.126, 0.1255, 0.1251)
FIG_ZTILDE_VALUES = (0.23, 0.225, 0.223, 0.2227)
RATIO_WINDOW = (1.5, 3.0)


@dataclass(frozen=True)
class RatioScan:
    parameter: float
    beta: float
    D: tuple[float, ...]
    ratio: tuple[float, ...]
    max_dev: float
    sup_cdf_gap: float


def tanh_ratio_scan(kind: str, params: Sequence[float] | None = None,
                    window: tuple[float, float] = RATIO_WINDOW, points: int = 31) -> list[RatioScan]:
    """Compare phi_z(d) (or phi~_Z) with tanh^2(d beta) in the scaling variable D = d beta.

    For each parameter the ratio is sampled at the integers d with
    D = d beta in the window; ``max_dev`` is max |ratio - 1| there, and
    ``sup_cdf_gap`` is sup_d |phi - tanh^2| over all d >= 0.
    """
    if kind == "phi_z":
        params = FIG_Z_VALUES if params is None else params
        law, bfun = phi_z, beta
    elif kind == "phi_tilde_Z":
        params = FIG_ZTILDE_VALUES if params is None else params
        law, bfun = phi_tilde_Z, beta_tilde
    else:
        raise ScalingError(f"unknown scan {kind!r}")
    out = []
    for z in params:
        b = bfun(z)
        lo, hi = math.ceil(window[0] / b), math.floor(window[1] / b)
        ds = np.unique(np.linspace(lo, hi, points).round().astype(int))
        ratio = law(ds, z) / np.tanh(ds * b) ** 2
        all_d = np.arange(0, int(6 / b) + 2)
        gap = float(np.max(np.abs(law(all_d, z) - np.tanh(all_d * b) ** 2)))
        out.append(RatioScan(z, b, tuple(float(x) for x in ds * b), tuple(float(r) for r in ratio),
                             float(np.max(np.abs(ratio - 1))), gap))
    return out


# ---------------------------------------------------------------------------
# residual checks


def _d1(fn, x, h):
    return (-fn(x + 2 * h) + 8 * fn(x + h) - 8 * fn(x - h) + fn(x - 2 * h)) / (12 * h)


def _d2(fn, x, h):
    return (-fn(x + 2 * h) + 16 * fn(x + h) - 30 * fn(x) + 16 * fn(x - h) - fn(x - 2 * h)) / (12 * h * h)


@dataclass(frozen=True)
class Residual:
    kind: str
    max_residual: float
    points: int
    step: float


def residual_checks(kind: str, grid: dict | None = None) -> Residual:
    """Largest residual of a differential or integral relation over a grid.

    ode_H:      d_D H - H^2 + F + mu_B = 0
    pde_Gstar:  d_D G* + 2 d_{mu_B}(K G*) = 0
    diffusion:  d_U P - d_D^2 P + F P = 0, relative to the size of the terms
    laplace:    H = sqrt(mu_B + sqrt(mu)) + (1/2) int dP e^{-mu_B P}(e^{-sqrt(mu) P}/(sqrt(pi) P^{3/2}) - Hbar),
                relative error
    Derivatives use five-point centred differences with the reported step.
    """
    grid = dict(grid or {})
    if kind == "ode_H":
        h = grid.get("step", 1e-4)
        Ds = grid.get("D", np.linspace(0.2, 3.0, 57))
        worst = 0.0
        count = 0
        for mu in grid.get("mu", [1.0, 0.5, 2.0]):
            s = math.sqrt(mu)
            for mu_B in grid.get("mu_B", [0.5, 0.1, 1.0]):
                for D in Ds:
                    H = lambda x: H_crit(x, s, mu_B).real
                    r = _d1(H, D, h) - H(D) ** 2 + F_kernel(D, s).real + mu_B
                    worst = max(worst, abs(r))
                    count += 1
        return Residual(kind, worst, count, h)
    if kind == "pde_Gstar":
        h = grid.get("step", 1e-3)
        worst = 0.0
        count = 0
        for mu in grid.get("mu", [1.0, 0.5, 2.0]):
            s = math.sqrt(mu)
            for mu_B in grid.get("mu_B", [0.2, 0.5, 1.0]):
                for D in grid.get("D", np.linspace(0.3, 2.0, 18)):
                    lhs = _d1(lambda x: G_star(x, s, mu_B).real, D, h)
                    rhs = -2 * _d1(lambda b: (K_coefficient(s, b) * G_star(D, s, b)).real, mu_B, h)
                    worst = max(worst, abs(lhs - rhs))
                    count += 1
        return Residual(kind, worst, count, h)
    if kind == "diffusion_pde":
        h = grid.get("step", 1e-3)
        worst = 0.0
        count = 0
        for mu in grid.get("mu", [1.0, 0.5, 2.0]):
            s = math.sqrt(mu)
            for D in grid.get("D", np.linspace(0.3, 2.0, 12)):
                for U in grid.get("U", np.linspace(0.3, 2.0, 12)):
                    Pf = lambda d, u: diffusion_kernel(d, u, s).real
                    dU = _d1(lambda u: Pf(D, u), U, h)
                    dDD = _d2(lambda d: Pf(d, U), D, h)
                    F = F_kernel(D, s).real
                    val = Pf(D, U)
                    scale = abs(dU) + abs(dDD) + abs(F * val) + 1e-300
                    worst = max(worst, abs(dU - dDD + F * val) / scale)
                    count += 1
        return Residual(kind, worst, count, h)
    if kind == "laplace_HHbar":
        worst = 0.0
        count = 0
        for mu in grid.get("mu", [1.0, 0.5]):
            s = math.sqrt(mu)
            for mu_B in grid.get("mu_B", [0.3, 1.0]):
                for D in grid.get("D", [0.5, 1.0, 2.0]):
                    direct = H_crit(D, s, mu_B).real
                    via = laplace_H_from_Hbar(D, s, mu_B)
                    worst = max(worst, abs(via - direct) / abs(direct))
                    count += 1
        return Residual(kind, worst, count, 0.0)
    raise ScalingError(f"unknown residual check {kind!r}")


def laplace_H_from_Hbar(D: float, s: float, mu_B: float) -> float:
    """H rebuilt from Hbar by the Laplace transform in P (real mu > 0, mu_B >= 0).

    The integrand e^{-mu_B P}(e^{-sP}/(sqrt(pi) P^{3/2}) - Hbar) equals
    -e^{-(mu_B+s)P} (3s - 2f^2) J(P) / (sqrt(pi) P^{3/2}); with P = v^2 the
    P^(-1/2) endpoint behaviour becomes regular.
    """
    f = float(f_kernel(D, s).real)
    c = 3 * s - 2 * f * f

    def integrand(v):
        if v == 0:
            return -2 * c * 1.0 / SQRT_PI  # J(P) ~ P near 0
        P = v * v
        J = float(inner_K_integral(f, P).real)
        return -math.exp(-(mu_B + s) * P) * c * J / (SQRT_PI * P**1.5) * 2 * v

    val, _ = integrate.quad(integrand, 0, np.inf, limit=400, epsabs=1e-13, epsrel=1e-11)
    return math.sqrt(mu_B + s) + 0.5 * val


# ---------------------------------------------------------------------------
# normalization helpers


def integrate_density(fn: Callable[[float], float], upper: float = 8.0) -> float:
    val, _ = integrate.quad(fn, 0, upper, limit=400, epsabs=1e-12, epsrel=1e-10)
    return val


def rho_tilde_normalization(P: float, config: QuadratureConfig = DEFAULT_QUAD) -> float:
    return integrate_density(lambda d: rho_tilde_bound(d, P, config))


def rho_tilde_u_normalization(u: float, P: float, config: QuadratureConfig = DEFAULT_QUAD) -> float:
    width = 2 * math.sqrt(u * (1 - u))
    return integrate_density(lambda d: rho_tilde_u(d, u, P, config), upper=max(8.0, 9 * width))


# ---------------------------------------------------------------------------
# dispatch by name

_DISTRIBUTIONS: dict[str, tuple[Callable, tuple[str, ...]]] = {
    "Phi": (lambda D, config=DEFAULT_QUAD: Phi(D, config), ("D",)),
    "Phi_bar": (Phi_bar, ("D", "P")),
    "Phi_bar_sa": (Phi_bar_sa, ("D", "P")),
    "Phi_hat": (Phi_hat, ("D", "P")),
    "rho_bar_bound": (rho_bar_bound, ("D", "P")),
    "rho_tilde_bound": (rho_tilde_bound, ("delta", "P")),
    "rho_tilde_u": (rho_tilde_u, ("delta", "u", "P")),
    "mean_delta": (mean_delta, ("u", "P")),
    "phi_z": (phi_z, ("d", "z")),
    "phi_tilde_Z": (phi_tilde_Z, ("d", "Z")),
    "rho_bound": (rho_bound_supercritical, ("D", "z")),
    "rayleigh": (rayleigh, ("delta",)),
    "rho_tilde_bound_small_P": (rho_tilde_bound_small_P, ("delta",)),
    "rho_tilde_u_small_P": (rho_tilde_u_small_P, ("delta", "u")),
    "rho_tilde_u_large_P": (rho_tilde_u_large_P, ("delta", "u")),
    "mean_delta_small_P": (mean_delta_small_P, ("u",)),
    "mean_delta_large_P": (mean_delta_large_P, ("u",)),
    "Phi_bar_large_P": (Phi_bar_large_P, ("D", "P")),
    "Phi_hat_large_P": (Phi_hat_large_P, ("D", "P")),
}

_ERROR_ESTIMATES = {"Phi": Phi_with_error, "Phi_bar": Phi_bar_with_error, "Phi_hat": Phi_hat_with_error}


def distribution_kinds() -> list[str]:
    return sorted(_DISTRIBUTIONS)


def distribution_args(kind: str) -> tuple[str, ...]:
    if kind not in _DISTRIBUTIONS:
        raise ScalingError(f"unknown distribution {kind!r}")
    return _DISTRIBUTIONS[kind][1]


def distribution(kind: str, **args) -> float:
    """Evaluate a scaling function or limit law by name, e.g. distribution("Phi_bar", D=0.5, P=1)."""
    fn, names = _DISTRIBUTIONS.get(kind, (None, ()))
    if fn is None:
        raise ScalingError(f"unknown distribution {kind!r}")
    missing = [a for a in names if a not in args]
    if missing:
        raise ScalingError(f"{kind} needs {', '.join(missing)}")
    return float(fn(*(args[a] for a in names)))


def distribution_with_error(kind: str, **args) -> tuple[float, float | None]:
    """Value and quadrature error estimate (None for closed forms)."""
    if kind in _ERROR_ESTIMATES:
        names = _DISTRIBUTIONS[kind][1]
        return _ERROR_ESTIMATES[kind](*(args[a] for a in names))
    return distribution(kind, **args), None
