"""Discrete generating functions for quadrangulations with a boundary.

Everything here is exact. Series in g alone are built as ``USeries`` and
lifted into (g, z) when they meet the boundary weight z. The self-avoiding
family lives in (g, Z); the loop family reuses its Z index as the loop
weight y.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

from .series import (
    BiSeries,
    SeriesError,
    USeries,
    div_unit,
    fixpoint_solve,
    inverse_unit,
    log_unit,
    substitute_boundary_weight,
)


class Family(str, enum.Enum):
    Wd = "Wd"
    logWd = "logWd"
    Gd = "Gd"
    Td = "Td"
    Td_ss = "Td_ss"
    W0 = "W0"
    tildeWd = "tildeWd"
    tildeWdPrime = "tildeWdPrime"
    tildeGd = "tildeGd"
    Omega_d = "Omega_d"
    Gamma_d = "Gamma_d"


class CountFamily(str, enum.Enum):
    W0 = "W0"
    W = "W"
    tildeW0 = "tildeW0"


@dataclass(frozen=True)
class FamilySpec:
    family: Family
    d: int = 0
    s: int | None = None
    s_prime: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.d < 0:
            raise ValueError("distance d must be non-negative")
        if self.family is Family.Td_ss:
            if self.s is None or self.s_prime is None or self.s < 0 or self.s_prime < 0:
                raise ValueError("Td_ss needs non-negative contour separations s and s'")
            if (self.s + self.s_prime) % 2:
                raise ValueError("Td_ss needs s + s' even")


@dataclass(frozen=True)
class CountQuery:
    family: CountFamily
    n: int
    p: int

    def __post_init__(self):
        object.__setattr__(self, "family", CountFamily(self.family))
        if self.n < 0:
            raise ValueError("area n must be non-negative")
        if self.p < 1:
            raise ValueError("half-perimeter p must be at least 1")


def _fact(k: int) -> int:
    return math.factorial(k) if k >= 0 else 0


def _ratio(num: int, *den: int) -> Fraction:
    """num / prod(den!) with the convention 1/(-k)! = 0."""
    if any(k < 0 for k in den):
        return Fraction(0)
    out = Fraction(num)
    for k in den:
        out /= math.factorial(k)
    return out


def _binom(n: int, k: int) -> int:
    return math.comb(n, k) if 0 <= k <= n else 0


# ---------------------------------------------------------------------------
# univariate building blocks


@lru_cache(maxsize=None)
def R_series(order: int) -> USeries:
    """R = 1 + 3 g R^2."""
    g = USeries.monomial(1, order)
    one = USeries.constant(1, order)
    return fixpoint_solve(lambda F: one + 3 * g * F * F, one)


@lru_cache(maxsize=None)
def x_series(order: int) -> USeries:
    """x = g R^2 (1 + x + x^2)."""
    gR2 = R_series(order) * R_series(order)
    gR2 = gR2.shift(1)
    one = USeries.constant(1, order)
    return fixpoint_solve(lambda F: gR2 * (one + F + F * F), USeries.zero(order))


def _bracket(x: USeries, k: int) -> USeries:
    """[k] = (1 - x^k)/(1 - x) = 1 + x + ... + x^(k-1)."""
    out = USeries.zero(x.order)
    term = x.one_like()
    for _ in range(k):
        out = out + term
        term = term * x
    return out


@lru_cache(maxsize=None)
def f_series(d: int, order: int) -> USeries:
    """f_d = x [d] / [d+2]."""
    if d < 0:
        raise ValueError("f_d needs d >= 0")
    x = x_series(order)
    if d == 0:
        return USeries.zero(order)
    return div_unit(x * _bracket(x, d), _bracket(x, d + 2))


@lru_cache(maxsize=None)
def R_ell_series(ell: int, order: int) -> USeries:
    """R_l = R [l][l+3] / ([l+1][l+2]), generating function of well-labelled trees with root label l."""
    if ell <= 0:
        return USeries.zero(order)
    x = x_series(order)
    num = _bracket(x, ell) * _bracket(x, ell + 3)
    den = _bracket(x, ell + 1) * _bracket(x, ell + 2)
    return R_series(order) * div_unit(num, den)


@lru_cache(maxsize=None)
def f1_over_f(d: int, order: int) -> USeries:
    """f_1 / f_d for d >= 1, as (1 - x^(d+2)) / ((1 + x + x^2)(1 - x^d)) = [d+2] / ((1+x+x^2)[d])."""
    x = x_series(order)
    return div_unit(_bracket(x, d + 2), (x.one_like() + x + x * x) * _bracket(x, d))


# ---------------------------------------------------------------------------
# the kernel


@dataclass(frozen=True)
class KernelSeries:
    """Solved series R, x, W, w = W - 1, lambda and tables f_d, R_l, W_d.

    ``R``, ``x``, ``f`` and ``R_ell`` are series in g alone, stored lifted
    to (g, z). Tables are indexed 0..d_max+3 so that identities reaching
    two steps past d_max stay inside them.
    """

    order_n: int
    order_p: int
    d_max: int
    R: BiSeries
    x: BiSeries
    W: BiSeries
    w: BiSeries
    lam: BiSeries
    f: tuple[BiSeries, ...]
    R_ell: tuple[BiSeries, ...]
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def lambda_(self) -> BiSeries:
        return self.lam

    def _check_d(self, d: int, reach: int = 0) -> None:
        if d + reach > self.d_max + 2:
            raise SeriesError(f"d={d} exceeds the precomputed table (d_max={self.d_max})")

    def const(self, c) -> BiSeries:
        return BiSeries.constant(c, self.order_n, self.order_p)

    @cached_property
    def g(self) -> BiSeries:
        return BiSeries.monomial(1, 0, self.order_n, self.order_p)

    @cached_property
    def z(self) -> BiSeries:
        return BiSeries.monomial(0, 1, self.order_n, self.order_p)

    def R_l(self, ell: int) -> BiSeries:
        """R_l, read from the table or built on demand beyond it."""
        if ell < len(self.R_ell):
            return self.R_ell[ell]
        return self._memo(("R_l", ell), lambda: R_ell_series(ell, self.order_n).lift(self.order_p))

    def _memo(self, key, thunk):
        if key not in self._cache:
            self._cache[key] = thunk()
        return self._cache[key]

    def W_d(self, d: int) -> BiSeries:
        """W (1 - w f_{d+1}) / (1 - w f_d); W_{-1} = 1."""
        if d < 0:
            return self.const(1)
        self._check_d(d)

        def build():
            one = self.const(1)
            return self.W * div_unit(one - self.w * self.f[d + 1], one - self.w * self.f[d])

        return self._memo(("W", d), build)

    def log_W_d(self, d: int) -> BiSeries:
        if d < 0:
            return BiSeries.zero(self.order_n, self.order_p)
        return self._memo(("logW", d), lambda: log_unit(self.W_d(d)))

    @cached_property
    def log_W(self) -> BiSeries:
        return log_unit(self.W)

    def G_d(self, d: int) -> BiSeries:
        return self.log_W_d(d) - self.log_W_d(d - 1)

    def T_d(self, d: int) -> BiSeries:
        """Two marked boundary edges at distance d; T_0 = W_0^2 - W_0."""
        self._check_d(d)

        def build():
            if d == 0:
                W0 = self.W_d(0)
                return W0 * W0 - W0
            w = self.w
            f1 = self.f[1]
            ratio = f1_over_f(d + 1, self.order_n).lift(self.order_p)
            inner = ratio - 2 * f1 * w + f1 * self.f[d + 1] * w * w
            return self.W * self.W * (w ** d) * inner

        return self._memo(("T", d), build)

    # self-avoiding boundary, in (g, Z) -------------------------------------

    @cached_property
    def w_tilde(self) -> BiSeries:
        """Solves Z = (w/R)(1 - f_1 w)^2 for w = tilde W - 1."""
        Z = self.z
        ZR = Z * self.R
        one = self.const(1)
        f1 = self.f[1]

        def step(wt):
            u = one - f1 * wt
            return ZR * inverse_unit(u * u)

        return fixpoint_solve(step, BiSeries.zero(self.order_n, self.order_p))

    @cached_property
    def W_tilde_0(self) -> BiSeries:
        wt = self.w_tilde
        return (self.const(1) + wt) * (self.const(1) - self.f[1] * wt)

    def _tilde_core(self, d: int) -> BiSeries:
        """(1 - w f_{d+1}) / ((1 - f_1 w)(1 - w f_d))."""
        self._check_d(d)

        def build():
            one = self.const(1)
            wt = self.w_tilde
            return div_unit(one - wt * self.f[d + 1], (one - self.f[1] * wt) * (one - wt * self.f[d]))

        return self._memo(("tcore", d), build)

    def W_tilde_d(self, d: int) -> BiSeries:
        return self._tilde_core(d) + self.W_tilde_0 - 1

    def W_tilde_prime_d(self, d: int) -> BiSeries:
        return self._memo(("tprime", d), lambda: log_unit(self._tilde_core(d)) + self.W_tilde_0 - 1)

    def G_tilde_d(self, d: int) -> BiSeries:
        if d == 0:
            return self.W_tilde_0 - 1
        return self.W_tilde_prime_d(d) - self.W_tilde_prime_d(d - 1)

    # self-avoiding loop, in (g, y) -----------------------------------------

    def _drop_p0(self, s: BiSeries) -> BiSeries:
        return s - s.row(0).lift(self.order_p)

    def Omega_d(self, d: int) -> BiSeries:
        """sum_{p>=1} y^p tilde W_0|_{Z^p} tilde W'_d|_{Z^p}; rows are multiplied pointwise in p."""
        def build():
            W0t = self._drop_p0(self.W_tilde_0)
            return W0t.hadamard_p(self._drop_p0(self.W_tilde_prime_d(d)))

        return self._memo(("Omega", d), build)

    def Gamma_d(self, d: int) -> BiSeries:
        if d == 0:
            return self.Omega_d(0)
        return self.Omega_d(d) - self.Omega_d(d - 1)


def build_kernel(order_n: int, order_p: int, d_max: int | None = None) -> KernelSeries:
    """Solve R, x, W and fill the f_d and R_l tables up to d_max + 3."""
    if order_n < 1 or order_p < 1:
        raise ValueError("kernel orders must be at least 1")
    if d_max is None:
        d_max = order_n + 2
    R_g = R_series(order_n)
    x_g = x_series(order_n)
    R = R_g.lift(order_p)
    x = x_g.lift(order_p)
    one = BiSeries.constant(1, order_n, order_p)
    z = BiSeries.monomial(0, 1, order_n, order_p)
    zR = z * R
    W = fixpoint_solve(lambda F: one + zR * F * F, one)
    w = W - one
    lam = div_unit(x * (w - x), one - x * w)
    top = d_max + 4
    f = tuple(f_series(d, order_n).lift(order_p) for d in range(top + 1))
    R_ell = tuple(R_ell_series(ell, order_n).lift(order_p) for ell in range(top + 1))
    return KernelSeries(order_n, order_p, d_max, R, x, W, w, lam, f, R_ell)


def series_family(spec: FamilySpec, kernel: KernelSeries) -> BiSeries:
    """The requested generating function, truncated at the kernel's orders.

    For the self-avoiding families the second variable is Z; for Omega_d
    and Gamma_d it is the loop weight y.
    """
    fam, d = spec.family, spec.d
    if fam is Family.Wd:
        return kernel.W_d(d)
    if fam is Family.W0:
        return kernel.W_d(0)
    if fam is Family.logWd:
        return kernel.log_W_d(d)
    if fam is Family.Gd:
        return kernel.G_d(d)
    if fam is Family.Td:
        return kernel.T_d(d)
    if fam is Family.Td_ss:
        p = (spec.s + spec.s_prime) // 2
        if p > kernel.order_p:
            return BiSeries.zero(kernel.order_n, kernel.order_p)
        row = Td_ss_series(d, spec.s, spec.s_prime, kernel.order_n)
        return (row.lift(kernel.order_p)).mul_z(p)
    if fam is Family.tildeWd:
        return kernel.W_tilde_d(d)
    if fam is Family.tildeWdPrime:
        return kernel.W_tilde_prime_d(d)
    if fam is Family.tildeGd:
        return kernel.G_tilde_d(d)
    if fam is Family.Omega_d:
        return kernel.Omega_d(d)
    if fam is Family.Gamma_d:
        return kernel.Gamma_d(d)
    raise ValueError(f"unknown family {fam}")


# ---------------------------------------------------------------------------
# contour separations


def C_sd(s: int, d: int) -> int:
    """C(s, d) = binom(s, (s-d)/2) - binom(s, (s-d)/2 - 1); zero off parity."""
    if (s - d) % 2 or d > s:
        return 0
    k = (s - d) // 2
    return _binom(s, k) - _binom(s, k - 1)


def Td_ss_series(d: int, s: int, s_prime: int, order: int) -> USeries:
    """z^p coefficient (2p = s + s') of two boundary roots s steps apart at distance d.

    The prefactor is R^p: this is what makes the sum over s reproduce
    T_d|_{z^p}.
    """
    if (s + s_prime) % 2:
        raise ValueError("s + s' must be even")
    if (s - d) % 2 or (s_prime - d) % 2:
        return USeries.zero(order)
    p = (s + s_prime) // 2
    R = R_series(order)
    f1 = f_series(1, order)
    fd1 = f_series(d + 1, order)
    a, b = C_sd(s, d), C_sd(s_prime, d)
    a2, b2 = C_sd(s, d + 2), C_sd(s_prime, d + 2)
    inner = f1_over_f(d + 1, order) * (a * b) + f1 * (-(a * b2) - (a2 * b)) + f1 * fd1 * (a2 * b2)
    return (R ** p) * inner


# ---------------------------------------------------------------------------
# fixed-p extractions


def coeff_zp(spec: FamilySpec, p: int, order: int) -> USeries:
    """Closed-form z^p (or Z^p) coefficient as a series in g up to g^order."""
    fam, d = spec.family, spec.d
    if p < 0:
        raise ValueError("p must be non-negative")
    R = R_series(order)
    if fam in (Family.Wd, Family.W0):
        if fam is Family.W0:
            d = 0
        if p == 0:
            return R.one_like()
        fd, fd1 = f_series(d, order), f_series(d + 1, order)
        total = USeries.zero(order)
        fpow = R.one_like()
        for k in range(1, p + 1):
            c = _ratio(_fact(2 * p) * (2 * k + 1), p - k, p + k + 1)
            total = total + fpow * c
            fpow = fpow * fd
        lead = _ratio(_fact(2 * p), p, p + 1)
        return (R ** p) * (R.one_like() * lead - (fd1 - fd) * total)
    if fam is Family.logWd:
        if p == 0:
            return USeries.zero(order)
        fd, fd1 = f_series(d, order), f_series(d + 1, order)
        total = USeries.zero(order)
        pd, pd1 = fd, fd1
        for k in range(1, p + 1):
            c = _ratio(_fact(2 * p - 1), p - k, p + k)
            total = total + (pd1 - pd) * c
            pd, pd1 = pd * fd, pd1 * fd1
        lead = _ratio(_fact(2 * p - 1), p, p)
        return (R ** p) * (R.one_like() * lead - 2 * total)
    if fam is Family.Td:
        if d == 0:
            rows = [coeff_zp(FamilySpec(Family.W0), i, order) for i in range(p + 1)]
            sq = USeries.zero(order)
            for i in range(p + 1):
                sq = sq + rows[i] * rows[p - i]
            return sq - rows[p]
        f1 = f_series(1, order)
        fd1 = f_series(d + 1, order)
        c1 = 2 * (d + 1) * _ratio(_fact(2 * p + 1), p - d, p + d + 2)
        c2 = 2 * 2 * (d + 2) * _ratio(_fact(2 * p + 1), p - d - 1, p + d + 3)
        c3 = 2 * (d + 3) * _ratio(_fact(2 * p + 1), p - d - 2, p + d + 4)
        inner = f1_over_f(d + 1, order) * c1 - f1 * c2 + f1 * fd1 * c3
        return (R ** p) * inner
    if fam is Family.tildeWd:
        base = _tilde_W0_zp(p, order)
        if p == 0:
            return base
        fd, fd1 = f_series(d, order), f_series(d + 1, order)
        total = USeries.zero(order)
        fpow = R.one_like()
        for k in range(1, p + 1):
            c = _ratio(_fact(3 * p - k) * (2 * k + 1), p - k, 2 * p + 1)
            # (g R^3)^p / (g R^2)^k = g^(p-k) R^(3p-2k)
            term = (R ** (3 * p - 2 * k)).shift(p - k) * fpow * c
            total = total + term
            fpow = fpow * fd
        lead = (R ** (3 * p)).shift(p) * _ratio(_fact(3 * p), p, 2 * p + 1)
        return lead - (fd1 - fd) * total + base
    if fam is Family.tildeWdPrime:
        if p == 0:
            return USeries.zero(order)
        base = _tilde_W0_zp(p, order)
        fd, fd1 = f_series(d, order), f_series(d + 1, order)
        total = USeries.zero(order)
        pd, pd1 = fd, fd1
        for k in range(1, p + 1):
            c = _ratio(_fact(3 * p - k - 1), p - k, 2 * p)
            total = total + (R ** (3 * p - 2 * k)).shift(p - k) * (pd1 - pd) * c
            pd, pd1 = pd * fd, pd1 * fd1
        lead = (R ** (3 * p)).shift(p) * _ratio(_fact(3 * p - 1), p, 2 * p)
        return lead - 2 * total + base
    raise ValueError(f"coeff_zp does not cover family {fam.value}")


def _tilde_W0_zp(p: int, order: int) -> USeries:
    """(g R^3)^p (3p-3)!/(p!(2p-1)!) (p/(g R^2) + 2 - 3p); 1 at p = 0."""
    R = R_series(order)
    if p == 0:
        return R.one_like()
    c = _ratio(_fact(3 * p - 3), p, 2 * p - 1)
    return (R ** (3 * p - 2)).shift(p - 1) * (c * p) + (R ** (3 * p)).shift(p) * (c * (2 - 3 * p))


# ---------------------------------------------------------------------------
# closed counts


@lru_cache(maxsize=4096)
def closed_count(q: CountQuery) -> int:
    """Closed-form number of objects at area n and half-perimeter p.

    W0: rooted quadrangulations with a boundary; W: the same with a marked
    vertex and a marked closest boundary edge; tildeW0: rooted
    quadrangulations with a self-avoiding boundary (zero when p > n + 1).

    The factorial ratios are rewritten as binomials times a small exact
    division so that large n stays cheap.
    """
    n, p = q.n, q.p
    if q.family is CountFamily.W0:
        # 3^n (2p)!/(p!(p-1)!) (2n+p-1)!/(n!(n+p+1)!)
        num = 3**n * p * math.comb(2 * p, p) * math.comb(2 * n + p - 1, n)
        den = (n + p) * (n + p + 1)
    elif q.family is CountFamily.W:
        # 3^n (2p)!/((p-1)!(p+1)!) (2n+p-1)!/(n!(n+p)!)
        num = 3**n * math.comb(2 * p, p + 1) * math.comb(2 * n + p - 1, n)
        den = n + p
    else:
        if p > n + 1:
            return 0
        # 3^(n-p) (3p)!/(p!(2p-1)!) (2n+p-1)!/((n-p+1)!(n+2p)!)
        num = 2 * p * math.comb(3 * p, p) * math.comb(2 * n + p + 1, n - p + 1)
        den = (2 * n + p) * (2 * n + p + 1)
        if n >= p:
            num *= 3 ** (n - p)
        else:
            den *= 3 ** (p - n)
    value, rem = divmod(num, den)
    if rem:
        raise ArithmeticError(f"closed count for {q} is not an integer")
    return value


def sum_identity_sides(p: int) -> tuple[Fraction, Fraction]:
    """Both sides of sum_k 3^k (3p-k)!/((p-k)!(2p+1)!) (2k+1) = 3 (3p)!/((p-1)!(2p+1)!)."""
    lhs = sum(
        (Fraction(3**k) * _ratio(_fact(3 * p - k), p - k, 2 * p + 1) * (2 * k + 1) for k in range(1, p + 1)),
        Fraction(0),
    )
    rhs = 3 * _ratio(_fact(3 * p), p - 1, 2 * p + 1)
    return lhs, rhs


# ---------------------------------------------------------------------------
# exact distance laws


class Statistic(str, enum.Enum):
    bulk_boundary = "bulk_boundary"
    boundary_boundary = "boundary_boundary"


@dataclass(frozen=True)
class FixedNP:
    n: int
    p: int


@dataclass(frozen=True)
class FixedZ:
    """Area n fixed, weight z^p on the half-perimeter, summed for p <= p_max."""

    n: int
    z: Fraction
    p_max: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "z", Fraction(self.z))
        if not 0 < self.z < Fraction(1, 4):
            raise ValueError("fixed-z ensemble needs 0 < z < 1/4")

    def cutoff(self, rel_tol: Fraction = Fraction(1, 10**25)) -> int:
        if self.p_max is not None:
            return self.p_max
        return fixed_z_cutoff(self.n, self.z, rel_tol)


def fixed_z_cutoff(n: int, z: Fraction, rel_tol: Fraction = Fraction(1, 10**25)) -> int:
    """Smallest p_max whose neglected mass is below rel_tol times the kept mass.

    Terms are z^p W|_{g^n z^p}, tracked relative to the p = 1 term through the
    exact ratio z (2p+2)(2p+1)(2n+p) / (p (p+2) (n+p+1)). The ratio decreases
    with p, so once it drops below 1 the tail is bounded by a geometric series.
    """
    z = Fraction(z)
    total = Fraction(0)
    term = Fraction(1)
    p = 1
    while True:
        total += term
        r = z * Fraction((2 * p + 2) * (2 * p + 1) * (2 * n + p), p * (p + 2) * (n + p + 1))
        nxt = term * r
        if r < 1 and nxt / (1 - r) <= rel_tol * total:
            return p
        term = nxt
        p += 1


@lru_cache(maxsize=64)
def _rows_at(family: Family, d: int, n: int, p: int) -> Fraction:
    """g^n coefficient of the closed-form z^p extraction."""
    return coeff_zp(FamilySpec(family, d), p, n)[n]


def pmf_exact(ensemble, statistic: Statistic | str, d: int, measure: str = "pointed",
              kernel: KernelSeries | None = None) -> Fraction:
    """Exact probability that the distance equals d.

    ``measure='pointed'`` weights each pointed map by its inverse symmetry
    factor (the log W_d ratio); ``measure='rooted'`` counts maps with a
    marked closest boundary edge uniformly (the W_d ratio). For the
    boundary-boundary statistic the origin is a marked boundary corner and
    the second point a uniform boundary corner, and ``measure`` is ignored.

    When ``kernel`` is given the coefficients are read from its series,
    otherwise from the closed-form z^p extractions.
    """
    statistic = Statistic(statistic)
    if d < 0:
        return Fraction(0)
    if measure not in ("pointed", "rooted"):
        raise ValueError("measure must be 'pointed' or 'rooted'")
    if isinstance(ensemble, FixedNP):
        weights = {ensemble.p: Fraction(1)}
        n = ensemble.n
    elif isinstance(ensemble, FixedZ):
        n = ensemble.n
        weights = {p: ensemble.z**p for p in range(1, ensemble.cutoff() + 1)}
    else:
        raise TypeError("ensemble must be FixedNP or FixedZ")
    num = Fraction(0)
    den = Fraction(0)
    for p, wgt in weights.items():
        a, b = _pmf_terms(n, p, d, statistic, measure, kernel)
        num += wgt * a
        den += wgt * b
    if den == 0:
        raise ValueError(f"empty ensemble at n={n}")
    return num / den


def _pmf_terms(n, p, d, statistic, measure, kernel):
    if p < 1:
        raise ValueError("half-perimeter p must be at least 1")
    if kernel is not None and (n > kernel.order_n or p > kernel.order_p):
        raise SeriesError(f"kernel orders ({kernel.order_n}, {kernel.order_p}) do not cover (n, p) = ({n}, {p})")
    if statistic is Statistic.boundary_boundary:
        if d > p:
            return Fraction(0), _boundary_norm(n, p, kernel)
        if kernel is not None:
            a = kernel.T_d(d)[n, p]
        else:
            a = _rows_at(Family.Td, d, n, p)
        return a, _boundary_norm(n, p, kernel)
    if measure == "pointed":
        if kernel is not None:
            hi = kernel.log_W_d(d)[n, p] if d <= kernel.d_max else kernel.log_W[n, p]
            lo = kernel.log_W_d(d - 1)[n, p] if d - 1 <= kernel.d_max else kernel.log_W[n, p]
            return hi - lo, kernel.log_W[n, p]
        a = _rows_at(Family.logWd, d, n, p) - (_rows_at(Family.logWd, d - 1, n, p) if d > 0 else 0)
        total = Fraction(_fact(2 * p - 1), _fact(p) ** 2) * closed_R_power(n, p)
        return a, total
    if kernel is not None:
        hi = kernel.W_d(d)[n, p] if d <= kernel.d_max else kernel.W[n, p]
        lo = kernel.W_d(d - 1)[n, p] if d - 1 <= kernel.d_max else kernel.W[n, p]
        return hi - lo, kernel.W[n, p]
    a = _rows_at(Family.Wd, d, n, p) - (_rows_at(Family.Wd, d - 1, n, p) if d > 0 else 0)
    return a, Fraction(closed_count(CountQuery(CountFamily.W, n, p)))


@lru_cache(maxsize=4096)
def closed_R_power(n: int, p: int) -> int:
    """g^n coefficient of R^p: 3^n p/(2n+p) binom(2n+p, n)."""
    if p == 0:
        return int(n == 0)
    v = Fraction(3**n * p * math.comb(2 * n + p, n), 2 * n + p)
    return v.numerator


def _boundary_norm(n, p, kernel):
    if kernel is not None:
        return 2 * p * kernel.W_d(0)[n, p]
    return Fraction(2 * p * closed_count(CountQuery(CountFamily.W0, n, p)))


def pmf_table(ensemble, statistic, measure: str = "pointed", kernel: KernelSeries | None = None) -> list[Fraction]:
    """pmf over d = 0, 1, ... up to the largest reachable distance; sums to 1 exactly."""
    statistic = Statistic(statistic)
    if isinstance(ensemble, FixedNP):
        n, top_p = ensemble.n, ensemble.p
    else:
        n, top_p = ensemble.n, ensemble.cutoff()
    if statistic is Statistic.boundary_boundary:
        dmax = top_p
    else:
        # a vertex is at most n + p steps from the boundary
        dmax = n + 1
    return [pmf_exact(ensemble, statistic, d, measure, kernel) for d in range(dmax + 1)]


# ---------------------------------------------------------------------------
# identity suite


@dataclass(frozen=True)
class IdentityResult:
    name: str
    passed: bool
    detail: str = ""


def continued_fraction(kernel: KernelSeries, d: int, depth: int) -> BiSeries:
    """1/(1 - z R_{d+1}/(1 - z R_{d+2}/(... 1 - z R_{d+depth}))) truncated at depth levels."""
    return continued_fraction_convergents(kernel, d, depth)[-1]


def continued_fraction_convergents(kernel: KernelSeries, d: int, depth: int) -> list[BiSeries]:
    """Truncations at depth 1..depth via the three-term recurrence A_k/B_k."""
    one = kernel.const(1)
    z = kernel.z
    # the depth-k truncation is A_k / B_k with A_k = A_{k-1} - z R_{d+k} A_{k-2}
    A_prev, A = one, one
    B_prev, B = one, one - z * kernel.R_l(d + 1)
    out = [div_unit(A, B)]
    for k in range(2, depth + 1):
        a = z * kernel.R_l(d + k)
        A_prev, A = A, A - a * A_prev
        B_prev, B = B, B - a * B_prev
        out.append(div_unit(A, B))
    return out


def verify_identities(order_n: int, order_p: int, d_max: int,
                      kernel: KernelSeries | None = None) -> list[IdentityResult]:
    """Run every exact identity and return one result per check."""
    K = kernel if kernel is not None else build_kernel(order_n, order_p, d_max)
    if K.order_n < order_n or K.order_p < order_p or K.d_max < d_max:
        raise SeriesError("kernel does not cover the requested orders")
    out: list[IdentityResult] = []
    one, z, g = K.const(1), K.z, K.g

    def record(name, ok, detail=""):
        out.append(IdentityResult(name, bool(ok), detail))

    bad = [d for d in range(d_max + 1) if K.W_d(d) != one + z * K.R_ell[d + 1] * K.W_d(d) * K.W_d(d + 1)]
    record("recursion W_d = 1 + z R_{d+1} W_d W_{d+1}", not bad, f"failing d: {bad}" if bad else f"d = 0..{d_max}")

    bad = [
        d for d in range(d_max + 1)
        if log_unit(K.W_d(d)) != -log_unit(one - z * K.R_ell[d + 1] * K.W_d(d + 1))
    ]
    record("log W_d = sum_k (z R_{d+1} W_{d+1})^k / k", not bad, f"failing d: {bad}" if bad else f"d = 0..{d_max}")

    rhs = K.W - g * z * K.R ** 3 * K.W ** 3
    bad = []
    for d in range(d_max + 1):
        lhs = K.W_d(d) - g * z * K.R_ell[d] * K.R_ell[d + 1] * K.R_ell[d + 2] * K.W_d(d) * K.W_d(d + 1) * K.W_d(d + 2)
        if lhs != rhs:
            bad.append(d)
    record("conserved quantity W_d - g z R_d R_{d+1} R_{d+2} W_d W_{d+1} W_{d+2} = W - g z R^3 W^3",
           not bad, f"failing d: {bad}" if bad else f"d = 0..{d_max}")

    bad = []
    for d in range(d_max + 1):
        target = K.W_d(d)
        convergents = continued_fraction_convergents(K, d, order_p)
        for depth, cf in enumerate(convergents, start=1):
            # depth levels capture every Dyck path of height <= depth, hence all z^p with p <= depth
            if any(cf[n, p] != target[n, p] for n in range(order_n + 1) for p in range(depth + 1)):
                bad.append((d, depth))
                break
        if convergents[-1] != target:
            bad.append((d, "full"))
    record("continued fraction truncations converge to W_d", not bad,
           f"failing (d, depth): {bad}" if bad else f"d = 0..{d_max}, depth 1..{order_p}")

    bad = []
    W0 = K.W_d(0)
    prod_W = one
    prod_R = one
    for d in range(0, d_max + 1):
        prod_W = prod_W * K.W_d(d)
        if d >= 1:
            prod_R = prod_R * K.R_ell[d]
        if d >= 1 and K.T_d(d) != prod_W * prod_W * z ** d * prod_R:
            bad.append(d)
    record("T_d = (W_0...W_d)^2 z^d R_1...R_d", not bad, f"failing d: {bad}" if bad else f"d = 1..{d_max}")

    Zsub = z * W0 * W0
    sub0 = substitute_boundary_weight(K.W_tilde_0, Zsub)
    record("tilde W_0(g, z W_0^2) = W_0", sub0 == W0)

    bad = [
        d for d in range(d_max + 1)
        if K.W_d(d) - W0 != W0 * (substitute_boundary_weight(K.W_tilde_d(d), Zsub) - W0)
    ]
    record("W_d - W_0 = W_0 (tilde W_d - tilde W_0) at Z = z W_0^2", not bad,
           f"failing d: {bad}" if bad else f"d = 0..{d_max}")

    bad = [p for p in range(1, order_p + 1) if (lambda s: s[0] != s[1])(sum_identity_sides(p))]
    record("sum_k 3^k (3p-k)! (2k+1)/((p-k)!(2p+1)!) = 3 (3p)!/((p-1)!(2p+1)!)", not bad,
           f"failing p: {bad}" if bad else f"p = 1..{order_p}")

    bad = []
    for n in range(order_n + 1):
        for p in range(1, order_p + 1):
            if W0[n, p] * Fraction(2 * p, p + 1) != K.W[n, p] * Fraction(2 * p, n + p + 1):
                bad.append((n, p))
    record("closest-edge ratio (W/W_0) 2p/(n+p+1) = 2p/(p+1)", not bad,
           f"failing (n, p): {bad[:5]}" if bad else "")
    return out
