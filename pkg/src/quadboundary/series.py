"""Truncated formal power series with exact rational coefficients.

Coefficients are held as a table of Python integers over one shared
denominator, which keeps Cauchy products in integer arithmetic. Every
coefficient read back out is a ``fractions.Fraction`` in lowest terms.

``BiSeries`` is bivariate in (g, z): index ``[n, p]`` is the coefficient of
g^n z^p. ``USeries`` is univariate in g. Both truncate every result to the
smallest order among the operands.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

Number = int | Fraction


class SeriesError(ValueError):
    pass


def _zeros(shape: tuple[int, ...]) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    out.fill(0)
    return out


def _lcm(a: int, b: int) -> int:
    return a // math.gcd(a, b) * b


def _convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Truncated Cauchy product of two integer tables of equal shape."""
    out = _zeros(a.shape)
    if a.ndim == 1:
        (n,) = a.shape
        for i in range(n):
            c = a[i]
            if c:
                out[i:] += c * b[: n - i]
        return out
    n, p = a.shape
    for i in range(n):
        row = a[i]
        for j in range(p):
            c = row[j]
            if c:
                out[i:, j:] += c * b[: n - i, : p - j]
    return out


class _Series:
    """Shared machinery for ``BiSeries`` and ``USeries``."""

    __slots__ = ("_num", "_den")
    ndim = 0

    def __init__(self, num: np.ndarray, den: int = 1, _reduced: bool = False):
        if den <= 0:
            raise SeriesError("denominator must be positive")
        self._num = num
        self._den = den
        if not _reduced:
            self._reduce()
        self._num.setflags(write=False)

    def _reduce(self) -> None:
        if self._den == 1:
            return
        g = math.gcd(self._den, *self._num.flat)
        if g > 1:
            self._num = self._num // g
            self._den //= g

    # construction helpers -------------------------------------------------

    def _like(self, num: np.ndarray, den: int, reduced: bool = False):
        return type(self)(num, den, reduced)

    @property
    def shape(self) -> tuple[int, ...]:
        return self._num.shape

    def _common(self, other: "_Series") -> tuple[np.ndarray, np.ndarray, int]:
        if type(other) is not type(self):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        shape = tuple(min(a, b) for a, b in zip(self.shape, other.shape))
        sl = tuple(slice(0, s) for s in shape)
        a, b = self._num[sl], other._num[sl]
        if self._den == other._den:
            return a, b, self._den
        den = _lcm(self._den, other._den)
        return a * (den // self._den), b * (den // other._den), den

    def _coerce(self, other) -> "_Series":
        if isinstance(other, _Series):
            return other
        if isinstance(other, (int, Fraction)):
            return self.constant(other, *[s - 1 for s in self.shape])
        return NotImplemented

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b, den = self._common(other)
        return self._like(a + b, den)

    __radd__ = __add__

    def __neg__(self):
        return self._like(-self._num, self._den, True)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b, den = self._common(other)
        return self._like(a - b, den)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            v = Fraction(other)
            return self._like(self._num * v.numerator, self._den * v.denominator)
        if not isinstance(other, _Series):
            return NotImplemented
        if type(other) is not type(self):
            raise TypeError(f"cannot multiply {type(self).__name__} by {type(other).__name__}")
        shape = tuple(min(a, b) for a, b in zip(self.shape, other.shape))
        sl = tuple(slice(0, s) for s in shape)
        num = _convolve(self._num[sl], other._num[sl])
        return self._like(num, self._den * other._den)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("series divided by zero")
            return self * (1 / Fraction(other))
        return div_unit(self, other)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise SeriesError("only non-negative integer powers are supported")
        result = self.one_like()
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = self._coerce(other)
        if type(other) is not type(self):
            return NotImplemented
        a, b, _ = self._common(other)
        return bool(np.all(a == b))

    def __hash__(self):
        return hash((self.shape, self._den, tuple(self._num.flat)))

    # access ---------------------------------------------------------------

    def __getitem__(self, idx) -> Fraction:
        if not isinstance(idx, tuple):
            idx = (idx,)
        for i, s in zip(idx, self.shape):
            if i < 0 or i >= s:
                raise IndexError(f"index {idx} outside truncation window {self.shape}")
        return Fraction(int(self._num[idx]), self._den)

    def constant_term(self) -> Fraction:
        return self[(0,) * self.ndim]

    def table(self) -> np.ndarray:
        """Coefficient table as an object array of Fractions."""
        out = np.empty(self.shape, dtype=object)
        for idx in np.ndindex(*self.shape):
            out[idx] = Fraction(int(self._num[idx]), self._den)
        return out

    def is_integral(self) -> bool:
        return self._den == 1

    def is_nonnegative(self) -> bool:
        return all(c >= 0 for c in self._num.flat)

    def map_coefficients(self, fn: Callable[[tuple[int, ...], Fraction], Number]):
        return type(self)._from_dict(
            {idx: fn(idx, self[idx]) for idx in np.ndindex(*self.shape)}, self.shape
        )

    @classmethod
    def _from_dict(cls, d: dict, shape):
        num = _zeros(shape)
        den = 1
        for v in d.values():
            den = _lcm(den, Fraction(v).denominator)
        for idx, v in d.items():
            v = Fraction(v)
            num[idx] = v.numerator * (den // v.denominator)
        return cls(num, den)

    def to_json(self) -> str:
        """JSON nested arrays of ``[numerator, denominator]`` decimal strings."""
        def enc(x):
            if isinstance(x, np.ndarray):
                return [enc(y) for y in x]
            return [str(x.numerator), str(x.denominator)]
        return json.dumps(enc(self.table()))


class USeries(_Series):
    """Univariate truncated series in g, coefficients for g^0..g^order."""

    ndim = 1

    @property
    def order(self) -> int:
        return self.shape[0] - 1

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[Number], order: int | None = None) -> "USeries":
        if order is None:
            order = len(coeffs) - 1
        d = {(i,): c for i, c in enumerate(coeffs) if i <= order}
        return cls._from_dict(d, (order + 1,))

    @classmethod
    def constant(cls, c: Number, order: int) -> "USeries":
        return cls.from_coeffs([c], order)

    @classmethod
    def zero(cls, order: int) -> "USeries":
        return cls(_zeros((order + 1,)), 1, True)

    @classmethod
    def monomial(cls, k: int, order: int, c: Number = 1) -> "USeries":
        d = {(k,): c} if k <= order else {}
        return cls._from_dict(d, (order + 1,))

    def one_like(self) -> "USeries":
        return USeries.constant(1, self.order)

    def coeffs(self) -> list[Fraction]:
        return [self[i] for i in range(self.order + 1)]

    def truncate(self, order: int) -> "USeries":
        return USeries(self._num[: order + 1].copy(), self._den)

    def shift(self, k: int) -> "USeries":
        """Multiply by g^k (k > 0) or divide by g^-k when that is exact."""
        num = _zeros(self.shape)
        if k >= 0:
            num[k:] = self._num[: self.shape[0] - k]
            return USeries(num, self._den, True)
        k = -k
        if any(self._num[:k]):
            raise SeriesError("series is not divisible by the requested power of g")
        # dividing loses k orders of precision at the top
        return USeries(self._num[k:].copy(), self._den)

    def lift(self, order_p: int) -> "BiSeries":
        """View as a bivariate series constant in z."""
        num = _zeros((self.shape[0], order_p + 1))
        num[:, 0] = self._num
        return BiSeries(num, self._den, True)

    def __repr__(self):
        terms = [f"{c}*g^{i}" for i, c in enumerate(self.coeffs()) if c]
        return f"USeries({' + '.join(terms) or '0'}; O(g^{self.order + 1}))"


class BiSeries(_Series):
    """Bivariate truncated series in (g, z); ``s[n, p]`` is the g^n z^p coefficient."""

    ndim = 2

    @property
    def order_n(self) -> int:
        return self.shape[0] - 1

    @property
    def order_p(self) -> int:
        return self.shape[1] - 1

    @classmethod
    def from_dict(cls, coeffs: dict[tuple[int, int], Number], order_n: int, order_p: int) -> "BiSeries":
        d = {k: v for k, v in coeffs.items() if k[0] <= order_n and k[1] <= order_p}
        return cls._from_dict(d, (order_n + 1, order_p + 1))

    @classmethod
    def from_table(cls, table: Iterable[Iterable[Number]]) -> "BiSeries":
        rows = [list(r) for r in table]
        d = {(i, j): c for i, r in enumerate(rows) for j, c in enumerate(r)}
        return cls._from_dict(d, (len(rows), len(rows[0])))

    @classmethod
    def constant(cls, c: Number, order_n: int, order_p: int) -> "BiSeries":
        return cls.from_dict({(0, 0): c}, order_n, order_p)

    @classmethod
    def zero(cls, order_n: int, order_p: int) -> "BiSeries":
        return cls(_zeros((order_n + 1, order_p + 1)), 1, True)

    @classmethod
    def monomial(cls, n: int, p: int, order_n: int, order_p: int, c: Number = 1) -> "BiSeries":
        return cls.from_dict({(n, p): c}, order_n, order_p)

    def one_like(self) -> "BiSeries":
        return BiSeries.constant(1, self.order_n, self.order_p)

    def truncate(self, order_n: int, order_p: int) -> "BiSeries":
        return BiSeries(self._num[: order_n + 1, : order_p + 1].copy(), self._den)

    def row(self, p: int) -> USeries:
        """The z^p coefficient as a series in g."""
        return USeries(self._num[:, p].copy(), self._den)

    def column(self, n: int) -> list[Fraction]:
        return [self[n, p] for p in range(self.order_p + 1)]

    def mul_z(self, k: int = 1) -> "BiSeries":
        num = _zeros(self.shape)
        if k < self.shape[1]:
            num[:, k:] = self._num[:, : self.shape[1] - k]
        return BiSeries(num, self._den, True)

    def mul_g(self, k: int = 1) -> "BiSeries":
        num = _zeros(self.shape)
        if k < self.shape[0]:
            num[k:, :] = self._num[: self.shape[0] - k, :]
        return BiSeries(num, self._den, True)

    def scale_rows(self, u: USeries) -> "BiSeries":
        """Multiply by a series in g alone (keeps this series' z order)."""
        return self * u.lift(self.order_p)

    def z_derivative_euler(self) -> "BiSeries":
        """z d/dz: multiplies the z^p coefficient by p."""
        weights = np.arange(self.shape[1], dtype=object)
        return BiSeries(self._num * weights[None, :], self._den)

    def hadamard_p(self, other: "BiSeries") -> "BiSeries":
        """Pointwise product in p, Cauchy product in g, row by row."""
        order_p = min(self.order_p, other.order_p)
        order_n = min(self.order_n, other.order_n)
        rows = [(self.row(p) * other.row(p)).truncate(order_n) for p in range(order_p + 1)]
        return BiSeries.from_rows(rows)

    @classmethod
    def from_rows(cls, rows: Sequence[USeries]) -> "BiSeries":
        order_n = min(r.order for r in rows)
        den = 1
        for r in rows:
            den = _lcm(den, r._den)
        num = _zeros((order_n + 1, len(rows)))
        for p, r in enumerate(rows):
            num[:, p] = r._num[: order_n + 1] * (den // r._den)
        return cls(num, den)

    def __repr__(self):
        terms = [
            f"{self[n, p]}*g^{n}z^{p}"
            for n in range(self.shape[0])
            for p in range(self.shape[1])
            if self._num[n, p]
        ]
        body = " + ".join(terms[:12]) + (" + ..." if len(terms) > 12 else "")
        return f"BiSeries({body or '0'}; orders ({self.order_n}, {self.order_p}))"


# ---------------------------------------------------------------------------
# operations


def add(a: _Series, b: _Series) -> _Series:
    return a + b


def mul(a: _Series, b: _Series) -> _Series:
    return a * b


def _total_degree(shape: tuple[int, ...]) -> np.ndarray:
    grids = np.indices(shape)
    return grids.sum(axis=0).astype(object)


def fixpoint_solve(fn: Callable[[_Series], _Series], seed: _Series) -> _Series:
    """Iterate ``F <- fn(F)`` from ``seed`` until the truncated series is stable.

    ``fn`` must raise the valuation of perturbations (a formal contraction);
    then each step fixes at least one more total degree, so stabilisation
    happens within ``sum(orders) + 1`` steps. Anything slower raises.
    """
    cap = sum(s - 1 for s in seed.shape) + 1
    cur = seed
    for _ in range(cap + 1):
        nxt = fn(cur)
        if nxt.shape != cur.shape:
            cur = cur.truncate(*[s - 1 for s in nxt.shape])
        if nxt == cur:
            return nxt
        cur = nxt
    raise SeriesError(f"fixed point did not stabilise within {cap} iterations; map is not a formal contraction")


def inverse_unit(b: _Series) -> _Series:
    """1/b by Newton iteration, doubling the number of correct total degrees."""
    c0 = b.constant_term()
    if c0 == 0:
        raise SeriesError("cannot invert a series with zero constant term")
    inv = b.one_like() * (1 / c0)
    two = b.one_like() * 2
    cap = sum(s - 1 for s in b.shape) + 1
    correct = 1
    while True:
        nxt = inv * (two - b * inv)
        correct *= 2
        if correct > cap:
            return nxt
        inv = nxt


def div_unit(a: _Series, b: _Series) -> _Series:
    """a / b for b with nonzero constant term."""
    if b.constant_term() == 0:
        raise SeriesError("division by a series with zero constant term")
    return a * inverse_unit(b)


def _euler(a: _Series) -> _Series:
    return type(a)(a._num * _total_degree(a.shape), a._den)


def _integrate_euler(a: _Series) -> _Series:
    """Inverse of the total-degree Euler operator on series with zero constant term."""
    deg = _total_degree(a.shape)
    deg.flat[0] = 1
    vals = {idx: Fraction(int(a._num[idx]), a._den * int(deg[idx])) for idx in np.ndindex(*a.shape)}
    vals[(0,) * a.ndim] = 0
    return type(a)._from_dict(vals, a.shape)


def log_unit(a: _Series) -> _Series:
    """Formal logarithm of a series with constant term 1.

    Uses the total-degree derivation theta: theta(log a) = theta(a) / a.
    """
    if a.constant_term() != 1:
        raise SeriesError("log_unit needs constant term 1")
    return _integrate_euler(div_unit(_euler(a), a))


def exp_series(a: _Series) -> _Series:
    """Formal exponential of a series with zero constant term."""
    if a.constant_term() != 0:
        raise SeriesError("exp_series needs zero constant term")
    ta = _euler(a)
    one = a.one_like()
    return fixpoint_solve(lambda e: one + _integrate_euler(e * ta), one)


def substitute_boundary_weight(S: BiSeries, Zsub: BiSeries) -> BiSeries:
    """Replace Z^p by Zsub^p in S(g, Z).

    Zsub must vanish at z = 0, so Z^p only reaches z^p and beyond; the
    result is exact up to z-order ``min(S.order_p, Zsub.order_p)``.
    """
    if any(Zsub._num[:, 0]):
        raise SeriesError("substituted boundary weight must vanish at z = 0")
    order_n = min(S.order_n, Zsub.order_n)
    order_p = min(S.order_p, Zsub.order_p)
    Zt = Zsub.truncate(order_n, order_p)
    result = S.row(S.order_p).truncate(order_n).lift(order_p)
    for p in range(S.order_p - 1, -1, -1):
        result = S.row(p).truncate(order_n).lift(order_p) + Zt * result
    return result
