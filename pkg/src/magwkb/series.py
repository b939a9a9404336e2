"""Truncated formal power series in one and two complex variables.

A ``Series1`` holds coefficients c_0..c_N of a series in one variable
truncated at degree N; a ``Series2`` holds coefficients c_{mn} with
m + n <= N of a series in two variables truncated at total degree N.
Every operation returns a series truncated at the minimum order of its
operands and never fabricates coefficients beyond what the inputs
determine.  Series are immutable values; all operations are pure.

The two-variable type serves double duty: Taylor data in real
coordinates (q1, q2) and its image under the linear substitution
q1 = (z + w)/2, q2 = (z - w)/(2i), where most of the work happens.
"""

from __future__ import annotations

from math import comb

import numpy as np

__all__ = [
    "Series1",
    "Series2",
    "complexify",
    "realify",
    "substitute_curve",
    "shift_variable",
]


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.complex128, order="C", copy=True)
    arr.flags.writeable = False
    return arr


def _degree_mask(order: int) -> np.ndarray:
    idx = np.arange(order + 1)
    return idx[:, None] + idx[None, :] <= order


class Series1:
    """Complex power series in one variable, truncated at a fixed degree."""

    __slots__ = ("_c",)

    def __init__(self, coeffs, order: int | None = None):
        c = np.atleast_1d(np.asarray(coeffs, dtype=np.complex128))
        if c.ndim != 1:
            raise ValueError("Series1 expects a 1-d coefficient array")
        if order is not None:
            if order < 0:
                raise ValueError("truncation order must be >= 0")
            out = np.zeros(order + 1, dtype=np.complex128)
            n = min(len(c), order + 1)
            out[:n] = c[:n]
            c = out
        self._c = _readonly(c)

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, order: int) -> "Series1":
        return cls(np.zeros(order + 1))

    @classmethod
    def one(cls, order: int) -> "Series1":
        c = np.zeros(order + 1)
        c[0] = 1.0
        return cls(c)

    @classmethod
    def monomial(cls, k: int, order: int, coeff=1.0) -> "Series1":
        if k > order:
            raise ValueError("monomial degree exceeds truncation order")
        c = np.zeros(order + 1, dtype=np.complex128)
        c[k] = coeff
        return cls(c)

    # -- basic access -------------------------------------------------
    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def order(self) -> int:
        return len(self._c) - 1

    def coeff(self, k: int) -> complex:
        return complex(self._c[k]) if 0 <= k <= self.order else 0.0

    def truncated(self, order: int) -> "Series1":
        if order > self.order:
            raise ValueError("cannot raise truncation order of inexact data")
        return Series1(self._c[: order + 1])

    def padded(self, order: int) -> "Series1":
        """Extend with zero coefficients; only valid for exact polynomial data."""
        if order < self.order:
            return self.truncated(order)
        return Series1(self._c, order)

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self._c)) <= tol)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self._c)))

    def real_coeffs(self, tol: float = 1e-9) -> np.ndarray:
        scale = max(self.max_abs(), 1.0)
        if np.max(np.abs(self._c.imag)) > tol * scale:
            raise ValueError("series has non-negligible imaginary coefficients")
        return self._c.real.copy()

    def __repr__(self):
        return f"Series1(order={self.order}, coeffs={np.array2string(self._c, precision=6)})"

    # -- arithmetic ---------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Series1):
            return other
        if np.isscalar(other):
            c = np.zeros(self.order + 1, dtype=np.complex128)
            c[0] = other
            return Series1(c)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        n = min(self.order, other.order)
        return Series1(self._c[: n + 1] + other._c[: n + 1])

    __radd__ = __add__

    def __neg__(self):
        return Series1(-self._c)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Series1):
            n = min(self.order, other.order)
            a, b = self._c[: n + 1], other._c[: n + 1]
            return Series1(np.convolve(a, b)[: n + 1])
        if np.isscalar(other):
            return Series1(self._c * other)
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers")
        out = Series1.one(self.order)
        for _ in range(k):
            out = out * self
        return out

    def derivative(self) -> "Series1":
        if self.order == 0:
            return Series1.zero(0)
        k = np.arange(1, self.order + 1)
        return Series1(self._c[1:] * k)

    def integral(self) -> "Series1":
        """Antiderivative with zero constant term; order increases by one."""
        k = np.arange(1, self.order + 2)
        out = np.zeros(self.order + 2, dtype=np.complex128)
        out[1:] = self._c / k
        return Series1(out)

    def reciprocal(self) -> "Series1":
        c0 = self._c[0]
        if c0 == 0:
            raise ZeroDivisionError("reciprocal of a series with zero constant term")
        n = self.order
        r = np.zeros(n + 1, dtype=np.complex128)
        r[0] = 1.0 / c0
        for k in range(1, n + 1):
            r[k] = -np.dot(self._c[1 : k + 1], r[k - 1 :: -1][: k]) / c0
        return Series1(r)

    def __truediv__(self, other):
        if isinstance(other, Series1):
            return self * other.reciprocal()
        if np.isscalar(other):
            return Series1(self._c / other)
        return NotImplemented

    def exp(self) -> "Series1":
        c0 = self._c[0]
        rest = self - c0
        out = Series1.one(self.order)
        term = Series1.one(self.order)
        for k in range(1, self.order + 1):
            term = term * rest * (1.0 / k)
            out = out + term
        return out * np.exp(c0)

    def shift_in(self) -> "Series1":
        """Divide by the variable; requires a vanishing constant term."""
        if abs(self._c[0]) > 1e-12 * max(self.max_abs(), 1.0):
            raise ValueError("cannot divide by the variable: constant term is nonzero")
        if self.order == 0:
            return Series1.zero(0)
        return Series1(self._c[1:])

    def __call__(self, x):
        x = np.asarray(x)
        out = np.full(x.shape, self._c[-1], dtype=np.complex128)
        for c in self._c[-2::-1]:
            out = out * x + c
        return out

    # -- lifting into two variables ------------------------------------
    def lift2(self, axis: int, order: int | None = None) -> "Series2":
        """Embed as a two-variable series along the given axis (0 or 1)."""
        n = self.order if order is None else order
        c = np.zeros((n + 1, n + 1), dtype=np.complex128)
        m = min(self.order, n)
        if axis == 0:
            c[: m + 1, 0] = self._c[: m + 1]
        else:
            c[0, : m + 1] = self._c[: m + 1]
        return Series2(c)


class Series2:
    """Complex power series in two variables, truncated at a total degree.

    Coefficients are stored densely as ``coeffs[m, n]`` for the monomial
    x^m y^n; entries with m + n beyond the truncation order are zero.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs, order: int | None = None):
        c = np.asarray(coeffs, dtype=np.complex128)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("Series2 expects a square coefficient array")
        if order is not None:
            out = np.zeros((order + 1, order + 1), dtype=np.complex128)
            n = min(c.shape[0], order + 1)
            out[:n, :n] = c[:n, :n]
            c = out
        c = np.where(_degree_mask(c.shape[0] - 1), c, 0.0)
        self._c = _readonly(c)

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, order: int) -> "Series2":
        return cls(np.zeros((order + 1, order + 1)))

    @classmethod
    def constant(cls, value, order: int) -> "Series2":
        c = np.zeros((order + 1, order + 1), dtype=np.complex128)
        c[0, 0] = value
        return cls(c)

    @classmethod
    def monomial(cls, m: int, n: int, order: int, coeff=1.0) -> "Series2":
        if m + n > order:
            raise ValueError("monomial degree exceeds truncation order")
        c = np.zeros((order + 1, order + 1), dtype=np.complex128)
        c[m, n] = coeff
        return cls(c)

    @classmethod
    def from_terms(cls, terms: dict, order: int) -> "Series2":
        c = np.zeros((order + 1, order + 1), dtype=np.complex128)
        for (m, n), v in terms.items():
            if m + n > order:
                raise ValueError(f"term ({m},{n}) exceeds truncation order {order}")
            c[m, n] = v
        return cls(c)

    # -- access -------------------------------------------------------
    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def order(self) -> int:
        return self._c.shape[0] - 1

    def coeff(self, m: int, n: int) -> complex:
        if 0 <= m <= self.order and 0 <= n <= self.order and m + n <= self.order:
            return complex(self._c[m, n])
        return 0.0

    def truncated(self, order: int) -> "Series2":
        if order > self.order:
            raise ValueError("cannot raise truncation order of inexact data")
        return Series2(self._c[: order + 1, : order + 1])

    def padded(self, order: int) -> "Series2":
        """Extend with zero coefficients; only valid for exact polynomial data."""
        if order < self.order:
            return self.truncated(order)
        return Series2(self._c, order)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self._c)))

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(self.max_abs() <= tol)

    def slice_axis1(self, n: int) -> Series1:
        """Coefficient of y^n as a series in x, truncated at order - n."""
        if n > self.order:
            return Series1.zero(0)
        return Series1(self._c[: self.order - n + 1, n])

    def slice_axis0(self, m: int) -> Series1:
        if m > self.order:
            return Series1.zero(0)
        return Series1(self._c[m, : self.order - m + 1])

    def is_conjugate_symmetric(self, tol: float = 1e-12) -> bool:
        """Reality test in (z, w) variables: c_{mn} = conj(c_{nm})."""
        scale = max(self.max_abs(), 1.0)
        return bool(np.max(np.abs(self._c - np.conj(self._c.T))) <= tol * scale)

    def __repr__(self):
        return f"Series2(order={self.order})"

    # -- arithmetic ---------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Series2):
            return other
        if np.isscalar(other):
            return Series2.constant(other, self.order)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        n = min(self.order, other.order)
        return Series2(self._c[: n + 1, : n + 1] + other._c[: n + 1, : n + 1])

    __radd__ = __add__

    def __neg__(self):
        return Series2(-self._c)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Series2):
            n = min(self.order, other.order)
            a = self._c[: n + 1, : n + 1]
            b = other._c[: n + 1, : n + 1]
            out = np.zeros((n + 1, n + 1), dtype=np.complex128)
            for m, k in zip(*np.nonzero(a)):
                out[m:, k:] += a[m, k] * b[: n + 1 - m, : n + 1 - k]
            return Series2(out)
        if np.isscalar(other):
            return Series2(self._c * other)
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers")
        out = Series2.constant(1.0, self.order)
        for _ in range(k):
            out = out * self
        return out

    def partial(self, var) -> "Series2":
        """Formal partial derivative; the truncation order drops by one.

        ``var`` is 0 (or "z") for the first variable, 1 (or "w") for the
        second.
        """
        axis = {0: 0, 1: 1, "z": 0, "w": 1, "y": 1, "s": 0, "t": 1}[var]
        n = self.order
        if n == 0:
            return Series2.zero(0)
        k = np.arange(1, n + 1)
        if axis == 0:
            d = self._c[1:, :n] * k[:, None]
        else:
            d = self._c[:n, 1:] * k[None, :]
        return Series2(d)

    def exp(self) -> "Series2":
        c0 = self._c[0, 0]
        rest = self - c0
        out = Series2.constant(1.0, self.order)
        term = Series2.constant(1.0, self.order)
        for k in range(1, self.order + 1):
            term = term * rest * (1.0 / k)
            out = out + term
        return out * np.exp(c0)

    def __call__(self, x, y):
        """Evaluate the truncated polynomial pointwise (Horner in both vars)."""
        x, y = np.broadcast_arrays(
            np.asarray(x, dtype=np.complex128), np.asarray(y, dtype=np.complex128)
        )
        rows = np.zeros((self.order + 1,) + x.shape, dtype=np.complex128)
        for m in range(self.order + 1):
            row = self._c[m]
            acc = np.full(x.shape, row[-1], dtype=np.complex128)
            for c in row[-2::-1]:
                acc = acc * y + c
            rows[m] = acc
        out = rows[-1].copy()
        for m in range(self.order - 1, -1, -1):
            out = out * x + rows[m]
        return out


# ---------------------------------------------------------------------------
# linear substitutions between (q1, q2) and (z, w)
# ---------------------------------------------------------------------------


def _linear_form_powers(a, b, order: int) -> list[np.ndarray]:
    """Coefficient arrays of (a*x + b*y)^m for m = 0..order."""
    powers = []
    for m in range(order + 1):
        c = np.zeros((order + 1, order + 1), dtype=np.complex128)
        for i in range(m + 1):
            c[i, m - i] = comb(m, i) * (a**i) * (b ** (m - i))
        powers.append(c)
    return powers


def _substitute_linear(series: Series2, form1, form2) -> Series2:
    """Compose with var1 -> form1, var2 -> form2 (homogeneous linear forms).

    Homogeneous linear substitution preserves total degree, so the result
    is exact at the same truncation order.
    """
    n = series.order
    p1 = _linear_form_powers(*form1, n)
    p2 = _linear_form_powers(*form2, n)
    c = series.coeffs
    out = np.zeros((n + 1, n + 1), dtype=np.complex128)
    for m in range(n + 1):
        row = np.zeros_like(out)
        any_term = False
        for k in range(n + 1 - m):
            if c[m, k] != 0:
                row += c[m, k] * p2[k]
                any_term = True
        if not any_term:
            continue
        a = p1[m]
        for i, j in zip(*np.nonzero(a)):
            out[i:, j:] += a[i, j] * row[: n + 1 - i, : n + 1 - j]
    return Series2(out)


def complexify(taylor_q: Series2) -> Series2:
    """Map Taylor data in (q1, q2) to the series in (z, w).

    Substitutes q1 = (z + w)/2, q2 = (z - w)/(2i); linear and invertible,
    with ``realify`` as its exact inverse at equal truncation.
    """
    return _substitute_linear(taylor_q, (0.5, 0.5), (-0.5j, 0.5j))


def realify(series_zw: Series2) -> Series2:
    """Inverse of ``complexify``: substitutes z = q1 + i q2, w = q1 - i q2."""
    return _substitute_linear(series_zw, (1.0, 1.0j), (1.0, -1.0j))


# ---------------------------------------------------------------------------
# substitution of a curve for the second variable
# ---------------------------------------------------------------------------


def _check_curve(w_of_z: Series1) -> None:
    if abs(w_of_z.coeff(0)) > 1e-13 * max(w_of_z.max_abs(), 1.0):
        raise ValueError(
            "curve substitution needs a vanishing constant term; "
            f"got w(0) = {w_of_z.coeff(0)}"
        )


def substitute_curve(series: Series2, w_of_z: Series1) -> Series1:
    """Evaluate S(z, w(z)) for a curve w with w(0) = 0.

    The result is truncated at min(order(S), order(w)); with a curve that
    is identically zero the full order of S is kept.
    """
    _check_curve(w_of_z)
    if w_of_z.is_zero():
        return Series1(series.coeffs[:, 0])
    n = min(series.order, w_of_z.order)
    w = w_of_z.truncated(n)
    powers = [Series1.one(n)]
    for _ in range(n):
        powers.append(powers[-1] * w)
    out = np.zeros(n + 1, dtype=np.complex128)
    c = series.coeffs
    for m, k in zip(*np.nonzero(c[: n + 1, : n + 1])):
        out[m:] += c[m, k] * powers[k].coeffs[: n + 1 - m]
    return Series1(out)


def shift_variable(series: Series2, w_of_z: Series1) -> Series2:
    """Rewrite S(z, w) as a series in (z, y) with w = y + w(z).

    Setting y = 0 recovers ``substitute_curve``; shifting by the zero
    curve is the identity.
    """
    _check_curve(w_of_z)
    if w_of_z.is_zero():
        return series
    n = min(series.order, w_of_z.order)
    w = w_of_z.truncated(n)
    powers = [Series1.one(n)]
    for _ in range(n):
        powers.append(powers[-1] * w)
    out = np.zeros((n + 1, n + 1), dtype=np.complex128)
    c = series.coeffs
    for m, k in zip(*np.nonzero(c[: n + 1, : n + 1])):
        # (y + w(z))^k = sum_j C(k,j) y^j w(z)^{k-j}
        for j in range(k + 1):
            out[m:, j] += (comb(k, j) * c[m, k]) * powers[k - j].coeffs[: n + 1 - m]
    return Series2(out)
