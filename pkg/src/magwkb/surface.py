"""WKB cascade for a magnetic ground-state well on a conformally flat patch.

Inputs are Taylor data at the well bottom: the field B in normal form
b0 + alpha*q1^2 + gamma*q2^2 + O(|q|^3) and the conformal exponent eta.
The pipeline constructs, order by order in the formal ring:

* a potential-generating function Psi with 4 d_z d_w Psi = (e^{2 eta} B)~,
* a curve w(z) along which the field series is constant,
* a phase correction f(z) making the transport velocity vanish on the curve,
* amplitude series A^(0)..A^(J) and energy coefficients mu_0..mu_{J+1}
  obtained by solving a hierarchy of first-order formal ODEs.

All series live in the complexified coordinates z, w with
q1 = (z + w)/2, q2 = (z - w)/(2i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .series import (
    Series1,
    Series2,
    complexify,
    realify,
    shift_variable,
    substitute_curve,
)

__all__ = [
    "SurfaceField",
    "SurfaceWkbExpansion",
    "poisson_normal_form",
    "solve_curve_w",
    "solve_phase_f",
    "formal_ode_solve",
    "transport_cascade",
    "hessian_invariants",
    "mu1_formula",
    "mu1_from_invariants",
    "transport_residual",
    "eikonal_residual",
]


class NormalFormError(ValueError):
    """Field Taylor data is not in the required diagonal normal form."""


@dataclass(frozen=True)
class SurfaceField:
    """Taylor data of a field with a nondegenerate positive minimum.

    ``b_taylor`` and ``eta_taylor`` are real Taylor data in (q1, q2).
    The quadratic part of ``b_taylor`` must already be diagonal,
    alpha*q1^2 + gamma*q2^2 with 0 < alpha <= gamma (use
    ``normalize_quadratic`` from the CLI helpers to rotate general data);
    the constant-field case alpha = gamma = 0 is accepted only when the
    whole datum is constant.

    Constructors build polynomial data, so extending the truncation order
    pads with exact zeros.
    """

    b_taylor: Series2
    eta_taylor: Series2
    b0: float
    alpha: float
    gamma: float

    def __post_init__(self):
        b = self.b_taylor
        scale = max(b.max_abs(), 1.0)
        tol = 1e-12 * scale
        if not (self.b0 > 0):
            raise NormalFormError("field minimum b0 must be positive")
        if abs(b.coeff(0, 0) - self.b0) > tol:
            raise NormalFormError("constant term of the field data must equal b0")
        if abs(b.coeff(1, 0)) > tol or abs(b.coeff(0, 1)) > tol:
            raise NormalFormError("linear terms must vanish at the minimum")
        if abs(b.coeff(1, 1)) > tol:
            raise NormalFormError(
                "quadratic part has an off-diagonal term; rotate the data "
                "first (normalize_quadratic)"
            )
        if abs(b.coeff(2, 0) - self.alpha) > tol or abs(b.coeff(0, 2) - self.gamma) > tol:
            raise NormalFormError("quadratic coefficients must match (alpha, gamma)")
        if self.alpha == 0.0 and self.gamma == 0.0:
            if not self.is_constant:
                raise NormalFormError(
                    "alpha = gamma = 0 is only allowed for a constant field"
                )
        elif not (0 < self.alpha <= self.gamma):
            raise NormalFormError("need 0 < alpha <= gamma (Hessian normal form)")
        for name, s in (("b_taylor", b), ("eta_taylor", self.eta_taylor)):
            if np.max(np.abs(s.coeffs.imag)) > tol:
                raise NormalFormError(f"{name} must be real Taylor data")
            if not complexify(s).is_conjugate_symmetric():
                raise NormalFormError(f"{name} fails the reality test")

    # -- constructors ---------------------------------------------------
    @classmethod
    def from_taylor(cls, b_terms, eta_terms=None, order: int = 8) -> "SurfaceField":
        b = b_terms if isinstance(b_terms, Series2) else Series2.from_terms(b_terms, order)
        if eta_terms is None:
            eta = Series2.zero(b.order)
        elif isinstance(eta_terms, Series2):
            eta = eta_terms
        else:
            eta = Series2.from_terms(eta_terms, b.order)
        return cls(
            b_taylor=b,
            eta_taylor=eta,
            b0=float(b.coeff(0, 0).real),
            alpha=float(b.coeff(2, 0).real),
            gamma=float(b.coeff(0, 2).real),
        )

    @classmethod
    def quadratic(cls, b0, alpha, gamma, eta_terms=None, order: int = 8) -> "SurfaceField":
        return cls.from_taylor(
            {(0, 0): b0, (2, 0): alpha, (0, 2): gamma}, eta_terms, order=order
        )

    @classmethod
    def constant(cls, b0, order: int = 8) -> "SurfaceField":
        return cls(
            b_taylor=Series2.constant(b0, order),
            eta_taylor=Series2.zero(order),
            b0=float(b0),
            alpha=0.0,
            gamma=0.0,
        )

    @classmethod
    def from_radial_poly(cls, beta_coeffs, order: int = 8) -> "SurfaceField":
        """Field beta(|q|^2 / 2) for a polynomial profile beta."""
        rho = Series2.from_terms({(2, 0): 0.5, (0, 2): 0.5}, order)
        b = Series2.zero(order)
        for k, c in enumerate(beta_coeffs):
            b = b + float(c) * rho**k
        return cls.from_taylor(b)

    # -- helpers ----------------------------------------------------------
    @property
    def is_constant(self) -> bool:
        c = self.b_taylor.coeffs.copy()
        c[0, 0] = 0.0
        return bool(np.max(np.abs(c)) <= 1e-14 * max(abs(self.b0), 1.0))

    @property
    def eta0(self) -> float:
        return float(self.eta_taylor.coeff(0, 0).real)

    def data_at(self, order: int):
        """Field and conformal data padded to the requested order.

        Constructors only build polynomial data, for which zero padding is
        exact; callers supplying genuinely truncated smooth data must
        provide it at the working order themselves.
        """
        return self.b_taylor.padded(order), self.eta_taylor.padded(order)


@dataclass(frozen=True)
class SurfaceWkbExpansion:
    """Output of the cascade for one eigenvalue branch ``level``.

    ``amplitudes[j]`` is A^(j)(z, w); ``mu`` has J + 2 entries, the
    energy coefficients mu_0 .. mu_{J+1}.
    """

    level: int
    psi: Series2
    w_curve: Series1
    f_phase: Series1
    s_phase: Series2
    amplitudes: tuple
    mu: tuple
    field: SurfaceField

    @property
    def order_J(self) -> int:
        return len(self.amplitudes) - 1


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------


def poisson_normal_form(field: SurfaceField, order: int | None = None) -> Series2:
    """Solve 4 d_z d_w Psi = (e^{2 eta} B)~ with harmonic-kernel normalization.

    The result has truncation order ``order + 2``: interior coefficients
    are fixed by the right-hand side through total degree ``order``, the
    constant/linear parts and all pure z^m, w^n monomials are set to zero,
    so the quadratic part is exactly (e^{2 eta(0)} b0 / 4) z w and the
    realified series is real.
    """
    n = field.b_taylor.order if order is None else order
    if n < 2:
        raise ValueError("need truncation order >= 2")
    bq, etaq = field.data_at(n)
    rhs = complexify(((2.0 * etaq).exp()) * bq)
    out = np.zeros((n + 3, n + 3), dtype=np.complex128)
    c = rhs.coeffs
    for m, k in zip(*np.nonzero(c)):
        out[m + 1, k + 1] = c[m, k] / (4.0 * (m + 1) * (k + 1))
    return Series2(out)


def solve_curve_w(field: SurfaceField, order: int | None = None) -> Series1:
    """Curve w(z) with w(0) = 0 along which the field series stays at b0.

    The linear coefficient is the contracting root
    (sqrt(gamma) - sqrt(alpha)) / (sqrt(gamma) + sqrt(alpha)); every
    higher coefficient solves a linear equation whose prefactor is
    sqrt(alpha * gamma), so positivity of alpha and gamma is required.
    """
    if field.is_constant:
        n = (field.b_taylor.order if order is None else order) - 1
        return Series1.zero(max(n, 0))
    if field.alpha <= 0 or field.gamma <= 0:
        raise ValueError("need alpha > 0 and gamma > 0 (prefactor degenerates)")
    n = field.b_taylor.order if order is None else order
    if n < 1:
        raise ValueError("need truncation order >= 1")
    bq, _ = field.data_at(n)
    bz = complexify(bq)
    sa, sg = math.sqrt(field.alpha), math.sqrt(field.gamma)
    w = np.zeros(n, dtype=np.complex128)
    if n >= 2:
        w[1] = (sg - sa) / (sg + sa)
    prefactor = sa * sg
    for p in range(2, n):
        resid = substitute_curve(bz, Series1(w))
        w[p] = -resid.coeff(p + 1) / prefactor
    return Series1(w)


def solve_phase_f(psi: Series2, w_curve: Series1) -> Series1:
    """Phase correction f with f'(z) = -2 d_z Psi(z, w(z)) and f(0) = 0."""
    comp = substitute_curve(psi.partial("z"), w_curve)
    f = (comp * (-2.0)).integral()
    return f


def formal_ode_solve(
    V: Series2,
    F: Series2,
    G: Series2 | None,
    level: int,
    seed: Series1,
    atol: float = 1e-8,
):
    """Solve (V(s,t) d_t + F(s,t)) u = G in the formal ring, row by row.

    Writing V = sum v_m(s) t^m and similarly F, G, the hypotheses are
    v_0 = 0, v_1 a nonzero real constant and f_0 a real constant.  With
    G = None the homogeneous equation is solved in the set of series
    whose first ``level`` t-coefficients vanish, which requires
    f_0 + level * v_1 = 0; ``seed`` fixes the free coefficient
    u_level(s).  Otherwise the inhomogeneous recursion

        u_m = [g_m - sum_{j<m} (j v_{m-j+1} + f_{m-j}) u_j] / ((m - level) v_1)

    is returned together with the solvability defect

        g_level - sum_{j<level} (j v_{level-j+1} + f_{level-j}) u_j,

    which the caller must drive to zero for a true solution to exist.
    """
    n = min(V.order, F.order) if G is None else min(V.order, F.order, G.order)
    vscale = max(V.max_abs(), F.max_abs(), 1.0)

    v0 = V.slice_axis1(0)
    if v0.max_abs() > atol * vscale:
        raise ValueError("hypothesis v_0(s) = 0 fails")
    v1c = V.coeff(0, 1)
    v1row = V.slice_axis1(1)
    if (v1row - v1c).max_abs() > atol * vscale or abs(v1c.imag) > atol * vscale:
        raise ValueError("hypothesis v_1(s) = const real fails")
    v1 = v1c.real
    if v1 == 0.0:
        raise ValueError("v_1 must be nonzero")
    f0c = F.coeff(0, 0)
    f0row = F.slice_axis1(0)
    if (f0row - f0c).max_abs() > atol * vscale or abs(f0c.imag) > atol * vscale:
        raise ValueError("hypothesis f_0(s) = const real fails")
    f0 = f0c.real

    if G is None and abs(f0 + level * v1) > atol * vscale:
        raise ValueError(
            f"homogeneous equation has no solution at level {level}: "
            f"f_0 + level*v_1 = {f0 + level * v1:.3e}"
        )

    vm = [V.slice_axis1(m) for m in range(n + 2)]
    fm = [F.slice_axis1(m) for m in range(n + 1)]
    if G is None:
        gm = [Series1.zero(max(n - m, 0)) for m in range(n + 1)]
    else:
        gm = [G.slice_axis1(m) for m in range(n + 1)]

    u: list[Series1] = []
    defect = None
    for m in range(n + 1):
        acc = Series1.zero(max(n - m, 0))
        for j in range(m):
            term = fm[m - j]
            if j > 0:
                term = term + float(j) * vm[m - j + 1]
            acc = acc + term * u[j]
        if m == level:
            defect = gm[m] - acc
            # the seed is the caller's exact normalization choice; padding
            # it with zeros loses nothing
            k = max(n - m, 0)
            u.append(seed.padded(k) if seed.order < k else seed.truncated(k))
        else:
            u.append((gm[m] - acc) * (1.0 / ((m - level) * v1)))

    if defect is None:  # level beyond the truncation order
        defect = Series1.zero(0)
    out = np.zeros((n + 1, n + 1), dtype=np.complex128)
    for m, um in enumerate(u):
        k = min(um.order, n - m)
        out[: k + 1, m] = um.coeffs[: k + 1]
    return Series2(out), defect


# ---------------------------------------------------------------------------
# the cascade
# ---------------------------------------------------------------------------


def _landau_expansion(field: SurfaceField, level: int, J: int, n: int) -> SurfaceWkbExpansion:
    # constant field: every transport right-hand side vanishes identically
    psi = Series2.monomial(1, 1, n + 2, field.b0 / 4.0)
    amp0 = Series2.monomial(level, 0, n)
    amplitudes = (amp0,) + tuple(Series2.zero(n) for _ in range(J))
    return SurfaceWkbExpansion(
        level=level,
        psi=psi,
        w_curve=Series1.zero(n - 1),
        f_phase=Series1.zero(n),
        s_phase=psi,
        amplitudes=amplitudes,
        mu=(field.b0,) + (0.0,) * (J + 1),
        field=field,
    )


def _real_scalar(value: complex, what: str, tol: float = 1e-7) -> float:
    if abs(value.imag) > tol * max(abs(value), 1.0):
        raise ArithmeticError(f"{what} has a non-negligible imaginary part: {value}")
    return float(value.real)


def transport_cascade(
    field: SurfaceField, level: int, J: int, order: int | None = None
) -> SurfaceWkbExpansion:
    """Run the full cascade for eigenvalue branch ``level`` through order J.

    Returns amplitudes A^(0)..A^(J) and energy coefficients
    mu_0..mu_{J+1}.  The first amplitude is normalized so that, written
    in powers of (w - w(z)), its leading series in z starts with z^level
    with unit coefficient; homogeneous corrections of the higher
    amplitudes carry no z^level term and particular solutions have no
    (w - w(z))^0 term.
    """
    if J < 0 or level < 0:
        raise ValueError("need J >= 0 and level >= 0")
    n_work = max(order if order is not None else 0, 2 * (J + 2) + 2 * level + 4)
    if field.is_constant:
        return _landau_expansion(field, level, J, n_work)

    b0 = field.b0
    bq, etaq = field.data_at(n_work)
    b_zw = complexify(bq)
    e_zw = complexify(((-2.0) * etaq).exp())  # conformal factor e^{-2 eta}

    psi = poisson_normal_form(field, n_work)
    w = solve_curve_w(field, n_work)
    f = solve_phase_f(psi, w)

    fprime = f.derivative().lift2(axis=0, order=n_work - 1)
    v_zw = (fprime + 2.0 * psi.partial("z")) * e_zw * 4.0

    Vy = shift_variable(v_zw, w)
    Fy = shift_variable(b_zw, w) - b0
    n_y = min(Vy.order, Fy.order)

    hom_y, _ = formal_ode_solve(Vy, Fy, None, 0, Series1.one(n_y))
    hom_w = shift_variable(hom_y, -1.0 * w)

    def apply_rhs_op(x: Series2, mu1: float) -> Series2:
        return mu1 * x + 4.0 * (e_zw * x.partial("z").partial("w"))

    # first-order operator in z induced on the leading amplitude series:
    # u -> slice_0 of the shifted (4 E d_z d_w)(u * hom); extract its
    # coefficients by applying it to 1 and to z.
    def d_op(u: Series1) -> Series1:
        t = u.lift2(axis=0, order=n_y) * hom_w
        return substitute_curve(4.0 * (e_zw * t.partial("z").partial("w")), w)

    f_part = d_op(Series1.one(n_y))
    z_mono = Series1.monomial(1, n_y)
    v_z = d_op(z_mono) - z_mono * f_part
    if abs(v_z.coeff(0)) > 1e-8 * max(v_z.max_abs(), 1.0):
        raise ArithmeticError("z-direction transport operator has nonzero v_0")
    v1_z = _real_scalar(v_z.coeff(1), "transport slope v_1")

    def z_lift(s: Series1) -> Series2:
        return s.lift2(axis=1, order=v_z.order)

    def z_solve(g: Series1 | None, mu1: float, seed_value: float):
        fz = f_part + mu1
        sol2, defect = formal_ode_solve(
            z_lift(v_z),
            z_lift(fz),
            None if g is None else z_lift(g),
            level,
            Series1([seed_value]),
        )
        return sol2.slice_axis0(0), defect.coeff(0)

    mu = [b0]
    # rank 1: solvability of the first corrected equation fixes mu_1 and
    # the leading series of A^(0)
    mu1 = -_real_scalar(f_part.coeff(0) + level * v_z.coeff(1), "mu_1 balance")
    mu.append(mu1)
    a00, _ = z_solve(None, mu1, 1.0)
    amplitudes = [a00.lift2(axis=0, order=hom_w.order) * hom_w]
    particulars = [Series2.zero(n_y)]  # alpha^(0) = 0

    for r in range(1, J + 2):
        if r >= 2:
            known = apply_rhs_op(particulars[r - 1], mu1)
            for j in range(2, r):
                known = known + mu[j] * amplitudes[r - j]
            k_z = substitute_curve(known, w)
            _, d0 = z_solve(-1.0 * k_z, mu1, 0.0)
            _, d1 = z_solve(-1.0 * a00, mu1, 0.0)
            mu_r = _real_scalar(-d0 / d1, f"mu_{r}")
            mu.append(mu_r)
            g_z = -1.0 * k_z - mu_r * a00
            c_r, defect = z_solve(g_z, mu1, 0.0)
            if abs(defect) > 1e-7 * max(abs(mu_r), 1.0):
                raise ArithmeticError(f"rank-{r} solvability defect not closed: {defect}")
            amplitudes.append(
                particulars[r - 1] + c_r.lift2(axis=0, order=hom_w.order) * hom_w
            )
        if r <= J:
            rhs = apply_rhs_op(amplitudes[r - 1], mu1)
            for j in range(2, r + 1):
                rhs = rhs + mu[j] * amplitudes[r - j]
            g_y = shift_variable(rhs, w)
            part_y, _ = formal_ode_solve(Vy, Fy, g_y, 0, Series1.zero(0))
            particulars.append(shift_variable(part_y, -1.0 * w))

    s_phase = psi + f.lift2(axis=0, order=psi.order)
    return SurfaceWkbExpansion(
        level=level,
        psi=psi,
        w_curve=w,
        f_phase=f,
        s_phase=s_phase,
        amplitudes=tuple(amplitudes[: J + 1]),
        mu=tuple(mu[: J + 2]),
        field=field,
    )


# ---------------------------------------------------------------------------
# invariants of the well Hessian
# ---------------------------------------------------------------------------


def hessian_invariants(alpha: float, gamma: float, eta0: float = 0.0):
    """(det H, Tr H^{1/2}) of the intrinsic half-Hessian at the minimum."""
    det_h = math.exp(-4.0 * eta0) * alpha * gamma
    tr_h_sqrt = math.exp(-eta0) * (math.sqrt(alpha) + math.sqrt(gamma))
    return det_h, tr_h_sqrt


def mu1_formula(alpha: float, gamma: float, eta0: float, b0: float, level: int) -> float:
    """Second energy coefficient straight from the normal-form data."""
    sa, sg = math.sqrt(alpha), math.sqrt(gamma)
    return math.exp(-2.0 * eta0) * (2 * level * sa * sg / b0 + (sa + sg) ** 2 / (2 * b0))


def mu1_from_invariants(det_h: float, tr_h_sqrt: float, b0: float, level: int) -> float:
    """Same coefficient written with the Hessian invariants."""
    return 2 * level * math.sqrt(det_h) / b0 + tr_h_sqrt**2 / (2 * b0)


# ---------------------------------------------------------------------------
# verification helpers
# ---------------------------------------------------------------------------


def transport_residual(exp: SurfaceWkbExpansion, j: int) -> Series2:
    """Residual of the rank-j transport equation for computed amplitudes.

    Rank 0 is the homogeneous equation; rank j >= 1 couples A^(j) to the
    lower amplitudes.  Exact solutions leave coefficients at roundoff
    through the retained truncation order.
    """
    field = exp.field
    n = exp.psi.order - 2
    bq, etaq = field.data_at(n)
    b_zw = complexify(bq)
    e_zw = complexify(((-2.0) * etaq).exp())
    fprime = exp.f_phase.derivative().lift2(axis=0, order=n - 1)
    v_zw = (fprime + 2.0 * exp.psi.partial("z")) * e_zw * 4.0

    lhs = v_zw * exp.amplitudes[j].partial("w") + (b_zw - field.b0) * exp.amplitudes[j]
    if j == 0:
        return lhs
    rhs = exp.mu[1] * exp.amplitudes[j - 1] + 4.0 * (
        e_zw * exp.amplitudes[j - 1].partial("z").partial("w")
    )
    for i in range(2, j + 1):
        rhs = rhs + exp.mu[i] * exp.amplitudes[j - i]
    return lhs - rhs


def eikonal_residual(exp: SurfaceWkbExpansion) -> Series2:
    """Residual of the factorized eikonal identity in real coordinates.

    With the divergence-free potential derived from Psi, the complex
    phase S makes (-A1 + i d1 S)^2 + (-A2 + i d2 S)^2 vanish as a series.
    """
    s_q = realify(exp.s_phase)
    psi_q = realify(exp.psi)
    a1 = -1.0 * psi_q.partial(1)
    a2 = psi_q.partial(0)
    x = -1.0 * a1 + 1j * s_q.partial(0)
    y = -1.0 * a2 + 1j * s_q.partial(1)
    return x * x + y * y
