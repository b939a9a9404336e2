"""Numerical verification of the spectral claims at desk scale.

Each check sweeps a ladder of semiclassical parameters, measures a scalar
per point (residual norm, eigenvalue gap, weighted-norm ratio), fits a
log-log slope where a power law is claimed, and reports a pass/fail
verdict against the target exponent.  Grid resolutions are chosen per h
so that the finite-difference floor stays below the measured quantity; a
refinement probe discards points where it does not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np
from scipy.special import roots_genlaguerre

from .operators import (
    BoxTooSmallError,
    OperatorMatrix,
    boundary_mass,
    build_2d_operator,
    build_radial_operator,
    eigen_solve,
)
from .radial import RadialField, default_cutoff, eikonal_phi, transport_chain

__all__ = [
    "VerificationReport",
    "fit_loglog",
    "residual_scaling",
    "eigenvalue_two_term",
    "agmon_check",
    "weighted_approximation",
    "fiber_identification",
    "angular_content",
    "laguerre_suite",
]


@dataclass
class VerificationReport:
    """Observed scalars over an h-ladder with an optional slope verdict."""

    test: str
    h_values: list
    observed: list
    slope: float | None = None
    slope_ci: float | None = None
    target: float | None = None
    tolerance: float | None = None
    passed: bool = False
    details: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "test": self.test,
            "h_values": list(self.h_values),
            "observed": list(self.observed),
            "slope": self.slope,
            "slope_ci": self.slope_ci,
            "target": self.target,
            "tolerance": self.tolerance,
            "passed": bool(self.passed),
            "details": self.details,
        }


def fit_loglog(h_values, observed):
    """Least-squares slope on log-log axes; ci is the fit residual spread.

    Only defined when every observed value is positive.
    """
    h = np.asarray(h_values, dtype=float)
    y = np.asarray(observed, dtype=float)
    if np.any(y <= 0) or len(h) < 2:
        return None, None
    lx, ly = np.log(h), np.log(y)
    coef = np.polyfit(lx, ly, 1)
    resid = ly - np.polyval(coef, lx)
    ci = float(np.sqrt(np.mean(resid**2)))
    return float(coef[0]), ci


def _phi_inverse(field: RadialField, value: float, upper: float = 64.0) -> float:
    phi = eikonal_phi(field, order=32)
    lo, hi = 1e-12, upper
    if phi(hi) < value:
        return upper
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if phi(mid) < value:
            lo = mid
        else:
            hi = mid
    return hi


def _log_weighted_norm(values, log_factor, weights, floor: float = 1e-14) -> float:
    """log of the weighted L^2 norm of e^{log_factor} * values.

    Entries below ``floor`` relative to the largest magnitude are
    discarded: they sit at or under the eigensolver's roundoff floor, and
    the exponential weight would amplify that noise catastrophically.
    The discarded true tail decays like e^{-2(1-eps) phi/h} and
    contributes O(floor^{2(1-eps)/eps-ish}), negligible for eps away
    from 1.
    """
    mag = np.abs(values)
    keep = mag > floor * np.max(mag)
    with np.errstate(divide="ignore"):
        terms = 2.0 * (np.log(mag[keep]) + log_factor[keep]) + np.log(weights[keep])
    finite = terms[np.isfinite(terms)]
    if len(finite) == 0:
        return -np.inf
    top = np.max(finite)
    return 0.5 * (top + np.log(np.sum(np.exp(finite - top))))


# ---------------------------------------------------------------------------
# residual scaling
# ---------------------------------------------------------------------------


def _wkb_windows(field: RadialField, cutoff_K: float | None):
    k = default_cutoff(field, 6.0) if cutoff_K is None else float(cutoff_K)
    return k, k + 1.25, k + 1.5  # cutoff, operator window, expansion window


def _residual_n(h: float, J: int, rho_max: float, n_cap: int) -> int:
    d_target = 0.6 * h ** ((J + 4) / 2.0)
    n = int(np.ceil(rho_max / d_target))
    n = max(n, int(np.ceil(8.0 * rho_max / np.sqrt(h))) + 1)
    return min(n, n_cap)


def _residual_once(field, exp, h, m, J, n, rho_max) -> float:
    op = build_radial_operator(field, h, m, n, rho_max)
    psi = exp.ansatz_profile(op.grid, h, J)
    lam = exp.quasi_eigenvalue(h, J)
    r = op.apply_fun(psi) - lam * psi
    return op.norm_fun(r) / op.norm_fun(psi)


def residual_scaling(
    field: RadialField,
    m: int,
    J: int,
    h_list,
    n_grid: int | None = None,
    cutoff_K: float | None = None,
    n_cap: int = 3_200_000,
    gate: float = 0.10,
    slope_tolerance: float = 0.3,
) -> VerificationReport:
    """Norm of (N_h - lambda^J) applied to the order-J quasimode, per h.

    The residual of the normalized quasimode must scale like h^{J+2}; h
    points where the grid-refinement probe shows the discretization floor
    (change above ``gate``) are excluded from the slope fit.
    """
    k, rho_op, rho_wkb = _wkb_windows(field, cutoff_K)
    exp = transport_chain(
        field, m, J, mode="grid", rho_max=rho_wkb, n_cheb=256, cutoff_K=k
    )
    observed, kept_h, excluded = [], [], []
    for h in h_list:
        n = n_grid or _residual_n(h, J, rho_op, n_cap)
        r_fine = _residual_once(field, exp, h, m, J, n, rho_op)
        r_coarse = _residual_once(field, exp, h, m, J, max(n // 2, 64), rho_op)
        drift = abs(r_fine - r_coarse) / max(r_fine, 1e-300)
        if drift > gate:
            excluded.append({"h": h, "residual": r_fine, "drift": drift})
            continue
        kept_h.append(h)
        observed.append(r_fine)
    slope, ci = fit_loglog(kept_h, observed)
    target = float(J + 2)
    passed = slope is not None and abs(slope - target) <= slope_tolerance
    return VerificationReport(
        test="residual_scaling",
        h_values=kept_h,
        observed=observed,
        slope=slope,
        slope_ci=ci,
        target=target,
        tolerance=slope_tolerance,
        passed=passed,
        details={"m": m, "J": J, "cutoff_K": k, "excluded": excluded},
    )


# ---------------------------------------------------------------------------
# eigenvalue asymptotics
# ---------------------------------------------------------------------------


def _eigen_n(h: float, rho_max: float, n_cap: int = 400_000) -> int:
    d_target = 1.5 * h**2.5
    n = int(np.ceil(rho_max / d_target))
    n = max(n, int(np.ceil(8.0 * rho_max / np.sqrt(h))) + 1, 1024)
    return min(n, n_cap)


def _ground_value(field, h, m, n, rho_max) -> float:
    op = build_radial_operator(field, h, m, n, rho_max)
    return eigen_solve(op, 1)[0].value


def eigenvalue_two_term(
    field: RadialField,
    m: int,
    h_list,
    n_grid: int | None = None,
    slope_floor: float = 2.7,
) -> VerificationReport:
    """Fit of log |lambda_0(N_{h,m}) - mu_0 h - mu_1 h^2| against log h.

    The defect of the two-term expansion must vanish at cubic order.
    """
    chain = transport_chain(field, m, J=1, mode="series")
    mu0, mu1 = chain.mu[0], chain.mu[1]
    observed, kept = [], []
    for h in h_list:
        rho_max = max(_phi_inverse(field, 9.0 * h), 24.0 * h / field.beta0)
        n = n_grid or _eigen_n(h, rho_max)
        lam = _ground_value(field, h, m, n, rho_max)
        observed.append(abs(lam - mu0 * h - mu1 * h**2))
        kept.append(h)
    slope, ci = fit_loglog(kept, observed)
    passed = slope is not None and slope >= slope_floor
    return VerificationReport(
        test="eigenvalue_two_term",
        h_values=kept,
        observed=observed,
        slope=slope,
        slope_ci=ci,
        target=3.0,
        tolerance=3.0 - slope_floor,
        passed=passed,
        details={"m": m, "mu0": mu0, "mu1": mu1},
    )


# ---------------------------------------------------------------------------
# exponential decay (weighted-norm boundedness)
# ---------------------------------------------------------------------------


def agmon_check(
    field: RadialField,
    m: int,
    h_list,
    epsilon: float,
    n_grid: int | None = None,
) -> VerificationReport:
    """Ratio of the e^{eps phi / h}-weighted to plain norm of the ground state.

    Exponential localization makes the ratio stay bounded as h decreases;
    the verdict requires total variation below a factor 2 and no monotone
    growth along the ladder.
    """
    if not (0 <= epsilon < 1):
        raise ValueError("need 0 <= epsilon < 1")
    phi = eikonal_phi(field, order=32)
    observed = []
    for h in h_list:
        # window covers the trusted (above-noise) part of the eigenvector;
        # beyond it the weighted integrand is thresholded away anyway
        rho_max = max(_phi_inverse(field, 40.0 * h), 40.0 * h / field.beta0)
        n = n_grid or min(max(int(np.ceil(rho_max / h * 60.0)), 2048), 400_000)
        op = build_radial_operator(field, h, m, n, rho_max)
        psi = eigen_solve(op, 1)[0].vector
        log_num = _log_weighted_norm(psi, epsilon * phi(op.grid) / h, op.weights)
        observed.append(float(np.exp(log_num)))  # ground state has unit norm
    ratios = np.array(observed)
    spread_ok = np.max(ratios) / np.min(ratios) < 2.0
    # bounded means: either not monotone at all, or monotone with shrinking
    # increments (saturation toward a finite limit); a genuine divergence
    # shows growing increments along a geometric h-ladder
    inc = np.diff(ratios)
    monotone_up = bool(np.all(inc > 0))
    saturating = bool(np.all(np.diff(inc) < 0)) if len(inc) > 1 else False
    bounded = (not monotone_up) or saturating
    return VerificationReport(
        test="agmon_check",
        h_values=list(h_list),
        observed=observed,
        slope=None,
        slope_ci=None,
        target=None,
        tolerance=None,
        passed=bool(spread_ok and bounded),
        details={
            "m": m,
            "epsilon": epsilon,
            "max_ratio": float(np.max(ratios)),
            "monotone_up": monotone_up,
            "saturating": saturating,
        },
    )


# ---------------------------------------------------------------------------
# weighted eigenfunction approximation
# ---------------------------------------------------------------------------


def weighted_approximation(
    field: RadialField,
    m: int,
    J: int,
    h_list,
    epsilon: float,
    n_grid: int | None = None,
    cutoff_K: float | None = None,
    n_cap: int = 1_600_000,
    gate: float = 0.10,
    slope_tolerance: float = 0.3,
) -> VerificationReport:
    """Weighted distance between the quasimode and its ground projection.

    For the normalized order-J quasimode the claim is
    ||e^{eps phi/h} (Psi - proj Psi)|| = O(h^{J+1}); epsilon = 0 tests the
    plain-norm version.
    """
    if not (0 <= epsilon < 1):
        raise ValueError("need 0 <= epsilon < 1")
    k, rho_op, rho_wkb = _wkb_windows(field, cutoff_K)
    exp = transport_chain(
        field, m, J, mode="grid", rho_max=rho_wkb, n_cheb=256, cutoff_K=k
    )
    phi = eikonal_phi(field, order=32)

    def measure(h, n):
        op = build_radial_operator(field, h, m, n, rho_op)
        psi = exp.ansatz_profile(op.grid, h, J)
        psi = psi / op.norm_fun(psi)
        ground = eigen_solve(op, 1)[0].vector
        diff = psi - op.inner_fun(psi, ground) * ground
        return float(np.exp(_log_weighted_norm(diff, epsilon * phi(op.grid) / h, op.weights)))

    observed, kept_h, excluded = [], [], []
    for h in h_list:
        n = n_grid or _residual_n(h, J, rho_op, n_cap)
        fine = measure(h, n)
        coarse = measure(h, max(n // 2, 64))
        drift = abs(fine - coarse) / max(fine, 1e-300)
        if drift > gate:
            excluded.append({"h": h, "observed": fine, "drift": drift})
            continue
        kept_h.append(h)
        observed.append(fine)
    slope, ci = fit_loglog(kept_h, observed)
    target = float(J + 1)
    passed = slope is not None and abs(slope - target) <= slope_tolerance
    return VerificationReport(
        test="weighted_approximation",
        h_values=kept_h,
        observed=observed,
        slope=slope,
        slope_ci=ci,
        target=target,
        tolerance=slope_tolerance,
        passed=passed,
        details={"m": m, "J": J, "epsilon": epsilon, "cutoff_K": k, "excluded": excluded},
    )


# ---------------------------------------------------------------------------
# fiber identification
# ---------------------------------------------------------------------------


def fiber_identification(
    field: RadialField,
    h: float,
    m_max: int,
    k_max: int,
    n2d: int = 161,
    n2d_probe: int = 129,
    box: float | None = None,
) -> VerificationReport:
    """Match the lowest planar eigenvalues to the angular-fiber ground values.

    Planar eigenvalues are Richardson-extrapolated from two grids; the
    identification is declared unresolved when the fiber splitting falls
    inside the discretization tolerance.
    """
    op = build_2d_operator(field, h, n2d, box)
    pairs = eigen_solve(op, k_max)
    if boundary_mass(op, pairs[0].vector) > 1e-6:
        raise BoxTooSmallError("ground state reaches the box boundary; enlarge box")
    op_probe = build_2d_operator(field, h, n2d_probe, box or op.descriptor["box"])
    pairs_probe = eigen_solve(op_probe, k_max)

    d_fine = 2.0 * op.descriptor["box"] / (n2d + 1)
    d_probe = 2.0 * op.descriptor["box"] / (n2d_probe + 1)
    lam2d, tol2d = [], []
    for p, q in zip(pairs, pairs_probe):
        # second-order extrapolation lam = lam* + C d^2; what survives the
        # extrapolation is a higher-order fraction of the removed correction
        c = (q.value - p.value) / (d_probe**2 - d_fine**2)
        lam_star = p.value - c * d_fine**2
        lam2d.append(lam_star)
        tol2d.append(0.25 * abs(lam_star - p.value) + 1e-12 * abs(lam_star))

    fiber = []
    for m in range(m_max + 1):
        rho_max = max(_phi_inverse(field, 9.0 * h), 24.0 * h / field.beta0)
        n = _eigen_n(h, rho_max)
        fiber.append(_ground_value(field, h, m, n, rho_max))

    gaps = np.diff(lam2d)
    resolved = len(lam2d) < 2 or bool(np.min(gaps) > 4.0 * max(tol2d))
    mapping = []
    identity = True
    for kk, lam in enumerate(lam2d):
        j = int(np.argmin(np.abs(np.array(fiber) - lam)))
        ok = abs(fiber[j] - lam) <= max(4.0 * tol2d[kk], 1e-10)
        mapping.append(
            {"k": kk, "m": j, "lambda_2d": lam, "lambda_fiber": fiber[j], "matched": ok}
        )
        identity = identity and ok and j == kk
    return VerificationReport(
        test="fiber_identification",
        h_values=[h],
        observed=list(lam2d),
        slope=None,
        slope_ci=None,
        target=None,
        tolerance=max(tol2d) if tol2d else None,
        passed=bool(resolved and identity),
        details={
            "resolved": resolved,
            "mapping": mapping,
            "fiber_values": fiber,
            "tol2d": tol2d,
        },
    )


def angular_content(op: OperatorMatrix, vector: np.ndarray, n_theta: int = 128):
    """Dominant angular mode of a planar grid function via FFT on a circle."""
    from scipy.interpolate import RegularGridInterpolator

    v = vector
    n = int(round(np.sqrt(op.n)))
    x = op.grid[:, 0].reshape(n, n)[:, 0]
    y = op.grid[:, 1].reshape(n, n)[0, :]
    field = v.reshape(n, n)
    dens = np.abs(field) ** 2
    r_grid = np.sqrt(op.grid[:, 0] ** 2 + op.grid[:, 1] ** 2)
    r_star = float(np.sqrt(np.sum(r_grid**2 * dens.ravel()) / np.sum(dens)))
    interp = RegularGridInterpolator((x, y), field)
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    ring = interp(np.column_stack([r_star * np.cos(theta), r_star * np.sin(theta)]))
    spectrum = np.abs(np.fft.fft(ring)) / n_theta
    mode = int(np.argmax(spectrum))
    if mode > n_theta // 2:
        mode -= n_theta
    return {"mode": mode, "radius": r_star, "spectrum_peak": float(np.max(spectrum))}


# ---------------------------------------------------------------------------
# model-operator polynomial ladder
# ---------------------------------------------------------------------------


def _laguerre_exact(n_max: int, m: int) -> list:
    """Generalized Laguerre polynomials with parameter |m|, exact coefficients."""
    alpha = abs(m)
    polys = [[Fraction(1)]]
    if n_max >= 1:
        polys.append([Fraction(1 + alpha), Fraction(-1)])
    for n in range(1, n_max):
        prev, prev2 = polys[n], polys[n - 1]
        out = [Fraction(0)] * (n + 2)
        for i, c in enumerate(prev):
            out[i] += Fraction(2 * n + 1 + alpha, n + 1) * c
            out[i + 1] -= Fraction(1, n + 1) * c
        for i, c in enumerate(prev2):
            out[i] -= Fraction(n + alpha, n + 1) * c
        polys.append(out)
    return polys


def _ladder_apply(poly: list, m: int) -> list:
    """-2 s p'' + (2 s - 2 - 2|m|) p' + (|m| - m + 1) p, exact."""
    alpha = abs(m)
    deg = len(poly) - 1
    out = [Fraction(0)] * (deg + 2)
    for i, c in enumerate(poly):
        if i >= 2:
            out[i - 1] -= 2 * Fraction(i * (i - 1)) * c
        if i >= 1:
            out[i] += 2 * Fraction(i) * c
            out[i - 1] -= Fraction(2 + 2 * alpha) * Fraction(i) * c
        out[i] += Fraction(alpha - m + 1) * c
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return out


def laguerre_suite(n_max: int = 10, m_range=range(-5, 6)) -> VerificationReport:
    """Eigen-identity and orthogonality of the model-operator polynomials.

    The ladder operator maps the n-th polynomial to (2n + 1 + |m| - m)
    times itself (verified in exact rational arithmetic) and the weighted
    inner products are Gamma(n + |m| + 1)/n! on the diagonal (verified by
    Gauss quadrature exact for the integrand degree).
    """
    if n_max > 12:
        raise ValueError("polynomial degree budget is n_max <= 12")
    worst_identity = Fraction(0)
    worst_orth = 0.0
    for m in m_range:
        alpha = abs(m)
        polys = _laguerre_exact(n_max, m)
        for n, p in enumerate(polys):
            lhs = _ladder_apply(p, m)
            lam = 2 * n + 1 + alpha - m
            rhs = [lam * c for c in p]
            width = max(len(lhs), len(rhs))
            lhs += [Fraction(0)] * (width - len(lhs))
            rhs += [Fraction(0)] * (width - len(rhs))
            defect = max(abs(a - b) for a, b in zip(lhs, rhs))
            worst_identity = max(worst_identity, defect)
        nodes, weights = roots_genlaguerre(n_max + 1, alpha)
        vals = np.array(
            [np.polynomial.polynomial.polyval(nodes, [float(c) for c in p]) for p in polys]
        )
        gram = vals @ np.diag(weights) @ vals.T
        for n in range(n_max + 1):
            expect = math.gamma(n + alpha + 1) / math.factorial(n)
            worst_orth = max(worst_orth, abs(gram[n, n] - expect) / expect)
            for kk in range(n):
                worst_orth = max(worst_orth, abs(gram[kk, n]) / expect)
    passed = worst_identity == 0 and worst_orth <= 1e-10
    return VerificationReport(
        test="laguerre_suite",
        h_values=[],
        observed=[float(worst_identity), worst_orth],
        slope=None,
        slope_ci=None,
        target=None,
        tolerance=1e-10,
        passed=bool(passed),
        details={"n_max": n_max, "m_range": list(m_range)},
    )
