"""Discretized magnetic Schrodinger operators and their low eigenpairs.

All operators are assembled in flux form with second-order symmetric
finite differences on uniform grids and carried in the frame where the
weighted L^2 inner product becomes the plain dot product (functions are
multiplied by the square root of their quadrature weights), so every
matrix is genuinely symmetric or Hermitian.

Builders cover the radial fiber operator on the half-line in the
half-squared-radius variable, its h-rescaled version, the harmonic model
operator at the bottom of the well, and the full planar magnetic
Laplacian with the rotation-symmetric gauge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .radial import RadialField
from .surface import SurfaceField

__all__ = [
    "OperatorMatrix",
    "EigenPair",
    "GridResolutionError",
    "BoxTooSmallError",
    "build_radial_operator",
    "build_rescaled_operator",
    "build_model_operator",
    "build_2d_operator",
    "eigen_solve",
    "boundary_mass",
]


class GridResolutionError(ValueError):
    """Grid too coarse to resolve the semiclassical well."""


class BoxTooSmallError(ValueError):
    """Ground state carries non-negligible mass at the box boundary."""


class EigenSolveError(RuntimeError):
    pass


@dataclass
class OperatorMatrix:
    """Sparse symmetric/Hermitian matrix with its grid and measure weights.

    ``entries`` acts on sqrt-weighted samples; ``apply_fun`` and
    ``eigen_solve`` translate back to function samples on ``grid``.
    """

    entries: sp.spmatrix
    grid: np.ndarray
    weights: np.ndarray
    descriptor: dict

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def hermiticity_defect(self) -> float:
        d = self.entries - self.entries.getH()
        scale = max(np.max(np.abs(self.entries.data)), 1e-300)
        return float(np.max(np.abs(d.data)) / scale) if d.nnz else 0.0

    def check_hermitian(self, tol: float = 1e-13) -> None:
        defect = self.hermiticity_defect()
        if defect > tol:
            raise EigenSolveError(
                f"operator {self.descriptor} is not Hermitian: relative defect {defect:.2e}"
            )

    def apply_fun(self, values: np.ndarray) -> np.ndarray:
        """Apply the operator to function samples on the grid."""
        sw = np.sqrt(self.weights)
        return self.entries.dot(sw * values) / sw

    def norm_fun(self, values: np.ndarray) -> float:
        """Weighted L^2 norm of function samples."""
        return float(np.sqrt(np.sum(self.weights * np.abs(values) ** 2)))

    def inner_fun(self, u: np.ndarray, v: np.ndarray) -> complex:
        return complex(np.sum(self.weights * np.conj(v) * u))

    def is_tridiagonal(self) -> bool:
        return bool(self.descriptor.get("tridiagonal", False))


@dataclass
class EigenPair:
    value: float
    vector: np.ndarray  # function samples, unit weighted norm
    residual: float


def _flux_weighted_tridiagonal(edge_coef, potential, node_weights, grid, descriptor):
    """Divergence-form matrix for c(x) d_x on a weighted measure w(x) dx.

    The operator is u -> [c_i (u_i - u_{i-1}) + c_{i+1} (u_i - u_{i+1})] / w_i
    + V_i u_i with c_0 = 0 (natural boundary at 0) and a Dirichlet wall
    after the last node; the matrix is carried in the sqrt-weighted frame,
    where it is symmetric tridiagonal.
    """
    c = edge_coef
    w = node_weights
    dx = grid[1] - grid[0]
    measure = w / dx  # density of the measure at the nodes
    diag = (c[:-1] + c[1:]) / measure + potential
    off = -c[1:-1] / np.sqrt(measure[:-1] * measure[1:])
    mat = sp.diags([off, diag, off], offsets=[-1, 0, 1], format="csr")
    return OperatorMatrix(
        entries=mat,
        grid=grid,
        weights=w,
        descriptor={**descriptor, "tridiagonal": True},
    )


def build_radial_operator(
    field: RadialField, h: float, m: int, n_grid: int, rho_max: float
) -> OperatorMatrix:
    """Angular-momentum-m fiber of the planar operator, on (0, rho_max).

    The fiber -2 h^2 d_rho rho d_rho + (h m - a(rho))^2 / (2 rho) acting
    on L^2(d rho) is assembled in its exactly unitarily equivalent form
    on L^2(rho^m d rho): conjugating by rho^{m/2} absorbs the singular
    h^2 m^2/(2 rho) part into the divergence term, leaving the smooth
    potential a(rho)(a(rho) - 2hm)/(2 rho).  Eigenvalues are unchanged
    and second-order convergence survives for every m (the raw singular
    potential would degrade it to first order).  Eigenvectors returned by
    ``eigen_solve`` are the rho^{-m/2}-reduced profiles.

    Staggered nodes rho_i = (i + 1/2) drho, natural boundary at 0
    (vanishing edge flux), Dirichlet at rho_max.
    """
    if h <= 0 or m < 0:
        raise ValueError("need h > 0 and m >= 0")
    d = rho_max / n_grid
    if d > np.sqrt(h) / 8.0:
        raise GridResolutionError(
            f"need at least 8 nodes per width sqrt(h): d={d:.3e}, sqrt(h)/8={np.sqrt(h)/8:.3e}"
        )
    nodes = (np.arange(n_grid) + 0.5) * d
    edges = np.arange(n_grid + 1) * d
    c = 2.0 * h**2 * edges ** (m + 1) / d**2
    a = field.a_at(nodes)
    v = a * (a - 2.0 * h * m) / (2.0 * nodes)
    return _flux_weighted_tridiagonal(
        c,
        v,
        nodes**m * d,
        nodes,
        {"kind": "radial_fiber", "h": h, "m": m, "rho_max": rho_max},
    )


def build_rescaled_operator(
    field: RadialField, h: float, m: int, n_grid: int, t_max: float
) -> OperatorMatrix:
    """Fiber after the rescaling rho = h t, on L^2(t^m dt).

    Same reduction as ``build_radial_operator``; the raw form is
    -2 h d_t t d_t + (h m - a(h t))^2 / (2 h t).
    """
    if h <= 0 or m < 0:
        raise ValueError("need h > 0 and m >= 0")
    d = t_max / n_grid
    nodes = (np.arange(n_grid) + 0.5) * d
    edges = np.arange(n_grid + 1) * d
    c = 2.0 * h * edges ** (m + 1) / d**2
    a = field.a_at(h * nodes)
    v = a * (a - 2.0 * h * m) / (2.0 * h * nodes)
    return _flux_weighted_tridiagonal(
        c,
        v,
        nodes**m * d,
        nodes,
        {"kind": "rescaled_fiber", "h": h, "m": m, "t_max": t_max},
    )


def build_model_operator(
    m: int, beta0: float, n_grid: int = 4001, t_max: float | None = None
) -> OperatorMatrix:
    """Bottom-of-the-well model -2 d_t t d_t + beta0^2 t/2 + m^2/(2t) - m beta0.

    Assembled on L^2(t^{|m|} dt) after conjugation by t^{|m|/2}, which
    removes the m^2/(2t) singularity exactly; the spectrum is the ladder
    (2k + 1 + |m| - m) beta0.
    """
    if beta0 <= 0:
        raise ValueError("beta0 must be positive")
    if t_max is None:
        t_max = (40.0 + 10.0 * abs(m)) / beta0
    d = t_max / n_grid
    nodes = (np.arange(n_grid) + 0.5) * d
    edges = np.arange(n_grid + 1) * d
    am = abs(m)
    c = 2.0 * edges ** (am + 1) / d**2
    v = beta0**2 * nodes / 2.0 - m * beta0
    return _flux_weighted_tridiagonal(
        c,
        v,
        nodes**am * d,
        nodes,
        {"kind": "model", "m": m, "beta0": beta0, "t_max": t_max},
    )


def _alpha_potential(field, x, y):
    """alpha(q) with A = (-q2 alpha, q1 alpha), alpha(q) = int_0^1 t B(tq) dt."""
    if isinstance(field, RadialField):
        rho = 0.5 * (x**2 + y**2)
        return field.a_over_2rho_at(rho)
    if isinstance(field, SurfaceField):
        c = field.b_taylor.coeffs
        out = np.zeros_like(x)
        for mm, nn in zip(*np.nonzero(c)):
            out += (c[mm, nn].real / (mm + nn + 2)) * x**mm * y**nn
        return out
    raise TypeError("field must be a RadialField or a SurfaceField")


def build_2d_operator(
    field,
    h: float,
    n_grid: int = 161,
    box: float | None = None,
    check_box: bool = False,
) -> OperatorMatrix:
    """Planar magnetic Laplacian e^{-2 eta} [(-i h d1 - A1)^2 + (-i h d2 - A2)^2].

    Dirichlet box [-L, L]^2 with ``n_grid`` interior nodes per side; the
    gauge is the rotation-friendly one generated by alpha(q).  For a
    surface field the conformal factor enters symmetrically, turning the
    weighted problem into a plain Hermitian one.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    b0 = field.beta0 if isinstance(field, RadialField) else field.b0
    L = float(box) if box is not None else float(np.sqrt(140.0 * h / b0))
    n = int(n_grid)
    d = 2.0 * L / (n + 1)
    axis = -L + d * (np.arange(n) + 1.0)
    x, y = np.meshgrid(axis, axis, indexing="ij")

    alpha = _alpha_potential(field, x, y)
    a1 = -y * alpha
    a2 = x * alpha

    k2 = h**2 / d**2
    diag = (4.0 * k2 + a1**2 + a2**2).ravel()

    # x-neighbors: index offset n (row-major), Hermitian pairs built once
    off_x = (-k2 + 0.5j * h * (a1[:-1, :] + a1[1:, :]) / d).ravel()
    off_y = (-k2 + 0.5j * h * (a2[:, :-1] + a2[:, 1:]) / d)
    off_y = np.hstack([off_y, np.zeros((n, 1))]).ravel()[:-1]

    mat = sp.diags(
        [np.conj(off_x), np.conj(off_y), diag, off_y, off_x],
        offsets=[-n, -1, 0, 1, n],
        format="csr",
        dtype=np.complex128,
    )

    weights = np.full(n * n, d * d)
    if isinstance(field, SurfaceField) and not field.eta_taylor.is_zero():
        eta = np.real(field.eta_taylor(x, y)).ravel()
        scale = sp.diags(np.exp(-eta))
        mat = (scale @ mat @ scale).tocsr()
        weights = weights * np.exp(2.0 * eta)

    op = OperatorMatrix(
        entries=mat,
        grid=np.column_stack([x.ravel(), y.ravel()]),
        weights=weights,
        descriptor={"kind": "plane2d", "h": h, "n_grid": n, "box": L},
    )
    if check_box:
        ground = eigen_solve(op, 1)[0]
        frac = boundary_mass(op, ground.vector)
        if frac > 1e-6:
            raise BoxTooSmallError(
                f"ground state has boundary mass {frac:.2e} > 1e-6; enlarge the box"
            )
    return op


def boundary_mass(op: OperatorMatrix, vector: np.ndarray) -> float:
    """Weighted mass fraction carried by the outermost node layer."""
    if op.grid.ndim != 2:
        w = op.weights * np.abs(vector) ** 2
        return float(w[-1] / np.sum(w))
    n = int(round(np.sqrt(op.n)))
    mask = np.zeros((n, n), dtype=bool)
    mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
    w = (op.weights * np.abs(vector) ** 2).reshape(n, n)
    return float(np.sum(w[mask]) / np.sum(w))


def eigen_solve(op: OperatorMatrix, k: int) -> list[EigenPair]:
    """k lowest eigenpairs of the weighted symmetric problem.

    Vectors come back as function samples with unit weighted norm, values
    nondecreasing.  Dense tridiagonal solves handle the 1D builds; the
    planar operator goes through shift-invert Lanczos with a fixed start
    vector for reproducibility.
    """
    if k < 1:
        raise ValueError("need k >= 1")
    op.check_hermitian()
    sw = np.sqrt(op.weights)
    if op.is_tridiagonal():
        mat = op.entries.tocsr()
        d = np.real(mat.diagonal())
        e = np.real(mat.diagonal(1))
        vals, vecs = sla.eigh_tridiagonal(d, e, select="i", select_range=(0, k - 1))
    else:
        v0 = np.ones(op.n) / np.sqrt(op.n)
        try:
            vals, vecs = spla.eigsh(op.entries.tocsc(), k=k, sigma=0.0, which="LM", v0=v0)
        except Exception as err:  # pragma: no cover - solver failure path
            raise EigenSolveError(f"eigensolver failed for {op.descriptor}: {err}") from err
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]

    scale = float(np.max(np.abs(op.entries).sum(axis=1)))
    pairs = []
    for i in range(k):
        v = vecs[:, i]
        resid = float(np.linalg.norm(op.entries.dot(v) - vals[i] * v))
        if resid > 1e-8 * scale:
            raise EigenSolveError(
                f"eigenpair residual {resid:.2e} exceeds tolerance for {op.descriptor}"
            )
        pairs.append(EigenPair(value=float(vals[i]), vector=v / sw, residual=resid))
    if any(pairs[i].value > pairs[i + 1].value for i in range(k - 1)):
        raise EigenSolveError("eigenvalues not nondecreasing")
    return pairs
