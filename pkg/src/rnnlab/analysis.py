"""Executable diagnostics for gradient growth/decay and state-space structure.

Covers: the sufficient/necessary inequalities for vanishing/exploding error
transport, the dominant-eigendirection expansion of a transported error row,
a bifurcation sweep of the one-unit sigmoid map, a loss/gradient surface scan
for the one-unit network, and a trajectory-divergence probe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import linalg
from .grad import bptt
from .model import (IDENTITY, SIGMOID, Activation, LossSpec, NonFiniteStateError,
                    RnnParams, Trajectory, error_signals, forward)


class UnsupportedMatrixError(ValueError):
    """Matrix outside the supported diagnostic regime (size, spectrum, or conditioning)."""


# ---------------------------------------------------------------------------
# growth/decay conditions

@dataclass(frozen=True)
class GradientConditions:
    spectral_radius: float
    spectral_norm: float
    slope_bound: float
    vanishing_sufficient: bool   # spectral_norm * slope_bound < 1 (proved bound)
    exploding_necessary: bool    # spectral_radius > 1 / slope_bound
    contraction: float | None    # spectral_norm * slope_bound when < 1


def check_conditions(params: RnnParams) -> GradientConditions:
    radius = linalg.spectral_radius(params.w_rec)
    norm = linalg.spectral_norm(params.w_rec)
    gamma = params.activation.slope_bound
    eta = norm * gamma
    return GradientConditions(
        spectral_radius=radius,
        spectral_norm=norm,
        slope_bound=gamma,
        vanishing_sufficient=eta < 1.0,
        exploding_necessary=radius > 1.0 / gamma,
        contraction=eta if eta < 1.0 else None,
    )


# ---------------------------------------------------------------------------
# dominant-direction expansion of a transported error row

def _char_poly_coeffs(m: np.ndarray) -> np.ndarray:
    """Characteristic polynomial coefficients via the Faddeev-LeVerrier recursion."""
    n = m.shape[0]
    coeffs = [1.0]
    mk = m.copy()
    for k in range(1, n + 1):
        ck = -float(np.trace(mk)) / k
        coeffs.append(ck)
        if k < n:
            mk = m @ (mk + ck * np.eye(n))
    return np.array(coeffs)


def _inverse_iteration(m: np.ndarray, lam: float, rng: np.random.Generator,
                       iters: int = 4) -> np.ndarray:
    n = m.shape[0]
    shifted = m - (lam + 1e-12 * (1.0 + abs(lam))) * np.eye(n)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(iters):
        try:
            v = np.linalg.solve(shifted, v)
        except np.linalg.LinAlgError as exc:  # pragma: no cover
            raise UnsupportedMatrixError(f"inverse iteration failed at {lam}") from exc
        v /= np.linalg.norm(v)
    return v


def eigen_decomposition(m) -> tuple[np.ndarray, np.ndarray]:
    """Real eigenvalues (sorted by |lambda| descending) and eigenvector columns.

    Supports n <= 8 matrices that are numerically diagonalizable with all
    eigenvalue magnitudes distinct; anything else (complex pairs, ties, bad
    conditioning) raises UnsupportedMatrixError.
    """
    m = linalg.as_matrix(m)
    n = m.shape[0]
    if m.shape != (n, n) or n > 8:
        raise UnsupportedMatrixError(f"eigen expansion supports square n <= 8, got {m.shape}")
    roots = np.roots(_char_poly_coeffs(m))
    scale = max(1.0, float(np.max(np.abs(roots))))
    if np.any(np.abs(roots.imag) > 1e-8 * scale):
        raise UnsupportedMatrixError("complex eigenvalues: magnitudes come in tied pairs")
    lams = roots.real[np.argsort(-np.abs(roots.real))]
    gaps = np.abs(np.abs(lams[:-1]) - np.abs(lams[1:]))
    if n > 1 and np.min(gaps) <= 1e-8 * scale:
        raise UnsupportedMatrixError("eigenvalue magnitudes are not distinct")
    rng = np.random.default_rng(7)
    vecs = []
    for lam in lams:
        v = _inverse_iteration(m, float(lam), rng)
        residual = float(np.linalg.norm(m @ v - lam * v))
        if residual > 1e-6 * (scale + float(np.abs(m).max())):
            raise UnsupportedMatrixError(f"eigenpair residual {residual:.2e} too large")
        vecs.append(v)
    q = np.column_stack(vecs)
    if np.linalg.cond(q) > 1e10:
        raise UnsupportedMatrixError("eigenvector basis is ill conditioned")
    return lams, q


@dataclass(frozen=True)
class DirectionResult:
    approx: np.ndarray      # c_j lambda_j^l q_j, the dominant-term prediction
    exact: np.ndarray       # error_row transported l steps, by repeated matvec
    rel_error: float
    dominant_eigenvalue: float


def exploding_direction(w_rec, error_row, l: int) -> DirectionResult:
    """Compare exact l-step transport of an error row with its dominant term.

    The error row is expanded in the eigenvector basis of w_rec; the first
    nonzero coefficient (in decreasing |lambda| order) gives the direction
    along which the transported row grows like lambda^l.
    """
    w_rec = linalg.as_matrix(w_rec)
    e = linalg.as_vector(error_row)
    if l < 0:
        raise ValueError("l must be nonnegative")
    lams, q = eigen_decomposition(w_rec)
    coeffs = np.linalg.solve(q, e)
    mask = np.abs(coeffs) > 1e-10 * max(float(np.max(np.abs(coeffs))), 1e-300)
    if not np.any(mask):
        raise ValueError("error row is numerically zero")
    j = int(np.argmax(mask))
    approx = coeffs[j] * (lams[j] ** l) * q[:, j]

    exact = e.copy()
    for _ in range(l):
        exact = linalg.matvec(w_rec, exact)   # row @ w_rec.T == w_rec @ column
    denom = float(np.linalg.norm(exact))
    rel = float(np.linalg.norm(approx - exact)) / denom if denom > 0 else np.inf
    return DirectionResult(approx=approx, exact=exact, rel_error=rel,
                           dominant_eigenvalue=float(lams[j]))


# ---------------------------------------------------------------------------
# one-unit sigmoid map: attractors and bifurcation boundaries

DEFAULT_MAP_ITERS = 20_000
DEFAULT_MAP_TOL = 1e-8


def _default_probe(w: float, b: float, count: int = 21) -> np.ndarray:
    span = abs(w) + abs(b)
    return np.linspace(-span, span, count)


@dataclass(frozen=True)
class AttractorSet:
    b: float
    points: tuple[float, ...]    # clustered point attractors
    n_cycle: int                 # probe starts that settled on a non-point attractor
    n_unresolved: int            # probe starts that did not converge in budget


def find_attractors(w: float, b: float, x0_set=None, iters: int = DEFAULT_MAP_ITERS,
                    tol: float = DEFAULT_MAP_TOL) -> AttractorSet:
    """Iterate x <- w*sigmoid(x) + b from every probe start and cluster endpoints.

    Endpoints where the map slope has magnitude >= 1 are discarded: a probe
    start sitting exactly on an unstable fixed point (or a basin boundary)
    stays there forever without being an attractor.
    """
    x = np.array(_default_probe(w, b) if x0_set is None else x0_set, dtype=np.float64)
    done = np.zeros(x.shape, dtype=bool)
    for _ in range(iters):
        x_new = w * expit(x) + b
        done |= np.abs(x_new - x) < tol
        x = x_new
        if done.all():
            break
    s = expit(x)
    stable = np.abs(w * s * (1.0 - s)) < 1.0
    converged = x[done & stable]
    stuck = x[~done]
    n_cycle = 0
    n_unresolved = 0
    for v in stuck:
        two_step = w * expit(w * expit(v) + b) + b
        if abs(two_step - v) < 100 * tol:
            n_cycle += 1
        else:
            n_unresolved += 1
    points: list[float] = []
    for v in np.sort(converged):
        if not points or v - points[-1] > 10 * tol:
            points.append(float(v))
    return AttractorSet(b=float(b), points=tuple(points), n_cycle=n_cycle,
                        n_unresolved=n_unresolved)


@dataclass(frozen=True)
class BifurcationSweep:
    w: float
    rows: tuple[AttractorSet, ...]
    boundaries: tuple[float, ...]   # bisection estimates where the count changes


def bifurcation_sweep(w: float, b_values, x0_set=None, iters: int = DEFAULT_MAP_ITERS,
                      tol: float = DEFAULT_MAP_TOL, boundary_tol: float = 1e-6
                      ) -> BifurcationSweep:
    """Attractor sets over a grid of biases plus refined count-change boundaries."""
    b_values = np.asarray(b_values, dtype=np.float64)
    rows = [find_attractors(w, b, x0_set, iters, tol) for b in b_values]
    boundaries = []
    for left, right in zip(rows[:-1], rows[1:]):
        if len(left.points) != len(right.points):
            boundaries.append(_bisect_boundary(w, left.b, right.b, len(left.points),
                                               x0_set, iters, tol, boundary_tol))
    return BifurcationSweep(w=float(w), rows=tuple(rows), boundaries=tuple(boundaries))


def _bisect_boundary(w, b_lo, b_hi, count_lo, x0_set, iters, tol, boundary_tol):
    while b_hi - b_lo > boundary_tol:
        mid = 0.5 * (b_lo + b_hi)
        if len(find_attractors(w, mid, x0_set, iters, tol).points) == count_lo:
            b_lo = mid
        else:
            b_hi = mid
    return 0.5 * (b_lo + b_hi)


# ---------------------------------------------------------------------------
# one-unit loss surface

@dataclass(frozen=True)
class SurfaceScan:
    w_grid: np.ndarray
    b_grid: np.ndarray
    loss: np.ndarray        # (len(w_grid), len(b_grid))
    grad_norm: np.ndarray   # ||(dE/dw, dE/db)||
    saturated: np.ndarray   # cells whose unroll overflowed


def _single_unit(w: float, b: float, activation: Activation) -> RnnParams:
    return RnnParams(w_rec=np.array([[w]]), w_in=np.zeros((0, 1)),
                     b=np.array([b]), w_out=np.array([[1.0]]),
                     b_out=np.zeros(1), activation=activation)


def single_unit_loss_grad(w: float, b: float, x0: float = 0.5, T: int = 50,
                          target: float = 0.7,
                          activation: Activation = SIGMOID) -> tuple[float, float, float]:
    """Loss (sigma(x_T) - target)^2 of the input-free one-unit net and its (w, b) gradient."""
    params = _single_unit(w, b, activation)
    traj = forward(params, np.array([x0]), np.zeros((T, 0)))
    spec = LossSpec("mse_final")
    total, dE_dx, dE_dy = error_signals(params, traj, spec, [T], np.array([[target]]))
    report = bptt(params, traj, dE_dx, dE_dy)
    return total, float(report.d_wrec[0, 0]), float(report.d_b[0])


def error_surface_scan(w_grid, b_grid, x0: float = 0.5, T: int = 50,
                       target: float = 0.7) -> SurfaceScan:
    """Loss and gradient-norm maps of the one-unit sigmoid net over a (w, b) grid."""
    w_grid = np.asarray(w_grid, dtype=np.float64)
    b_grid = np.asarray(b_grid, dtype=np.float64)
    loss = np.full((w_grid.size, b_grid.size), np.nan)
    gnorm = np.full_like(loss, np.nan)
    saturated = np.zeros(loss.shape, dtype=bool)
    for i, w in enumerate(w_grid):
        for j, b in enumerate(b_grid):
            try:
                e, dw, db = single_unit_loss_grad(float(w), float(b), x0, T, target)
            except (NonFiniteStateError, FloatingPointError):
                saturated[i, j] = True
                continue
            loss[i, j] = e
            gnorm[i, j] = np.hypot(dw, db)
    return SurfaceScan(w_grid=w_grid, b_grid=b_grid, loss=loss, grad_norm=gnorm,
                       saturated=saturated)


def wall_statistic(w_grid, b_grid, zoom_levels: int = 4, zoom_points: int = 41,
                   x0: float = 0.5, T: int = 50, target: float = 0.7):
    """Max/median gradient-norm ratio of the surface, with adaptive zoom.

    The high-curvature wall is a thin ridge; a uniform grid understates its
    height. Starting from the base scan's largest cell, the bias axis is
    repeatedly refined around the running argmax. The median comes from the
    base grid alone. Returns (max_grad, median_grad, ratio, (w_at, b_at)).
    """
    base = error_surface_scan(w_grid, b_grid, x0=x0, T=T, target=target)
    finite = base.grad_norm[np.isfinite(base.grad_norm)]
    median = float(np.median(finite))
    flat = np.where(np.isfinite(base.grad_norm), base.grad_norm, -np.inf).ravel()
    seeds = np.argsort(flat)[::-1][:8]
    base_span = float(base.b_grid[1] - base.b_grid[0]) if len(base.b_grid) > 1 else 0.1
    best, w_best, b_best = float(flat[seeds[0]]), None, None
    for cell in seeds:
        i, j = np.unravel_index(cell, base.grad_norm.shape)
        w_at, b_at = float(base.w_grid[i]), float(base.b_grid[j])
        local = float(base.grad_norm[i, j])
        span = base_span
        for _ in range(zoom_levels):
            fine_b = np.linspace(b_at - span, b_at + span, zoom_points)
            scan = error_surface_scan(np.array([w_at]), fine_b, x0=x0, T=T,
                                      target=target)
            jj = int(np.nanargmax(scan.grad_norm[0]))
            if scan.grad_norm[0, jj] > local:
                local = float(scan.grad_norm[0, jj])
                b_at = float(fine_b[jj])
            span = 2.0 * span / (zoom_points - 1)
        if local > best or w_best is None:
            best, w_best, b_best = local, w_at, b_at
    return best, median, best / median, (w_best, b_best)


# ---------------------------------------------------------------------------
# trajectory divergence probe

@dataclass(frozen=True)
class DivergenceProbe:
    driven: np.ndarray       # ||x_t(a) - x_t(b)|| under the given inputs
    autonomous: np.ndarray   # same with all inputs zeroed


def divergence_probe(params: RnnParams, inputs, x0_a, x0_b, t: int) -> DivergenceProbe:
    """Distance traces of two forward passes from nearby initial states."""
    u = np.asarray(inputs, dtype=np.float64)
    if u.shape[0] < t:
        raise ValueError(f"need at least {t} input rows, got {u.shape[0]}")
    u = u[:t]
    zero = np.zeros_like(u)

    def trace(inp) -> np.ndarray:
        a = forward(params, x0_a, inp).states
        b = forward(params, x0_b, inp).states
        return np.linalg.norm(a - b, axis=1)

    return DivergenceProbe(driven=trace(u), autonomous=trace(zero))


def single_unit_params(w: float, b: float, activation: Activation = SIGMOID) -> RnnParams:
    """Public helper for building the one-unit, input-free network."""
    return _single_unit(w, b, activation)


def linear_single_unit(w: float) -> RnnParams:
    return _single_unit(w, 0.0, IDENTITY)
