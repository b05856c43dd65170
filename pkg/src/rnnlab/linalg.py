"""Dense vector/matrix kernel with the spectral tools the gradient analysis needs.

Everything is float64. Matrices are 2-D numpy arrays, vectors 1-D. The
kernel is deliberately small: a deterministic matvec, power iteration,
and the two operator quantities (spectral norm, spectral radius) used to
decide whether backpropagated error signals contract or grow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_MAX_ITERS = 10_000
DEFAULT_TOL = 1e-10
RADIUS_RESTARTS = 8
GROWTH_RATE_SQUARINGS = 6  # fallback estimates ||M^64||^(1/64)


class DimensionError(ValueError):
    """Shapes of operands do not line up."""


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def as_vector(a) -> np.ndarray:
    v = np.asarray(a, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionError(f"expected a 1-D vector, got shape {v.shape}")
    return v


def require_finite(a: np.ndarray, what: str = "array") -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise FloatingPointError(f"non-finite entries in {what}")
    return a


def matvec(m, v) -> np.ndarray:
    """Matrix-vector product with a fixed left-to-right summation order per row.

    The per-row cumulative sum reproduces a scalar accumulation loop
    bit-exactly, so results are independent of the BLAS in use.
    """
    m = as_matrix(m)
    v = as_vector(v)
    if m.shape[1] != v.shape[0]:
        raise DimensionError(f"matvec: {m.shape} @ {v.shape}")
    if m.shape[1] == 0:
        return np.zeros(m.shape[0])
    return (m * v).cumsum(axis=1)[:, -1]


@dataclass(frozen=True)
class PowerIterationResult:
    estimate: float          # |dominant eigenvalue| estimate (growth factor ||Mv||)
    vector: np.ndarray       # unit 2-norm iterate
    converged: bool
    iterations: int


def power_iteration(m, v0, max_iters: int = DEFAULT_MAX_ITERS,
                    tol: float = DEFAULT_TOL) -> PowerIterationResult:
    """Power iteration for the dominant eigenvalue magnitude of a square matrix.

    Convergence requires both the growth estimate ||M v_k|| to settle within
    ``tol`` and the direction of v_k to settle (up to sign). Sign flips are
    allowed so a negative dominant eigenvalue still converges; a rotating
    iterate (complex-dominant or tied |lambda| pair) reports converged=False
    and callers fall back to a growth-rate estimate.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"power_iteration needs a square matrix, got {m.shape}")
    v = as_vector(v0).copy()
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        raise ValueError("power_iteration: v0 must be nonzero")
    v /= nv

    estimate = np.inf
    for it in range(1, max_iters + 1):
        w = m @ v
        growth = float(np.linalg.norm(w))
        if growth == 0.0:
            # iterate fell into the null space
            return PowerIterationResult(0.0, v, False, it)
        w /= growth
        direction_settled = min(np.linalg.norm(w - v), np.linalg.norm(w + v)) <= np.sqrt(tol)
        est_settled = abs(growth - estimate) <= tol
        v = w
        estimate = growth
        if est_settled and direction_settled:
            return PowerIterationResult(estimate, v, True, it)
    return PowerIterationResult(estimate, v, False, max_iters)


def _restart_vectors(n: int, count: int, seed: int = 1234) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        v = rng.standard_normal(n)
        if np.linalg.norm(v) == 0.0:  # pragma: no cover
            v = np.ones(n)
        out.append(v)
    return out


def spectral_norm(m) -> float:
    """Largest singular value, via power iteration on M^T M."""
    m = as_matrix(m)
    if not np.any(m):
        return 0.0
    gram = m.T @ m
    best = 0.0
    for v0 in _restart_vectors(m.shape[1], 4):
        res = power_iteration(gram, v0)
        best = max(best, res.estimate)
    return float(np.sqrt(best))


def growth_rate(m, squarings: int = GROWTH_RATE_SQUARINGS) -> float:
    """||M^(2^k)||^(1/2^k) with renormalization between squarings.

    Upper-bound style estimate of the spectral radius that also covers
    complex-dominant and defective matrices.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError("growth_rate needs a square matrix")
    a = m.copy()
    log_scale = 0.0
    for _ in range(squarings):
        a = a @ a
        s = float(np.linalg.norm(a))  # Frobenius, cheap overflow guard
        if s == 0.0:
            return 0.0
        a /= s
        log_scale = 2.0 * log_scale + np.log(s)
    power = 2 ** squarings
    return float(np.exp((np.log(spectral_norm(a)) + log_scale) / power)) \
        if np.any(a) else 0.0


def spectral_radius(m, restarts: int = RADIUS_RESTARTS) -> float:
    """|lambda_1| estimate: seeded power-iteration restarts, growth-rate fallback."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError("spectral_radius needs a square matrix")
    if not np.any(m):
        return 0.0
    best = None
    for v0 in _restart_vectors(m.shape[0], restarts):
        res = power_iteration(m, v0)
        if res.converged:
            best = res.estimate if best is None else max(best, res.estimate)
    if best is None:
        return growth_rate(m)
    return float(best)
