"""Backpropagation through time, exposed as a sum of temporal contributions.

The total gradient of E = sum_t E_t decomposes per scored step t into
contributions from every earlier step k: the error row at t is transported
back through the product of one-step state Jacobians and contracted with
the immediate partial of x_k w.r.t. the parameters. ``bptt`` computes the
whole thing with one reverse sweep (running accumulated delta rows);
``jacobian_product`` / ``component_norms`` expose the transported factors
for diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .model import BatchTrajectory, LossSpec, RnnParams, Trajectory, error_signals, forward


class NonFiniteGradientError(FloatingPointError):
    pass


def step_jacobian(params: RnnParams, x_prev) -> np.ndarray:
    """One-step state Jacobian w_rec.T @ diag(sigma'(x_prev)).

    Entry [i, j] is the sensitivity of the next state's unit i to unit j of
    x_prev; with identity activation this is exactly w_rec.T.
    """
    x_prev = linalg.as_vector(x_prev)
    if x_prev.shape[0] != params.n:
        raise linalg.DimensionError(f"x_prev has length {x_prev.shape[0]}, expected {params.n}")
    return params.w_rec.T * params.activation.derivative(x_prev)


def jacobian_product(params: RnnParams, traj: Trajectory, k: int, t: int) -> np.ndarray:
    """d x_t / d x_k as the product of t-k one-step Jacobians.

    Composed left to right from step t down to k+1, so entry [i, j] matches
    a finite-difference probe that perturbs x_k[j] and reads x_t[i].
    """
    if not (0 <= k < t <= traj.T):
        raise ValueError(f"need 0 <= k < t <= {traj.T}, got k={k}, t={t}")
    prod = step_jacobian(params, traj.states[t - 1])
    for i in range(t - 1, k, -1):
        prod = prod @ step_jacobian(params, traj.states[i - 1])
    return prod


def immediate_partial_wrec(traj: Trajectory, k: int, params: RnnParams) -> np.ndarray:
    """The rank-1 structure of d+ x_k / d w_rec: just sigma(x_{k-1}).

    Contracting with an error row e gives the k-th contribution to the
    recurrent-weight gradient, outer(sigma(x_{k-1}), e).
    """
    if not (1 <= k <= traj.T):
        raise ValueError(f"need 1 <= k <= {traj.T}, got {k}")
    return params.activation.apply(traj.states[k - 1])


def contract_immediate_wrec(traj: Trajectory, k: int, params: RnnParams,
                            error_row) -> np.ndarray:
    return np.outer(immediate_partial_wrec(traj, k, params), linalg.as_vector(error_row))


@dataclass
class GradientReport:
    d_wrec: np.ndarray
    d_win: np.ndarray
    d_b: np.ndarray
    d_wout: np.ndarray
    d_bout: np.ndarray
    deltas: np.ndarray  # (T+1, n); row k is dE/dx_k accumulated over scored steps >= k
    # optional diagnostics for one designated scoring step t:
    component_step: int | None = None
    temporal_components: dict[int, np.ndarray] = field(default_factory=dict)
    component_norms: dict[int, float] = field(default_factory=dict)

    def blocks(self) -> tuple[np.ndarray, ...]:
        return (self.d_wrec, self.d_win, self.d_b, self.d_wout, self.d_bout)

    def flat(self) -> np.ndarray:
        return np.concatenate([b.ravel() for b in self.blocks()])


def bptt(params: RnnParams, traj: Trajectory, dE_dx, dE_dy=None,
         component_step: int | None = None) -> GradientReport:
    """Reverse sweep over one trajectory.

    dE_dx: (T+1, n) immediate error rows (derivative of E w.r.t. x_t through
    the readout only; zeros at unscored steps). dE_dy: optional (T+1, o)
    derivatives w.r.t. the readout outputs, used for the readout gradients.
    component_step materializes the per-k temporal contributions of that
    scoring step (O(T) extra matrices, diagnostics only).
    """
    dE_dx = np.asarray(dE_dx, dtype=np.float64)
    if dE_dx.shape != traj.states.shape:
        raise linalg.DimensionError(f"dE_dx must be {traj.states.shape}, got {dE_dx.shape}")
    T, n = traj.T, params.n
    act = params.activation
    sig = act.apply(traj.states)
    d_wrec = np.zeros_like(params.w_rec)
    d_win = np.zeros_like(params.w_in)
    d_b = np.zeros_like(params.b)
    deltas = np.zeros((T + 1, n))
    delta = np.zeros(n)
    for k in range(T, 0, -1):
        delta = delta + dE_dx[k]
        if not np.all(np.isfinite(delta)):
            raise NonFiniteGradientError(f"non-finite accumulated delta at step k={k}")
        deltas[k] = delta
        d_wrec += np.outer(sig[k - 1], delta)
        d_win += np.outer(traj.inputs[k - 1], delta)
        d_b += delta
        delta = (delta @ params.w_rec.T) * act.derivative(traj.states[k - 1])
    deltas[0] = delta

    d_wout = np.zeros_like(params.w_out)
    d_bout = np.zeros_like(params.b_out)
    if dE_dy is not None:
        dE_dy = np.asarray(dE_dy, dtype=np.float64)
        for t in range(1, T + 1):
            if np.any(dE_dy[t]):
                d_wout += np.outer(sig[t], dE_dy[t])
                d_bout += dE_dy[t]

    report = GradientReport(d_wrec, d_win, d_b, d_wout, d_bout, deltas)
    if component_step is not None:
        t = component_step
        if not (1 <= t <= T):
            raise ValueError(f"component_step must be in 1..{T}")
        r = dE_dx[t].copy()
        report.component_step = t
        for k in range(t, 0, -1):
            if not np.all(np.isfinite(r)):
                raise NonFiniteGradientError(f"non-finite temporal component at (t={t}, k={k})")
            report.temporal_components[k] = np.outer(sig[k - 1], r)
            report.component_norms[k] = float(np.linalg.norm(r))
            r = (r @ params.w_rec.T) * act.derivative(traj.states[k - 1])
    return report


def component_norms(params: RnnParams, traj: Trajectory, t: int, dE_dxt) -> np.ndarray:
    """Norms of the error row of step t transported back to every k <= t.

    Entry k is ||dE_t/dx_t @ (dx_t/dx_k)||; entry t is just ||dE_t/dx_t||.
    """
    if not (1 <= t <= traj.T):
        raise ValueError(f"t must be in 1..{traj.T}")
    r = linalg.as_vector(dE_dxt).copy()
    out = np.empty(t + 1)
    out[t] = np.linalg.norm(r)
    for k in range(t, 0, -1):
        r = (r @ params.w_rec.T) * params.activation.derivative(traj.states[k - 1])
        out[k - 1] = np.linalg.norm(r)
    return out


def bptt_batch(params: RnnParams, btraj: BatchTrajectory, dE_dx, dE_dy=None
               ) -> tuple[GradientReport, np.ndarray]:
    """Batched reverse sweep; gradients are the mean over the batch.

    Returns (report, deltas) with deltas shaped (T+1, B, n); the report's
    deltas field holds the same array (per-sample rows, not averaged) for
    downstream consumers that need the transported error signals.
    """
    T, B = btraj.T, btraj.batch
    dE_dx = np.asarray(dE_dx, dtype=np.float64)
    deltas = np.zeros((T + 1, B, params.n))
    delta = np.zeros((B, params.n))
    for k in range(T, 0, -1):
        delta = delta + dE_dx[k]
        deltas[k] = delta
        delta = (delta @ params.w_rec.T) * btraj.act_deriv[k - 1]
    deltas[0] = delta

    n, m = params.n, params.m
    sig_prev = btraj.act_states[:-1].reshape(-1, n)
    delt = deltas[1:].reshape(-1, n)
    d_wrec = (sig_prev.T @ delt) / B
    d_win = (btraj.inputs.reshape(-1, m).T @ delt) / B
    d_b = deltas[1:].sum(axis=(0, 1)) / B
    if dE_dy is not None:
        dE_dy = np.asarray(dE_dy, dtype=np.float64)
        dy = dE_dy[1:].reshape(-1, params.o)
        d_wout = (btraj.act_states[1:].reshape(-1, n).T @ dy) / B
        d_bout = dy.sum(axis=0) / B
    else:
        d_wout = np.zeros_like(params.w_out)
        d_bout = np.zeros_like(params.b_out)
    report = GradientReport(d_wrec, d_win, d_b, d_wout, d_bout, deltas)
    if not np.all(np.isfinite(report.flat())):
        raise NonFiniteGradientError("non-finite gradient in batched reverse sweep")
    return report, deltas


# ---------------------------------------------------------------------------
# finite-difference oracle harness (independent of the reverse sweep above)

BLOCK_NAMES = ("w_rec", "w_in", "b", "w_out", "b_out")


def _total_loss(params: RnnParams, x0, inputs, spec: LossSpec, scored, targets) -> float:
    traj = forward(params, x0, inputs)
    total, _, _ = error_signals(params, traj, spec, scored, targets)
    return total


def finite_difference_gradients(params: RnnParams, x0, inputs, spec: LossSpec,
                                scored, targets, eps: float = 1e-5) -> dict[str, np.ndarray]:
    """Central differences of the total loss w.r.t. every parameter entry."""
    params = params.with_blocks(tuple(b.copy() for b in params.blocks()))
    grads = {}
    blocks = dict(zip(BLOCK_NAMES, params.blocks()))
    for name in BLOCK_NAMES:
        base = blocks[name]
        g = np.zeros_like(base)
        flat = base.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            e_plus = _total_loss(params, x0, inputs, spec, scored, targets)
            flat[i] = orig - eps
            e_minus = _total_loss(params, x0, inputs, spec, scored, targets)
            flat[i] = orig
            gflat[i] = (e_plus - e_minus) / (2.0 * eps)
        grads[name] = g
    return grads


def gradient_check(params: RnnParams, x0, inputs, spec: LossSpec, scored, targets,
                   eps: float = 1e-5) -> dict[str, tuple[float, float]]:
    """Per-block (max abs error, max rel error) of bptt against central differences.

    The relative error normalizes by the largest finite-difference entry in
    the block, the only scale at which central differences are trustworthy.
    """
    traj = forward(params, x0, inputs)
    _, dE_dx, dE_dy = error_signals(params, traj, spec, scored, targets)
    report = bptt(params, traj, dE_dx, dE_dy)
    fd = finite_difference_gradients(params, x0, inputs, spec, scored, targets, eps)
    out = {}
    for name, got in zip(BLOCK_NAMES, report.blocks()):
        want = fd[name]
        abs_err = float(np.max(np.abs(got - want))) if want.size else 0.0
        scale = max(float(np.max(np.abs(want))) if want.size else 0.0, 1e-12)
        out[name] = (abs_err, abs_err / scale)
    return out
