"""Penalty that keeps backpropagated error norms stable across one step.

For each step k the transported error row z = r @ w_rec.T * sigma'(x_k),
with r the accumulated error row at step k+1, should keep its norm:
the penalty term is (||z|| / ||r|| - 1)^2, summed over k. Only the
"immediate" gradient w.r.t. w_rec is used (x_k and r are held constant),
which keeps the cost of a regularized update at one extra pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import BatchTrajectory, RnnParams, Trajectory

# error rows with a norm below this carry no trainable signal and are skipped
SIGNAL_FLOOR = 1e-30


@dataclass
class PenaltyReport:
    total: float                 # sum over included k of (ratio_k - 1)^2
    per_k: dict[int, float]      # k -> penalty term
    ratios: dict[int, float]     # k -> ||z|| / ||r||
    alpha: float                 # coefficient the caller will scale by
    degenerate: bool             # every error row was below the signal floor
    skipped: list[int] = field(default_factory=list)  # k dropped from the gradient


def _transported(params: RnnParams, x_k, r):
    d = params.activation.derivative(x_k)
    return (r @ params.w_rec.T) * d, d


def penalty(params: RnnParams, traj: Trajectory, deltas, alpha: float = 1.0) -> PenaltyReport:
    """Evaluate the norm-preservation penalty over steps k = 1..T-1.

    deltas: (T+1, n) accumulated error rows from bptt; row k+1 is the
    signal transported through step k+1 -> k.
    """
    deltas = np.asarray(deltas, dtype=np.float64)
    per_k: dict[int, float] = {}
    ratios: dict[int, float] = {}
    any_signal = False
    total = 0.0
    for k in range(1, traj.T):
        r = deltas[k + 1]
        r_norm = float(np.linalg.norm(r))
        if r_norm < SIGNAL_FLOOR:
            continue
        any_signal = True
        z, _ = _transported(params, traj.states[k], r)
        ratio = float(np.linalg.norm(z)) / r_norm
        ratios[k] = ratio
        per_k[k] = (ratio - 1.0) ** 2
        total += per_k[k]
    return PenaltyReport(total=total, per_k=per_k, ratios=ratios, alpha=alpha,
                         degenerate=not any_signal)


def penalty_grad_immediate(params: RnnParams, traj: Trajectory, deltas
                           ) -> tuple[np.ndarray, PenaltyReport]:
    """Immediate derivative of the penalty w.r.t. w_rec (signals held fixed).

    Per k, with r = deltas[k+1], d = sigma'(x_k) and z = r @ w_rec.T * d:

        d penalty_k / d w_rec = 2 (ratio_k - 1) / (||r|| ||z||) * outer(z * d, r)

    Terms with ||z|| = 0 have no defined norm gradient and are skipped
    (flagged in the report); terms with ||r|| below the signal floor are
    excluded exactly as in ``penalty``.
    """
    deltas = np.asarray(deltas, dtype=np.float64)
    grad = np.zeros_like(params.w_rec)
    report = penalty(params, traj, deltas)
    for k in list(report.per_k):
        r = deltas[k + 1]
        r_norm = float(np.linalg.norm(r))
        z, d = _transported(params, traj.states[k], r)
        z_norm = float(np.linalg.norm(z))
        if z_norm == 0.0:
            report.skipped.append(k)
            continue
        coef = 2.0 * (report.ratios[k] - 1.0) / (r_norm * z_norm)
        grad += coef * np.outer(z * d, r)
    return grad, report


def penalty_batch(params: RnnParams, btraj: BatchTrajectory, deltas
                  ) -> tuple[float, float, np.ndarray]:
    """Batched penalty value, mean ratio, and immediate w_rec gradient.

    deltas: (T+1, B, n) per-sample accumulated error rows. The penalty is
    computed per sample and averaged, matching the loss convention.
    Returns (mean penalty, mean ratio over included terms, mean gradient).
    All k = 1..T-1 terms are folded into two matrix products.
    """
    T, B = btraj.T, btraj.batch
    n = params.n
    if T < 2:
        return 0.0, 0.0, np.zeros_like(params.w_rec)
    r = deltas[2:T + 1].reshape(-1, n)            # rows: (k, sample), k = 1..T-1
    d = btraj.act_deriv[1:T].reshape(-1, n)
    z = (r @ params.w_rec.T) * d
    r_norm = np.sqrt((r * r).sum(axis=1))
    z_norm = np.sqrt((z * z).sum(axis=1))
    live = r_norm >= SIGNAL_FLOOR
    if not np.any(live):
        return 0.0, 0.0, np.zeros_like(params.w_rec)
    ratio = np.zeros(r.shape[0])
    ratio[live] = z_norm[live] / r_norm[live]
    total = float(((ratio[live] - 1.0) ** 2).sum())
    mean_ratio = float(ratio[live].mean())
    ok = live & (z_norm > 0.0)
    coef = np.zeros(r.shape[0])
    coef[ok] = 2.0 * (ratio[ok] - 1.0) / (r_norm[ok] * z_norm[ok])
    grad = (z * d * coef[:, None]).T @ r
    return total / B, mean_ratio, grad / B
