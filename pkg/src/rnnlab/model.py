"""Vanilla recurrent network with a linear readout on the activated state.

State update (states are row vectors, weights act by right multiplication):

    x_t = sigma(x_{t-1}) @ w_rec + u_t @ w_in + b

so ``x_t`` is a pre-activation and the one-step state Jacobian is
``w_rec.T * sigma'(x_{t-1})`` (see grad.step_jacobian). ``w_rec[i, j]`` is
the connection from unit i to unit j, ``w_in`` is (input_dim, n) and the
readout ``y = sigma(x) @ w_out + b_out`` sees bounded features.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.special import expit

from . import linalg


class NonFiniteStateError(FloatingPointError):
    """Forward pass produced a NaN/Inf state; carries the offending step."""

    def __init__(self, step: int):
        super().__init__(f"non-finite state at step {step}")
        self.step = step


@dataclass(frozen=True)
class Activation:
    """Elementwise nonlinearity with a global bound on |sigma'|."""

    kind: str  # tanh | sigmoid | identity

    def __post_init__(self):
        if self.kind not in ("tanh", "sigmoid", "identity"):
            raise ValueError(f"unknown activation {self.kind!r}")

    @property
    def slope_bound(self) -> float:
        """Tight upper bound on |sigma'(x)|: 1 for tanh/identity, 1/4 for sigmoid."""
        return 0.25 if self.kind == "sigmoid" else 1.0

    def apply(self, x):
        if self.kind == "tanh":
            return np.tanh(x)
        if self.kind == "sigmoid":
            return expit(x)
        return np.asarray(x, dtype=np.float64)

    def derivative(self, x):
        if self.kind == "tanh":
            t = np.tanh(x)
            return 1.0 - t * t
        if self.kind == "sigmoid":
            s = expit(x)
            return s * (1.0 - s)
        return np.ones_like(np.asarray(x, dtype=np.float64))


TANH = Activation("tanh")
SIGMOID = Activation("sigmoid")
IDENTITY = Activation("identity")


@dataclass(frozen=True)
class RnnParams:
    w_rec: np.ndarray   # (n, n), unit i -> unit j
    w_in: np.ndarray    # (m, n)
    b: np.ndarray       # (n,)
    w_out: np.ndarray   # (n, o)
    b_out: np.ndarray   # (o,)
    activation: Activation

    def __post_init__(self):
        n = self.w_rec.shape[0]
        if self.w_rec.shape != (n, n):
            raise ValueError(f"w_rec must be square, got {self.w_rec.shape}")
        if self.w_in.ndim != 2 or self.w_in.shape[1] != n:
            raise ValueError(f"w_in must be (m, {n}), got {self.w_in.shape}")
        if self.b.shape != (n,):
            raise ValueError(f"b must be ({n},), got {self.b.shape}")
        if self.w_out.ndim != 2 or self.w_out.shape[0] != n:
            raise ValueError(f"w_out must be ({n}, o), got {self.w_out.shape}")
        if self.b_out.shape != (self.w_out.shape[1],):
            raise ValueError(f"b_out must be ({self.w_out.shape[1]},), got {self.b_out.shape}")
        for name in ("w_rec", "w_in", "b", "w_out", "b_out"):
            linalg.require_finite(getattr(self, name), name)

    @property
    def n(self) -> int:
        return self.w_rec.shape[0]

    @property
    def m(self) -> int:
        return self.w_in.shape[0]

    @property
    def o(self) -> int:
        return self.w_out.shape[1]

    def blocks(self) -> tuple[np.ndarray, ...]:
        return (self.w_rec, self.w_in, self.b, self.w_out, self.b_out)

    def with_blocks(self, blocks) -> "RnnParams":
        w_rec, w_in, b, w_out, b_out = blocks
        return replace(self, w_rec=w_rec, w_in=w_in, b=b, w_out=w_out, b_out=b_out)


def init_params(n: int, m: int, o: int, activation: Activation = TANH,
                rng_seed: int = 0) -> RnnParams:
    """All weights Normal(0, std 0.1), biases zero, deterministic per seed."""
    if min(n, o) <= 0 or m < 0:
        raise ValueError("dimensions must be positive (m may be zero)")
    rng = np.random.default_rng(rng_seed)
    return RnnParams(
        w_rec=rng.normal(0.0, 0.1, (n, n)),
        w_in=rng.normal(0.0, 0.1, (m, n)),
        b=np.zeros(n),
        w_out=rng.normal(0.0, 0.1, (n, o)),
        b_out=np.zeros(o),
        activation=activation,
    )


@dataclass(frozen=True)
class Trajectory:
    """One forward pass: inputs (T, m) and states x_0..x_T as rows of (T+1, n)."""

    inputs: np.ndarray
    states: np.ndarray

    @property
    def T(self) -> int:
        return self.states.shape[0] - 1

    def state(self, t: int) -> np.ndarray:
        return self.states[t]


def forward(params: RnnParams, x0, inputs) -> Trajectory:
    """Run the recurrence from x0 over the given input rows."""
    x0 = linalg.as_vector(x0)
    if x0.shape[0] != params.n:
        raise linalg.DimensionError(f"x0 has length {x0.shape[0]}, expected {params.n}")
    u = np.asarray(inputs, dtype=np.float64)
    if u.ndim != 2 or u.shape[1] != params.m:
        raise linalg.DimensionError(f"inputs must be (T, {params.m}), got {u.shape}")
    T = u.shape[0]
    states = np.empty((T + 1, params.n))
    states[0] = x0
    act = params.activation
    x = x0
    for t in range(1, T + 1):
        x = act.apply(x) @ params.w_rec + u[t - 1] @ params.w_in + params.b
        if not np.all(np.isfinite(x)):
            raise NonFiniteStateError(t)
        states[t] = x
    return Trajectory(inputs=u, states=states)


@dataclass(frozen=True)
class BatchTrajectory:
    """Batched forward cache: states (T+1, B, n) with sigma(x) and sigma'(x)."""

    inputs: np.ndarray      # (T, B, m)
    states: np.ndarray      # (T+1, B, n)
    act_states: np.ndarray  # sigma(states)
    act_deriv: np.ndarray   # sigma'(states)

    @property
    def T(self) -> int:
        return self.states.shape[0] - 1

    @property
    def batch(self) -> int:
        return self.states.shape[1]


def forward_batch(params: RnnParams, x0, inputs) -> BatchTrajectory:
    """Batched forward pass; inputs (T, B, m), x0 (B, n) or a single row."""
    u = np.asarray(inputs, dtype=np.float64)
    if u.ndim != 3 or u.shape[2] != params.m:
        raise linalg.DimensionError(f"inputs must be (T, B, {params.m}), got {u.shape}")
    T, B, _ = u.shape
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.ndim == 1:
        x0 = np.broadcast_to(x0, (B, params.n)).copy()
    if x0.shape != (B, params.n):
        raise linalg.DimensionError(f"x0 must be (B, {params.n}), got {x0.shape}")
    act = params.activation
    states = np.empty((T + 1, B, params.n))
    act_states = np.empty_like(states)
    act_deriv = np.empty_like(states)
    states[0] = x0
    act_states[0] = act.apply(x0)
    act_deriv[0] = act.derivative(x0)
    for t in range(1, T + 1):
        x = act_states[t - 1] @ params.w_rec + u[t - 1] @ params.w_in + params.b
        states[t] = x
        act_states[t] = act.apply(x)
        act_deriv[t] = act.derivative(x)
    if not np.all(np.isfinite(states)):
        bad = int(np.argmin(np.isfinite(states).all(axis=(1, 2))))
        raise NonFiniteStateError(bad)
    return BatchTrajectory(inputs=u, states=states, act_states=act_states,
                           act_deriv=act_deriv)


def readout(params: RnnParams, x_t) -> np.ndarray:
    """y = sigma(x_t) @ w_out + b_out, summed in a fixed left-to-right order."""
    x_t = linalg.as_vector(x_t)
    if x_t.shape[0] != params.n:
        raise linalg.DimensionError(f"state has length {x_t.shape[0]}, expected {params.n}")
    return linalg.matvec(params.w_out.T, params.activation.apply(x_t)) + params.b_out


# ---------------------------------------------------------------------------
# losses

LOSS_KINDS = ("xent_final", "xent_per_step", "mse_final")


@dataclass(frozen=True)
class LossSpec:
    """Which criterion scores the readout and at which steps.

    kind 'xent_final'    softmax cross-entropy, one scored step (the last)
    kind 'xent_per_step' softmax cross-entropy at every scored step
    kind 'mse_final'     squared error, one scored step (the last)

    The scored steps themselves live on the task sample; absent steps
    contribute zero so the total decomposes as a sum over scored steps.
    """

    kind: str

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")

    @property
    def is_classification(self) -> bool:
        return self.kind.startswith("xent")


def _softmax(y: np.ndarray) -> np.ndarray:
    z = y - y.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def loss(spec: LossSpec, outputs, targets) -> tuple[float, np.ndarray]:
    """Total loss over scored outputs and its derivative w.r.t. each output row.

    outputs: (k, o) readout values at the scored steps.
    targets: (k,) integer labels for cross-entropy, (k, o) values for
    squared error. Returns (E, dE_dy with shape (k, o)).
    """
    y = np.atleast_2d(np.asarray(outputs, dtype=np.float64))
    if spec.is_classification:
        labels = np.asarray(targets)
        if labels.ndim != 1 or labels.shape[0] != y.shape[0]:
            raise ValueError("labels must be one per scored output")
        if labels.min(initial=0) < 0 or labels.max(initial=-1) >= y.shape[1]:
            raise ValueError(f"label out of range for {y.shape[1]} classes")
        p = _softmax(y)
        picked = p[np.arange(y.shape[0]), labels]
        total = float(-np.log(np.maximum(picked, 1e-300)).sum())
        de_dy = p.copy()
        de_dy[np.arange(y.shape[0]), labels] -= 1.0
        return total, de_dy
    t = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if t.shape != y.shape:
        raise ValueError(f"target shape {t.shape} != output shape {y.shape}")
    diff = y - t
    return float((diff * diff).sum()), 2.0 * diff


def error_signals(params: RnnParams, traj: Trajectory, spec: LossSpec,
                  scored_steps, targets) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss plus its immediate derivatives at each scored state.

    Returns (E, dE_dx, dE_dy_full) where dE_dx[t] is the derivative of E
    w.r.t. x_t through the readout only (zero at unscored steps) and
    dE_dy_full[t] the derivative w.r.t. the readout output at step t.
    Both have T+1 rows so indices align with traj.states.
    """
    scored = list(scored_steps)
    if any(t < 1 or t > traj.T for t in scored):
        raise ValueError(f"scored steps {scored} outside 1..{traj.T}")
    outputs = np.stack([readout(params, traj.states[t]) for t in scored])
    total, de_dy = loss(spec, outputs, targets)
    dE_dx = np.zeros_like(traj.states)
    dE_dy_full = np.zeros((traj.T + 1, params.o))
    act = params.activation
    for row, t in enumerate(scored):
        dE_dy_full[t] += de_dy[row]
        dE_dx[t] += (de_dy[row] @ params.w_out.T) * act.derivative(traj.states[t])
    return total, dE_dx, dE_dy_full


# ---------------------------------------------------------------------------
# checkpoints

def save_checkpoint(params: RnnParams, path, seed: int | None = None) -> None:
    """Single JSON document; floats serialize with full round-trip precision."""
    doc = {
        "n": params.n,
        "m": params.m,
        "o": params.o,
        "activation": params.activation.kind,
        "seed": seed,
        "w_rec": params.w_rec.tolist(),
        "w_in": params.w_in.tolist(),
        "b": params.b.tolist(),
        "w_out": params.w_out.tolist(),
        "b_out": params.b_out.tolist(),
    }
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path) -> tuple[RnnParams, dict]:
    doc = json.loads(Path(path).read_text())
    params = RnnParams(
        w_rec=np.array(doc["w_rec"], dtype=np.float64),
        w_in=np.array(doc["w_in"], dtype=np.float64).reshape(doc["m"], doc["n"]),
        b=np.array(doc["b"], dtype=np.float64),
        w_out=np.array(doc["w_out"], dtype=np.float64).reshape(doc["n"], doc["o"]),
        b_out=np.array(doc["b_out"], dtype=np.float64),
        activation=Activation(doc["activation"]),
    )
    return params, {"seed": doc.get("seed")}
