"""Seeded generators for six synthetic long-memory problems.

Steps are 1-based: input row t-1 drives the transition into state x_t, and
``scored_steps`` index states/readouts the loss sees. ``eval_steps`` are the
positions a test-time prediction is judged on (for next-symbol prediction
only the final position is predictable, so only it is judged).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .model import LossSpec

KINDS = ("addition", "multiplication", "temporal_order", "temporal_order_3bit",
         "random_permutation", "noiseless_memorization")

MEMORIZATION_VARIANTS = ((5, 2), (10, 5))


@dataclass(frozen=True)
class TaskSpec:
    kind: str
    T: int
    pattern_len: int = 5   # noiseless_memorization only
    symbols: int = 2       # noiseless_memorization only
    rng_seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown task kind {self.kind!r}")
        if self.T < 10:
            raise ValueError("T must be at least 10")
        if self.kind == "noiseless_memorization":
            if (self.pattern_len, self.symbols) not in MEMORIZATION_VARIANTS:
                raise ValueError(
                    f"unsupported memorization variant {(self.pattern_len, self.symbols)}; "
                    f"supported: {MEMORIZATION_VARIANTS}")
        elif (self.pattern_len, self.symbols) != (5, 2):
            raise ValueError(f"pattern_len/symbols only apply to noiseless_memorization")


@dataclass(frozen=True)
class TaskSample:
    kind: str
    inputs: np.ndarray          # (T_realized, input_dim)
    scored_steps: list[int]     # 1-based steps that contribute loss
    targets: np.ndarray         # int labels (k,) or float values (k, o)
    eval_steps: list[int]       # subset judged at test time
    T: int                      # nominal length the generator was asked for

    @property
    def T_realized(self) -> int:
        return self.inputs.shape[0]


def input_dim(spec: TaskSpec) -> int:
    return {"addition": 2, "multiplication": 2, "temporal_order": 6,
            "temporal_order_3bit": 6, "random_permutation": 100,
            "noiseless_memorization": spec.symbols + 2}[spec.kind]


def output_dim(spec: TaskSpec) -> int:
    return {"addition": 1, "multiplication": 1, "temporal_order": 4,
            "temporal_order_3bit": 8, "random_permutation": 100,
            "noiseless_memorization": spec.symbols}[spec.kind]


def loss_spec(spec: TaskSpec) -> LossSpec:
    kind = {"addition": "mse_final", "multiplication": "mse_final",
            "temporal_order": "xent_final", "temporal_order_3bit": "xent_final",
            "random_permutation": "xent_per_step",
            "noiseless_memorization": "xent_per_step"}[spec.kind]
    return LossSpec(kind)


def is_regression(kind: str) -> bool:
    return kind in ("addition", "multiplication")


# ---------------------------------------------------------------------------
# generators

def _marked_pair(T: int, rng: np.random.Generator):
    """Length draw plus the two marked positions shared by addition/multiplication."""
    if T < 10:
        raise ValueError("T must be at least 10")
    T_real = int(rng.integers(T, 11 * T // 10 + 1))
    values = rng.random(T_real)
    i = int(rng.integers(1, T_real // 10 + 1))
    j = i
    while j == i:
        j = int(rng.integers(T_real // 10, T_real // 2 + 1))
    marker = np.zeros(T_real)
    marker[i - 1] = 1.0
    marker[j - 1] = 1.0
    inputs = np.column_stack([values, marker])
    return T_real, values, i, j, inputs


def gen_addition(T: int, rng: np.random.Generator) -> TaskSample:
    """Two marked values in a noise stream; predict their mean at the end."""
    T_real, values, i, j, inputs = _marked_pair(T, rng)
    target = (values[i - 1] + values[j - 1]) / 2.0
    return TaskSample("addition", inputs, [T_real], np.array([[target]]),
                      [T_real], T)


def gen_multiplication(T: int, rng: np.random.Generator) -> TaskSample:
    """Same layout as addition; the target is the product of the marked values."""
    T_real, values, i, j, inputs = _marked_pair(T, rng)
    target = values[i - 1] * values[j - 1]
    return TaskSample("multiplication", inputs, [T_real], np.array([[target]]),
                      [T_real], T)


def _one_hot(ids: np.ndarray, width: int) -> np.ndarray:
    out = np.zeros((ids.shape[0], width))
    out[np.arange(ids.shape[0]), ids] = 1.0
    return out


def gen_temporal_order(T: int, rng: np.random.Generator) -> TaskSample:
    """Classify the ordered pair of the two non-distractor symbols.

    Channels 0..1 are the informative symbols, 2..5 the distractors; the
    class index is row-major over (first, second).
    """
    if T < 10:
        raise ValueError("T must be at least 10")
    p1 = int(rng.integers(T // 10, 2 * T // 10 + 1))
    p2 = int(rng.integers(4 * T // 10, 5 * T // 10 + 1))
    s1 = int(rng.integers(0, 2))
    s2 = int(rng.integers(0, 2))
    ids = rng.integers(2, 6, size=T)
    ids[p1 - 1] = s1
    ids[p2 - 1] = s2
    return TaskSample("temporal_order", _one_hot(ids, 6), [T],
                      np.array([2 * s1 + s2]), [T], T)


def gen_temporal_order_3bit(T: int, rng: np.random.Generator) -> TaskSample:
    """Three informative symbols, eight classes, row-major encoding."""
    if T < 10:
        raise ValueError("T must be at least 10")
    p1 = int(rng.integers(T // 10, 2 * T // 10 + 1))
    p2 = int(rng.integers(3 * T // 10, 4 * T // 10 + 1))
    p3 = int(rng.integers(6 * T // 10, 7 * T // 10 + 1))
    s = [int(rng.integers(0, 2)) for _ in range(3)]
    ids = rng.integers(2, 6, size=T)
    for p, sym in zip((p1, p2, p3), s):
        ids[p - 1] = sym
    label = 4 * s[0] + 2 * s[1] + s[2]
    return TaskSample("temporal_order_3bit", _one_hot(ids, 6), [T],
                      np.array([label]), [T], T)


def gen_random_permutation(T: int, rng: np.random.Generator) -> TaskSample:
    """Next-symbol prediction over 100 symbols; only the last one is predictable.

    The first and last position share one symbol from {1, 2} (channels 0/1);
    every middle position is uniform over symbols 3..100.
    """
    if T < 10:
        raise ValueError("T must be at least 10")
    shared = int(rng.integers(0, 2))          # channel for symbol 1 or 2
    ids = np.empty(T, dtype=np.int64)
    ids[0] = shared
    ids[1:-1] = rng.integers(2, 100, size=T - 2)
    ids[-1] = shared
    scored = list(range(1, T))                # predict ids[t] from step t
    targets = ids[1:].copy()
    return TaskSample("random_permutation", _one_hot(ids, 100), scored,
                      targets, [T - 1], T)


def gen_noiseless_memorization(T: int, rng: np.random.Generator,
                               pattern_len: int = 5, symbols: int = 2) -> TaskSample:
    """Reproduce an initial pattern after a long constant-input delay.

    Input layout (channels: ``symbols`` pattern channels, then filler, then
    cue): pattern_len one-hot pattern steps, exactly T filler steps, and a
    one-step cue that fires at emission start so the last pattern_len steps
    of the sequence are the scored emission steps.
    """
    if (pattern_len, symbols) not in MEMORIZATION_VARIANTS:
        raise ValueError(f"unsupported memorization variant {(pattern_len, symbols)}")
    if T < 10:
        raise ValueError("T must be at least 10")
    pattern = rng.integers(0, symbols, size=pattern_len)
    total = pattern_len + T + 1
    cue_step = total - pattern_len + 1
    filler_ch, cue_ch = symbols, symbols + 1
    inputs = np.zeros((total, symbols + 2))
    inputs[np.arange(pattern_len), pattern] = 1.0
    inputs[pattern_len:, filler_ch] = 1.0
    inputs[cue_step - 1, filler_ch] = 0.0
    inputs[cue_step - 1, cue_ch] = 1.0
    scored = list(range(cue_step, total + 1))
    return TaskSample("noiseless_memorization", inputs, scored, pattern.copy(),
                      scored, T)


_GENERATORS = {
    "addition": gen_addition,
    "multiplication": gen_multiplication,
    "temporal_order": gen_temporal_order,
    "temporal_order_3bit": gen_temporal_order_3bit,
    "random_permutation": gen_random_permutation,
}


def generate(spec: TaskSpec, rng: np.random.Generator) -> TaskSample:
    if spec.kind == "noiseless_memorization":
        return gen_noiseless_memorization(spec.T, rng, spec.pattern_len, spec.symbols)
    return _GENERATORS[spec.kind](spec.T, rng)


def sample_stream(spec: TaskSpec, seed: int | None = None) -> Iterator[TaskSample]:
    """Infinite deterministic stream; same (spec, seed) yields identical samples."""
    rng = np.random.default_rng(spec.rng_seed if seed is None else seed)
    while True:
        yield generate(spec, rng)


def make_test_set(spec: TaskSpec, count: int, seed: int) -> list[TaskSample]:
    rng = np.random.default_rng(seed)
    return [generate(spec, rng) for _ in range(count)]


# ---------------------------------------------------------------------------
# JSON-lines dataset serialization

def sample_to_json(sample: TaskSample) -> dict:
    target = sample.targets.tolist()
    return {"kind": sample.kind, "T": sample.T, "T_realized": sample.T_realized,
            "inputs": sample.inputs.tolist(), "target": target,
            "scored_steps": sample.scored_steps, "eval_steps": sample.eval_steps}


def sample_from_json(doc: dict) -> TaskSample:
    targets = np.array(doc["target"])
    if not is_regression(doc["kind"]):
        targets = targets.astype(np.int64)
    return TaskSample(doc["kind"], np.array(doc["inputs"], dtype=np.float64),
                      list(doc["scored_steps"]), targets,
                      list(doc["eval_steps"]), doc["T"])
