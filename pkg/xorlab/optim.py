"""
Adam optimizer, initialization policy and the per-trial random streams.

Each trial draws from its own generator: a Philox counter-based bit generator
seeded by ``SeedSequence([seed, trial_index])``. Trials therefore never share
state and can run in any order or in parallel.
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .config import DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPS, DEFAULT_WEIGHT_BOUND
from .models import ArchKind, ModelArch, ModelParams

QUADRANT_SIGNS = {
    1: (1.0, 1.0),
    2: (-1.0, 1.0),
    3: (-1.0, -1.0),
    4: (1.0, -1.0),
}

# Quadrant draws keep this distance from both axes
QUADRANT_AXIS_BAND = 0.05

U64_MAX = 2**64 - 1


class AdamConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    beta1: float = Field(DEFAULT_BETA1, gt=0.0, lt=1.0)
    beta2: float = Field(DEFAULT_BETA2, gt=0.0, lt=1.0)
    eps: float = Field(DEFAULT_EPS, gt=0.0)


@dataclass(frozen=True)
class AdamState:
    m: tuple[float, ...]
    v: tuple[float, ...]
    t: int
    lr: float
    beta1: float = DEFAULT_BETA1
    beta2: float = DEFAULT_BETA2
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if len(self.m) != len(self.v):
            raise ValueError("First and second moment vectors differ in length")
        if self.t < 0:
            raise ValueError(f"Step counter must be >= 0, got {self.t}")
        if not (self.lr > 0.0 and math.isfinite(self.lr)):
            raise ValueError(f"Learning rate must be finite and positive, got {self.lr}")

    @classmethod
    def zeros(cls, n_params: int, lr: float, config: AdamConfig | None = None) -> "AdamState":
        config = config or AdamConfig()
        zeros = (0.0,) * n_params
        return cls(zeros, zeros, 0, lr, config.beta1, config.beta2, config.eps)


def adam_step(state: AdamState, params: ModelParams, grad: Sequence[float]) -> tuple[AdamState, ModelParams]:
    """One bias-corrected Adam update; returns new state and params, inputs untouched"""
    n = len(params.theta)
    if len(grad) != n or len(state.m) != n:
        raise ValueError(
            f"Dimension mismatch: {n} parameters, {len(grad)} gradients, {len(state.m)} moments"
        )

    b1, b2, eps, lr = state.beta1, state.beta2, state.eps, state.lr
    t = state.t + 1
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t

    m_new = []
    v_new = []
    theta_new = []
    for theta, m, v, g in zip(params.theta, state.m, state.v, grad):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        m_new.append(m)
        v_new.append(v)
        theta_new.append(theta - lr * (m / bc1) / (math.sqrt(v / bc2) + eps))

    new_state = AdamState(tuple(m_new), tuple(v_new), t, lr, b1, b2, eps)
    return new_state, ModelParams(params.arch, tuple(theta_new))


class InitPolicy(BaseModel):
    """Weights i.i.d. uniform on [-bound, bound]; biases and the PReLU slope start fixed"""

    model_config = ConfigDict(frozen=True)

    seed: int = Field(0, ge=0, le=U64_MAX)
    stream: int = Field(0, ge=0)
    weight_bound: float = Field(DEFAULT_WEIGHT_BOUND, gt=0.0)
    bias_init: float = 0.0
    slope_init: float = 0.0

    @field_validator("weight_bound", "bias_init", "slope_init")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value


def trial_stream(seed: int, trial_index: int = 0) -> np.random.Generator:
    """Independent generator for one trial, keyed on (seed, trial_index)"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial_index])))


def _fixed_theta(arch: ModelArch, policy: InitPolicy) -> list[float]:
    theta = [policy.bias_init] * arch.n_params
    if arch.slope_index is not None:
        theta[arch.slope_index] = policy.slope_init
    return theta


def init_params(arch: ModelArch, policy: InitPolicy) -> ModelParams:
    rng = trial_stream(policy.seed, policy.stream)
    theta = _fixed_theta(arch, policy)
    indices = arch.weight_indices
    draws = rng.uniform(-policy.weight_bound, policy.weight_bound, size=len(indices))
    for index, value in zip(indices, draws):
        theta[index] = float(value)
    return ModelParams(arch, tuple(theta))


def init_params_in_quadrant(arch: ModelArch, quadrant: int, policy: InitPolicy) -> ModelParams:
    """
    Draw (w1, w2) inside one open quadrant of the weight plane

    Each coordinate's magnitude is uniform on (band, weight_bound]; quadrants are
    numbered counter-clockwise from (+, +).
    """
    if arch.kind is not ArchKind.PRELU_NEURON:
        raise ValueError(f"Quadrant initialization needs a PReLU neuron, got {arch.kind.value}")
    if quadrant not in QUADRANT_SIGNS:
        raise ValueError(f"Quadrant must be 1..4, got {quadrant}")
    if policy.weight_bound <= QUADRANT_AXIS_BAND:
        raise ValueError(f"weight_bound must exceed the axis band {QUADRANT_AXIS_BAND}")

    rng = trial_stream(policy.seed, policy.stream)
    width = policy.weight_bound - QUADRANT_AXIS_BAND
    # uniform draws lie in [0, width), so magnitudes lie in (band, bound]
    magnitudes = policy.weight_bound - rng.uniform(0.0, width, size=2)
    s1, s2 = QUADRANT_SIGNS[quadrant]

    theta = _fixed_theta(arch, policy)
    theta[0] = s1 * float(magnitudes[0])
    theta[1] = s2 * float(magnitudes[1])
    return ModelParams(arch, tuple(theta))
