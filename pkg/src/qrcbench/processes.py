"""Causal Bernoulli-shift input/target processes with closed-form constants.

Innovations are i.i.d. uniform on ``[-M_xi, M_xi]``.  The input is a clipped
affine image of a geometrically weighted causal filter,

    V_t = clip(scale * sum_j lambda_v^j xi_{t-j} + shift, lo, hi),

and the target is ``Y_t = y_scale * sum_j lambda_y^j xi_{t-j-delay}``, built
from the same innovations unless ``independent_target`` is set.  Series are
stored oldest first, so index ``-1`` is time ``t = 0``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channels import InputDomain

TRUNCATION_TOL = 1e-12


def truncation_length(lam: float, tol: float = TRUNCATION_TOL) -> int:
    """Smallest ``J`` with ``lam^J <= tol``; the filter sums ``j = 0..J``."""
    return max(1, math.ceil(math.log(tol) / math.log(lam)))


@dataclass(frozen=True)
class ProcessSpec:
    lambda_v: float
    lambda_y: float
    m_xi: float
    lo: float
    hi: float
    scale: float
    shift: float
    delay: int = 0
    y_scale: float = 1.0
    independent_target: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("lambda_v", "lambda_y"):
            lam = getattr(self, name)
            if not 0.0 < lam < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {lam}")
        if self.m_xi <= 0:
            raise ValueError("innovation bound M_xi must be positive")
        if self.delay < 0:
            raise ValueError("delay must be nonnegative")
        if not self.lo < self.hi:
            raise ValueError("empty input domain")

    @property
    def trunc_v(self) -> int:
        return truncation_length(self.lambda_v)

    @property
    def trunc_y(self) -> int:
        return truncation_length(self.lambda_y)

    @property
    def history(self) -> int:
        """Innovations needed before the first emitted time step."""
        return max(self.trunc_v, self.trunc_y + self.delay)


def fit_process(
    domain: InputDomain,
    lambda_v: float = 0.5,
    lambda_y: float = 0.5,
    m_xi: float = 1.0,
    **kwargs,
) -> ProcessSpec:
    """Spec whose affine map sends the filter's full range onto ``domain`` (no clipping)."""
    half_width = 0.5 * domain.width
    scale = half_width * (1.0 - lambda_v) / m_xi
    shift = 0.5 * (domain.lo + domain.hi)
    return ProcessSpec(lambda_v, lambda_y, m_xi, domain.lo, domain.hi, scale, shift, **kwargs)


@dataclass(frozen=True)
class ProcessConstants:
    l_v: float
    l_y: float
    d_wv: float
    d_wy: float
    c_v: float
    c_y: float
    w1_v: float
    w1_y: float
    e_xi: float
    m_xi: float


def process_constants(spec: ProcessSpec) -> ProcessConstants:
    """Distributional constants for geometric weights ``w_j = lambda^j``.

    ``D_w = lambda``, ``||w||_1 = 1 / (1 - lambda)``, ``E|xi_0| = M_xi / 2`` and
    ``C_I = 2 L_I E|xi_0| / (1 - D_w)``.  A target delay shifts the weights, so
    ``L_y = |y_scale| lambda_y^{-delay}``.
    """
    e_xi = spec.m_xi / 2.0
    l_v = abs(spec.scale)
    l_y = abs(spec.y_scale) * spec.lambda_y ** (-spec.delay)
    return ProcessConstants(
        l_v=l_v,
        l_y=l_y,
        d_wv=spec.lambda_v,
        d_wy=spec.lambda_y,
        c_v=2.0 * l_v * e_xi / (1.0 - spec.lambda_v),
        c_y=2.0 * l_y * e_xi / (1.0 - spec.lambda_y),
        w1_v=1.0 / (1.0 - spec.lambda_v),
        w1_y=1.0 / (1.0 - spec.lambda_y),
        e_xi=e_xi,
        m_xi=spec.m_xi,
    )


@dataclass(frozen=True)
class GeneratedSeries:
    v: np.ndarray
    y: np.ndarray
    xi_v: np.ndarray
    xi_y: np.ndarray

    def __len__(self) -> int:
        return len(self.v)

    @property
    def times(self) -> np.ndarray:
        return np.arange(-(len(self.v) - 1), 1)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "v", "y"])
            for t, v, y in zip(self.times, self.v, self.y):
                writer.writerow([int(t), repr(float(v)), repr(float(y))])


def _filters(spec: ProcessSpec, xi_v: np.ndarray, xi_y: np.ndarray, length: int):
    """Apply both causal filters along the last axis of innovation arrays."""
    hist = spec.history
    kv = spec.lambda_v ** np.arange(spec.trunc_v + 1)
    ky = spec.lambda_y ** np.arange(spec.trunc_y + 1)

    def causal(x: np.ndarray, kernel: np.ndarray, lag: int) -> np.ndarray:
        # out[t] = sum_j kernel[j] * x[hist + t - j - lag]
        out = np.zeros(x.shape[:-1] + (length,))
        for j, kj in enumerate(kernel):
            start = hist - j - lag
            out += kj * x[..., start : start + length]
        return out

    raw_v = causal(xi_v, kv, 0)
    v = np.clip(spec.scale * raw_v + spec.shift, spec.lo, spec.hi)
    y = spec.y_scale * causal(xi_y, ky, spec.delay)
    return v, y


def _innovations(spec: ProcessSpec, rng: np.random.Generator, shape: tuple[int, ...]):
    xi_v = rng.uniform(-spec.m_xi, spec.m_xi, size=shape)
    xi_y = rng.uniform(-spec.m_xi, spec.m_xi, size=shape) if spec.independent_target else xi_v
    return xi_v, xi_y


def generate_series(spec: ProcessSpec, length: int, seed: int | None = None) -> GeneratedSeries:
    if length < 1:
        raise ValueError("series length must be positive")
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    xi_v, xi_y = _innovations(spec, rng, (spec.history + length,))
    v, y = _filters(spec, xi_v, xi_y, length)
    return GeneratedSeries(v, y, xi_v, xi_y)


def derived_seed(seed: int, j: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, j])


def ghost_samples(spec: ProcessSpec, k: int, length: int, seed: int) -> list[GeneratedSeries]:
    """``k`` independent copies of the process, copy ``j`` seeded from ``(seed, j)``."""
    if k < 2:
        raise ValueError(f"need at least two ghost samples, got k={k}")
    return [generate_series(spec, length, derived_seed(seed, j)) for j in range(k)]


def sample_batch(
    spec: ProcessSpec, batch: int, length: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """``batch`` independent series at once; returns ``(v, y)`` of shape ``(batch, length)``."""
    xi_v, xi_y = _innovations(spec, rng, (batch, spec.history + length))
    return _filters(spec, xi_v, xi_y, length)
