"""Reservoir functionals, risks, readout training and Monte-Carlo Rademacher complexity.

The infinite input history is replaced by a washout: starting from the
maximally mixed state, ``washout_length(r, tol)`` steps bring any two initial
states within ``tol`` of each other in Schatten-2 norm.  Zero-padded
subsequences are realised by first running the washout on zero inputs.

Batched evolution works on column-stacked state vectors using the affine
decomposition ``T̂(v) = S_const + v S_slope`` every channel provides.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg as la
from .channels import QuantumChannel
from .processes import ProcessSpec, sample_batch, GeneratedSeries
from .readouts import PolynomialReadout, enumerate_monomials, monomial_features, z_signs

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LossFunction:
    """``loss(yhat, y) = f(yhat - y)`` with ``f(0) = 0`` and ``f`` ``L_ell``-Lipschitz."""

    kind: str = "absolute"
    delta: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("absolute", "huber"):
            raise ValueError(f"unknown loss {self.kind!r}")
        if self.delta <= 0:
            raise ValueError("huber delta must be positive")

    @property
    def l_ell(self) -> float:
        return 1.0 if self.kind == "absolute" else self.delta

    def __call__(self, yhat, y):
        x = np.abs(np.asarray(yhat, dtype=float) - np.asarray(y, dtype=float))
        if self.kind == "absolute":
            return x
        return np.where(x <= self.delta, 0.5 * x**2, self.delta * (x - 0.5 * self.delta))


def washout_length(r: float, tol: float) -> int:
    """Steps ``t`` with ``r^t sqrt(2) <= tol``; ``sqrt(2)`` bounds any state distance."""
    if not 0.0 < r < 1.0:
        raise ValueError(f"contraction constant must lie in (0, 1), got {r}")
    if not 0.0 < tol:
        raise ValueError("tolerance must be positive")
    if tol >= math.sqrt(2.0):
        return 1
    return max(1, math.ceil((math.log(tol) - math.log(math.sqrt(2.0))) / math.log(r)))


def _check_inputs(channel: QuantumChannel, inputs: Sequence[float]) -> None:
    for v in inputs:
        if not channel.admits(float(v)):
            raise ValueError(f"input {v} not admissible for {channel!r}")


def trajectory(
    channel: QuantumChannel, inputs: Sequence[float], rho_init: np.ndarray | None = None
) -> list[np.ndarray]:
    """States ``rho_init, T(v_1, rho_init), ...`` of the left-to-right fold."""
    _check_inputs(channel, inputs)
    rho = la.maximally_mixed(channel.n) if rho_init is None else np.asarray(rho_init, dtype=complex)
    states = [rho]
    for v in inputs:
        rho = channel.apply(float(v), rho)
        states.append(rho)
    return states


def evolve(
    channel: QuantumChannel, inputs: Sequence[float], rho_init: np.ndarray | None = None
) -> np.ndarray:
    return trajectory(channel, inputs, rho_init)[-1]


def initial_vec(n: int, batch: int | None = None) -> np.ndarray:
    x = la.vec(la.maximally_mixed(n))
    return x if batch is None else np.tile(x, (batch, 1))


def evolve_batch(
    channel: QuantumChannel, inputs: np.ndarray, x0: np.ndarray | None = None
) -> np.ndarray:
    """Evolve a batch of vectorised states through input rows ``inputs[b, t]``.

    Returns the final vectorised states, shape ``(batch, d^2)``.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    const, slope = channel.affine_superoperators()
    const_t, slope_t = const.T.copy(), slope.T.copy()
    x = initial_vec(channel.n, inputs.shape[0]) if x0 is None else np.array(x0, dtype=complex)
    for t in range(inputs.shape[1]):
        x = x @ const_t + inputs[:, t, None] * (x @ slope_t)
    return x


def z_from_vec(x: np.ndarray, n: int) -> np.ndarray:
    d = 2**n
    diag = np.real(x[..., :: d + 1])
    return diag @ z_signs(n).T


@dataclass
class ReservoirFunctional:
    """``H(v) = h(state after the zero-padded history v)`` for one channel and readout."""

    channel: QuantumChannel
    readout: PolynomialReadout
    r: float
    washout_tol: float = 1e-10

    @property
    def washout_len(self) -> int:
        return washout_length(self.r, self.washout_tol)

    def padded_start(self) -> np.ndarray:
        """State after a washout of zero inputs, standing in for the infinite zero past."""
        return evolve(self.channel, np.zeros(self.washout_len))

    def __call__(self, inputs: Sequence[float]) -> float:
        rho = evolve(self.channel, inputs, self.padded_start())
        return self.readout(rho)

    def states(self, inputs: Sequence[float]) -> list[np.ndarray]:
        """States after each prefix ``v_1..v_t`` (prefix sharing), ``t = 1..len``."""
        return trajectory(self.channel, inputs, self.padded_start())[1:]

    def predictions(self, inputs: Sequence[float]) -> np.ndarray:
        return np.array([self.readout(rho) for rho in self.states(inputs)])


def empirical_risk(
    functional: ReservoirFunctional,
    series: GeneratedSeries,
    m: int,
    loss: LossFunction,
    *,
    prefix_sharing: bool = True,
) -> float:
    """Mean loss of the functional on the ``m`` zero-padded suffixes of one realisation."""
    if m > len(series):
        raise ValueError(f"m = {m} exceeds series length {len(series)}")
    v, y = series.v[-m:], series.y[-m:]
    if prefix_sharing:
        preds = functional.predictions(v)
    else:
        preds = np.array([functional(v[: t + 1]) for t in range(m)])
    return float(np.mean(loss(preds, y)))


@dataclass(frozen=True)
class RiskEstimate:
    empirical: float
    generalisation: float
    std_err: float
    m: int

    @property
    def gap(self) -> float:
        return abs(self.generalisation - self.empirical)


def generalisation_error_mc(
    functional: ReservoirFunctional,
    spec: ProcessSpec,
    loss: LossFunction,
    n_mc: int,
    horizon: int | None = None,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte-Carlo estimate of ``E[loss(H(V), Y_0)]`` and its standard error."""
    horizon = functional.washout_len if horizon is None else horizon
    if horizon < functional.washout_len:
        raise ValueError(f"horizon {horizon} shorter than washout {functional.washout_len}")
    rng = np.random.default_rng(seed)
    v, y = sample_batch(spec, n_mc, horizon, rng)
    x = evolve_batch(functional.channel, v)
    preds = functional.readout.evaluate_z(z_from_vec(x, functional.channel.n))
    losses = loss(preds, y[:, -1])
    se = float(np.std(losses, ddof=1) / math.sqrt(n_mc)) if n_mc > 1 else float("inf")
    return float(np.mean(losses)), se


# --------------------------------------------------------------------------------------
# Training
# --------------------------------------------------------------------------------------


@dataclass
class BoxLsResult:
    x: np.ndarray
    objective: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    degenerate: bool = False


def projected_gradient_box_ls(
    a: np.ndarray,
    y: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    *,
    max_iter: int = 10_000,
    tol: float = 1e-8,
    x0: np.ndarray | None = None,
) -> BoxLsResult:
    """Minimise ``0.5 ||a x - y||^2`` over the box ``lower <= x <= upper``.

    Fixed step ``1/L`` with ``L`` the largest eigenvalue of ``a^T a``; stops when
    the projected-gradient norm ``||x - P(x - grad)||`` drops below ``tol``.
    """
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    gram = a.T @ a
    aty = a.T @ y
    lipschitz = float(np.linalg.eigvalsh(gram)[-1]) if gram.size else 0.0
    degenerate = np.linalg.matrix_rank(a) < a.shape[1]
    x = np.clip(np.zeros(a.shape[1]) if x0 is None else np.asarray(x0, dtype=float), lower, upper)
    res = BoxLsResult(x=x, degenerate=bool(degenerate))
    if lipschitz <= 0.0:
        res.converged = True
        return res

    def objective(z: np.ndarray) -> float:
        r = a @ z - y
        return 0.5 * float(r @ r)

    res.objective.append(objective(x))
    for it in range(1, max_iter + 1):
        grad = gram @ x - aty
        if np.linalg.norm(x - np.clip(x - grad, lower, upper)) <= tol:
            res.converged = True
            res.iterations = it - 1
            break
        x = np.clip(x - grad / lipschitz, lower, upper)
        res.objective.append(objective(x))
    else:
        res.iterations = max_iter
    res.x = x
    return res


def readout_features(
    channel: QuantumChannel, inputs: Sequence[float], r: float, r_max: int, washout_tol: float = 1e-10
) -> np.ndarray:
    """Monomial features of every prefix state of a zero-padded input sequence."""
    inputs = np.asarray(inputs, dtype=float)
    _check_inputs(channel, inputs)
    zeros = np.zeros((1, washout_length(r, washout_tol)))
    x = evolve_batch(channel, zeros)
    const, slope = channel.affine_superoperators()
    rows = np.empty((len(inputs), x.shape[1]), dtype=complex)
    for t, v in enumerate(inputs):
        x = x @ const.T + v * (x @ slope.T)
        rows[t] = x[0]
    return monomial_features(z_from_vec(rows, channel.n), enumerate_monomials(channel.n, r_max))


def fit_readout(
    channel: QuantumChannel,
    r: float,
    series: GeneratedSeries,
    m: int,
    r_max: int,
    c_max: float,
    *,
    washout_tol: float = 1e-10,
    max_iter: int = 10_000,
    tol: float = 1e-8,
) -> PolynomialReadout:
    """Box-constrained least-squares readout on the last ``m`` points of ``series``."""
    if m > len(series):
        raise ValueError(f"m = {m} exceeds series length {len(series)}")
    feats = readout_features(channel, series.v[-m:], r, r_max, washout_tol)
    design = np.hstack([feats, np.ones((m, 1))])
    d = feats.shape[1]
    lower = np.r_[np.zeros(d), -c_max]
    upper = np.r_[np.ones(d), c_max]
    res = projected_gradient_box_ls(design, series.y[-m:], lower, upper, max_iter=max_iter, tol=tol)
    if res.degenerate:
        log.warning("degenerate feature matrix for %r; returning projected solution", channel)
    return PolynomialReadout.from_vector(channel.n, r_max, c_max, float(res.x[-1]), res.x[:-1])


# --------------------------------------------------------------------------------------
# Rademacher complexity
# --------------------------------------------------------------------------------------


def inner_sup_box(a: np.ndarray, b: np.ndarray, c_max: float) -> np.ndarray:
    """``sup |C b + w . a|`` over ``w in [0, 1]^d``, ``|C| <= c_max`` (exact, vectorised)."""
    a = np.asarray(a, dtype=float)
    pos = np.maximum(a, 0.0).sum(axis=-1)
    neg = np.maximum(-a, 0.0).sum(axis=-1)
    return np.maximum(pos, neg) + c_max * np.abs(b)


@dataclass(frozen=True)
class RademacherEstimate:
    k: int
    mc_reps: int
    estimate: float
    std_err: float


def ghost_z_expectations(
    channels: Sequence[QuantumChannel],
    spec: ProcessSpec,
    n_series: int,
    horizon: int,
    seed: int,
) -> np.ndarray:
    """Final-state Z expectations of ``n_series`` ghost copies under every channel.

    Shape ``(len(channels), n_series, n)``; all channels see the same inputs.
    """
    rng = np.random.default_rng(seed)
    v, _ = sample_batch(spec, n_series, horizon, rng)
    return np.stack([z_from_vec(evolve_batch(ch, v), ch.n) for ch in channels])


def rademacher_from_z(
    z: np.ndarray, signs: np.ndarray, r_max: int, c_max: float
) -> RademacherEstimate:
    """Estimator from precomputed ghost expectations.

    ``z`` has shape ``(n_theta, reps, k, n)``; ``signs`` has shape ``(reps, k)``.
    """
    n_theta, reps, k, n = z.shape
    feats = monomial_features(z, enumerate_monomials(n, r_max))  # (theta, reps, k, d)
    a = np.einsum("rk,trkd->trd", signs, feats)
    b = signs.sum(axis=1)
    sups = inner_sup_box(a, b[None, :], c_max).max(axis=0) / k
    se = float(np.std(sups, ddof=1) / math.sqrt(reps)) if reps > 1 else float("inf")
    return RademacherEstimate(k=k, mc_reps=reps, estimate=float(np.mean(sups)), std_err=se)


def rademacher_mc(
    channels: Sequence[QuantumChannel],
    r_max: int,
    c_max: float,
    spec: ProcessSpec,
    k: int,
    horizon: int,
    mc_reps: int,
    seed: int | np.random.SeedSequence,
) -> RademacherEstimate:
    """Monte-Carlo Rademacher complexity of channel grid x polynomial readout class.

    The supremum over readouts is exact (linear objective over a box) and the
    supremum over the finite grid is a plain max; only the outer expectation
    over ghost samples and signs is sampled.
    """
    if k < 2:
        raise ValueError(f"need k >= 2, got {k}")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    data_seed, sign_seed = ss.spawn(2)
    z = ghost_z_expectations(channels, spec, mc_reps * k, horizon, data_seed)
    n = z.shape[-1]
    signs = np.random.default_rng(sign_seed).choice([-1.0, 1.0], size=(mc_reps, k))
    return rademacher_from_z(z.reshape(len(channels), mc_reps, k, n), signs, r_max, c_max)
