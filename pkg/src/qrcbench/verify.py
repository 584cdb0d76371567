"""Empirical checks of the channel and readout assumptions.

Each check compares a measured worst case against its theoretical constant
and returns a :class:`CheckResult`.  Superoperators are probed from the
literal ``channel.apply`` so that the checks do not lean on the fast affine
path used for evolution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import linalg as la
from .channels import InputDomain, QuantumChannel
from .learning import washout_length
from .readouts import PolynomialReadout, enumerate_monomials, lipschitz_bound_poly

SLACK = 1e-9


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    theory: float | None
    details: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.passed = bool(self.passed)
        self.measured = float(self.measured)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        theory = "-" if self.theory is None else f"{self.theory:.6g}"
        return f"[{status}] {self.name}: measured={self.measured:.6g} theory={theory}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "measured": self.measured,
            "theory": self.theory,
            **self.details,
        }


def probe_superoperator(channel: QuantumChannel, v: float) -> np.ndarray:
    return la.to_superoperator(lambda a: channel.apply(v, a), channel.dim)


def input_grid(domain: InputDomain, count: int) -> np.ndarray:
    return np.linspace(domain.lo, domain.hi, count)


def _density_stack(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    return np.stack([la.random_density(n, rng) for _ in range(count)])


def check_cptp(
    channels: Sequence[QuantumChannel], inputs: Sequence[float], name: str = "cptp"
) -> CheckResult:
    worst_trace, worst_eig = 0.0, math.inf
    for ch in channels:
        for v in inputs:
            rep = la.verify_cptp(probe_superoperator(ch, float(v)))
            worst_trace = max(worst_trace, rep.trace_dev)
            worst_eig = min(worst_eig, rep.min_choi_eig)
    passed = worst_trace <= 1e-10 and worst_eig >= -1e-10
    return CheckResult(
        name, passed, worst_eig, -1e-10,
        {"max_trace_dev": worst_trace, "min_choi_eig": worst_eig, "evaluations": len(channels) * len(inputs)},
    )


def contraction_ratios(
    channel: QuantumChannel, v: float, rho1: np.ndarray, rho2: np.ndarray
) -> np.ndarray:
    """``||T(v, rho1) - T(v, rho2)||_2 / ||rho1 - rho2||_2`` for stacked pairs."""
    sup = probe_superoperator(channel, v)
    diff = (rho1 - rho2).transpose(0, 2, 1).reshape(len(rho1), -1)  # column-stacked vec
    out = diff @ sup.T
    return np.linalg.norm(out, axis=1) / np.linalg.norm(diff, axis=1)


def check_contraction(
    channels: Sequence[QuantumChannel],
    r_theory: float,
    domain: InputDomain,
    *,
    n_inputs: int = 20,
    n_pairs: int = 500,
    seed: int = 0,
    name: str = "contraction",
) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    per_channel = []
    for ch in channels:
        rho1 = _density_stack(ch.n, n_pairs, rng)
        rho2 = _density_stack(ch.n, n_pairs, rng)
        ch_worst = max(float(contraction_ratios(ch, float(v), rho1, rho2).max()) for v in input_grid(domain, n_inputs))
        per_channel.append(ch_worst)
        worst = max(worst, ch_worst)
    return CheckResult(
        name, worst <= r_theory + SLACK, worst, r_theory,
        {"per_point_max": per_channel, "pairs": n_pairs, "inputs": n_inputs},
    )


def check_restricted_norm(
    channels: Sequence[QuantumChannel],
    r_theory: float,
    domain: InputDomain,
    *,
    n_inputs: int = 5,
    name: str = "traceless_restricted_norm",
) -> CheckResult:
    """Exact worst case over density differences (the traceless restricted norm)."""
    worst = 0.0
    per_channel = []
    for ch in channels:
        ch_worst = max(
            la.traceless_restricted_norm(probe_superoperator(ch, float(v))) for v in input_grid(domain, n_inputs)
        )
        per_channel.append(ch_worst)
        worst = max(worst, ch_worst)
    return CheckResult(name, worst <= r_theory + SLACK, worst, r_theory, {"per_point_max": per_channel})


def check_input_lipschitz(
    channels: Sequence[QuantumChannel],
    l_r: float,
    domain: InputDomain,
    *,
    n_pairs: int = 500,
    seed: int = 0,
    name: str = "input_lipschitz",
) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for ch in channels:
        for _ in range(n_pairs):
            rho = la.random_density(ch.n, rng)
            v1, v2 = rng.uniform(domain.lo, domain.hi, size=2)
            if v1 == v2:
                continue
            ratio = la.schatten2(ch.apply(v1, rho) - ch.apply(v2, rho)) / abs(v1 - v2)
            worst = max(worst, ratio)
    return CheckResult(name, worst <= l_r + SLACK, worst, l_r, {"pairs": n_pairs})


def random_poly_readout(n: int, r_max: int, c_max: float, rng: np.random.Generator) -> PolynomialReadout:
    monos = enumerate_monomials(n, r_max)
    return PolynomialReadout.from_vector(n, r_max, c_max, rng.uniform(-c_max, c_max), rng.uniform(0, 1, len(monos)))


def check_esp(
    channel: QuantumChannel,
    r: float,
    domain: InputDomain,
    *,
    n_pairs: int = 20,
    steps: int | None = None,
    r_max: int = 2,
    seed: int = 0,
    name: str = "echo_state",
) -> CheckResult:
    """Two random initial states, shared inputs: distances must stay inside ``r^t d_0``.

    After ``washout_length(r, 1e-10)`` steps the readouts must agree to
    ``1e-8 * L̄_h``.
    """
    rng = np.random.default_rng(seed)
    washout = washout_length(r, 1e-10)
    steps = washout if steps is None else max(steps, washout)
    l_h_bar = lipschitz_bound_poly(channel.n, r_max)
    worst_excess = -math.inf
    worst_readout = 0.0
    for _ in range(n_pairs):
        rho1 = la.random_density(channel.n, rng)
        rho2 = la.random_density(channel.n, rng)
        d0 = la.schatten2(rho1 - rho2)
        h = random_poly_readout(channel.n, r_max, 1.0, rng)
        for t, v in enumerate(rng.uniform(domain.lo, domain.hi, size=steps), start=1):
            rho1 = channel.apply(float(v), rho1)
            rho2 = channel.apply(float(v), rho2)
            envelope = r**t * d0 * (1.0 + SLACK) ** t
            worst_excess = max(worst_excess, la.schatten2(rho1 - rho2) - envelope)
            if t == washout:
                worst_readout = max(worst_readout, abs(h(rho1) - h(rho2)))
    readout_tol = 1e-8 * l_h_bar
    passed = worst_excess <= 0.0 and worst_readout < readout_tol
    return CheckResult(
        name, passed, worst_excess, 0.0,
        {"washout": washout, "max_readout_gap": worst_readout, "readout_tol": readout_tol, "pairs": n_pairs},
    )


def check_readout_lipschitz(
    n: int, r_max: int, c_max: float, *, n_pairs: int = 500, n_readouts: int = 10, seed: int = 0,
    name: str = "readout_lipschitz",
) -> CheckResult:
    rng = np.random.default_rng(seed)
    bound = lipschitz_bound_poly(n, r_max)
    worst = 0.0
    for _ in range(n_readouts):
        h = random_poly_readout(n, r_max, c_max, rng)
        for _ in range(n_pairs // n_readouts):
            rho1, rho2 = la.random_density(n, rng), la.random_density(n, rng)
            worst = max(worst, abs(h(rho1) - h(rho2)) / la.schatten2(rho1 - rho2))
    return CheckResult(name, worst <= bound, worst, bound, {"pairs": n_pairs})
