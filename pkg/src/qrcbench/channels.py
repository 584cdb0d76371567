"""Reservoir channels: partial-trace (PTR) and random-reinitialisation (RRR).

The ancilla of the PTR map is the first tensor factor; inputs are embedded as
``eta_v kron rho`` and the ancilla is traced out afterwards.  Both channels are
affine in the input ``v``, which :meth:`QuantumChannel.affine_superoperators`
exposes for batched evolution.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping, Sequence

import numpy as np

from . import linalg as la

SQRT_SQRT2_M1 = math.sqrt(math.sqrt(2.0) - 1.0)


@dataclass(frozen=True)
class InputDomain:
    lo: float
    hi: float
    epsilon: float

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"empty input domain [{self.lo}, {self.hi}]")

    def __contains__(self, v: float) -> bool:
        return self.lo <= v <= self.hi

    def admits(self, v: float) -> bool:
        """Domain membership, plus the literal zero used for left padding."""
        return v == 0.0 or v in self

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class ChannelConstants:
    r: float
    l_r: float

    def __post_init__(self) -> None:
        if not 0.0 < self.r < 1.0:
            raise ValueError(f"contraction constant must lie in (0, 1), got {self.r}")
        if self.l_r < 0.0:
            raise ValueError(f"input Lipschitz constant must be nonnegative, got {self.l_r}")


def ptr_input_domain(epsilon: float) -> InputDomain:
    _check_ptr_epsilon(epsilon)
    return InputDomain(0.5 * (1 - SQRT_SQRT2_M1) + epsilon, 0.5 * (1 + SQRT_SQRT2_M1) - epsilon, epsilon)


def ptr_contraction(epsilon: float) -> float:
    _check_ptr_epsilon(epsilon)
    return 2.0 * math.sqrt(2.0) * (epsilon**2 - epsilon * SQRT_SQRT2_M1) + 1.0


def ptr_constants(epsilon: float) -> ChannelConstants:
    return ChannelConstants(r=ptr_contraction(epsilon), l_r=2.0)


def _check_ptr_epsilon(epsilon: float) -> None:
    if not 0.0 < epsilon < SQRT_SQRT2_M1:
        raise ValueError(f"epsilon_PTR must lie in (0, {SQRT_SQRT2_M1:.7f}), got {epsilon}")


def rrr_input_domain(epsilon: float) -> InputDomain:
    _check_rrr_epsilon(epsilon)
    return InputDomain(epsilon, 0.5 - epsilon, epsilon)


def rrr_constants(alpha_min: float, r0: float, r1: float, epsilon: float) -> ChannelConstants:
    """Contraction and input-Lipschitz constants of the RRR class.

    ``r = (1 - alpha_min) r0`` when ``r0 == r1``; ``r = 1 - epsilon`` when ``r0 > r1``.
    """
    _check_rrr_epsilon(epsilon)
    if not 0.0 < alpha_min < 1.0:
        raise ValueError(f"alpha_min must lie in (0, 1), got {alpha_min}")
    _check_base_pair(r0, r1)
    r = (1.0 - alpha_min) * r0 if r0 == r1 else 1.0 - epsilon
    return ChannelConstants(r=r, l_r=2.0 * (1.0 - alpha_min))


def _check_rrr_epsilon(epsilon: float) -> None:
    if not 0.0 < epsilon < 0.25:
        raise ValueError(f"epsilon_RRR must lie in (0, 1/4), got {epsilon}")


def _check_base_pair(r0: float, r1: float) -> None:
    if not (0.0 < r0 < 1.0 and 0.0 < r1 < 1.0):
        raise ValueError(f"base contraction constants must lie in (0, 1), got {r0}, {r1}")
    if not r0 + r1 < 1.0:
        raise ValueError(f"need r0 + r1 < 1, got {r0 + r1}")
    if r0 < r1:
        raise ValueError(f"need r0 >= r1 (r0 > r1 when unequal), got r0={r0} < r1={r1}")


class QuantumChannel:
    """Input-driven linear map ``T(v, .)`` on ``2^n x 2^n`` operators."""

    n: int
    domain: InputDomain | None = None

    @property
    def dim(self) -> int:
        return 2**self.n

    def apply(self, v: float, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def affine_superoperators(self) -> tuple[np.ndarray, np.ndarray]:
        """``(S_const, S_slope)`` with ``T̂(v) = S_const + v * S_slope``."""
        raise NotImplementedError

    def superoperator(self, v: float) -> np.ndarray:
        const, slope = self.affine_superoperators()
        return const + v * slope

    def admits(self, v: float) -> bool:
        if self.domain is None:
            return 0.0 <= v <= 1.0
        return self.domain.admits(v)

    def _check_operand(self, v: float, a: np.ndarray) -> None:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"input {v} outside [0, 1]")
        if a.shape != (self.dim, self.dim):
            raise ValueError(f"operator shape {a.shape} does not match dimension {self.dim}")


# --------------------------------------------------------------------------------------
# PTR
# --------------------------------------------------------------------------------------


@dataclass(frozen=True)
class PtrParams:
    """XY couplings ``J[i, j]`` (``0 <= i < j <= n``), field ``gamma``, time ``tau``.

    ``couplings`` may be any mapping ``(i, j) -> J``; it is frozen into a
    sorted tuple of items.  Index 0 is the ancilla.
    """

    n: int
    couplings: Any
    gamma: float
    tau: float
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("PTR needs at least one reservoir qubit")
        items = self.couplings.items() if isinstance(self.couplings, Mapping) else self.couplings
        frozen = tuple(sorted(((int(i), int(j)), float(val)) for (i, j), val in items))
        object.__setattr__(self, "couplings", frozen)
        values = [val for _, val in frozen] + [self.gamma, self.tau]
        if not all(math.isfinite(x) for x in values):
            raise ValueError("PTR parameters must be finite")
        if self.tau < 0:
            raise ValueError(f"evolution time must be nonnegative, got {self.tau}")

    def coupling_map(self) -> dict[tuple[int, int], float]:
        return dict(self.couplings)


def sample_couplings(n: int, seed: int) -> dict[tuple[int, int], float]:
    """Couplings drawn uniformly from [-1, 1] for every pair of the ``n + 1`` qubits."""
    rng = np.random.default_rng(seed)
    pairs = list(itertools.combinations(range(n + 1), 2))
    return {pair: float(x) for pair, x in zip(pairs, rng.uniform(-1.0, 1.0, size=len(pairs)))}


def build_xy_hamiltonian(params: PtrParams) -> np.ndarray:
    total = params.n + 1
    coup = params.coupling_map()
    h = np.zeros((2**total, 2**total), dtype=complex)
    for i, j in itertools.combinations(range(total), 2):
        if (i, j) not in coup:
            raise KeyError(f"missing coupling J[{i},{j}]")
        jij = coup[(i, j)]
        if jij:
            xx = la.pauli("X", i, total) @ la.pauli("X", j, total)
            yy = la.pauli("Y", i, total) @ la.pauli("Y", j, total)
            h += jij * (xx + yy)
    if params.gamma:
        for i in range(total):
            h += params.gamma * la.pauli("Z", i, total)
    return h


def ancilla_state(v: float) -> np.ndarray:
    return np.diag([v, 1.0 - v]).astype(complex)


class PtrChannel(QuantumChannel):
    """``T(v, A) = tr_0[U (eta_v kron A) U^dag]`` with ``U = exp(-i H tau)``."""

    def __init__(self, params: PtrParams, domain: InputDomain | None = None):
        self.params = params
        self.n = params.n
        self.domain = domain

    def __repr__(self) -> str:
        p = self.params
        return f"PtrChannel(n={p.n}, gamma={p.gamma}, tau={p.tau}, seed={p.seed})"

    @cached_property
    def hamiltonian(self) -> np.ndarray:
        return build_xy_hamiltonian(self.params)

    @cached_property
    def unitary(self) -> np.ndarray:
        return la.hermitian_exp(self.hamiltonian, self.params.tau)

    def apply(self, v: float, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a)
        self._check_operand(v, a)
        u = self.unitary
        joint = np.kron(ancilla_state(v), a)
        return la.partial_trace_first(u @ joint @ u.conj().T, 2)

    @cached_property
    def _branch_superoperators(self) -> tuple[np.ndarray, np.ndarray]:
        # Kraus operators sqrt(p_a) <b|U|a>; S_a is the branch for ancilla |a><a|.
        d = self.dim
        u = self.unitary
        branches = []
        for a in range(2):
            s = np.zeros((d * d, d * d), dtype=complex)
            for b in range(2):
                block = u[b * d : (b + 1) * d, a * d : (a + 1) * d]
                s += np.kron(block.conj(), block)
            branches.append(s)
        return branches[0], branches[1]

    def affine_superoperators(self) -> tuple[np.ndarray, np.ndarray]:
        s0, s1 = self._branch_superoperators
        return s1, s0 - s1


# --------------------------------------------------------------------------------------
# RRR
# --------------------------------------------------------------------------------------


class BaseChannel:
    """``A -> r u A u^dag + (1 - r) sigma tr[A]``; a Schatten-2 ``r``-contraction on states."""

    def __init__(self, r: float, u: np.ndarray, sigma: np.ndarray, *, check: bool = True):
        u = np.asarray(u, dtype=complex)
        sigma = np.asarray(sigma, dtype=complex)
        if check:
            if not 0.0 < r < 1.0:
                raise ValueError(f"base contraction constant must lie in (0, 1), got {r}")
            if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > 1e-10:
                raise ValueError("base channel unitary is not unitary")
            la.check_density(sigma)
        if u.shape != sigma.shape:
            raise ValueError("unitary and reset state dimensions differ")
        self.r = float(r)
        self.u = u
        self.sigma = sigma

    @property
    def dim(self) -> int:
        return self.u.shape[0]

    def __call__(self, a: np.ndarray) -> np.ndarray:
        return self.r * (self.u @ a @ self.u.conj().T) + (1.0 - self.r) * self.sigma * np.trace(a)

    @cached_property
    def superoperator(self) -> np.ndarray:
        reset = np.outer(la.vec(self.sigma), la.vec(np.eye(self.dim)))
        return self.r * np.kron(self.u.conj(), self.u) + (1.0 - self.r) * reset


def make_base_channel(r_j: float, u: np.ndarray, sigma_j: np.ndarray) -> BaseChannel:
    return BaseChannel(r_j, u, sigma_j)


@dataclass(frozen=True)
class RrrParams:
    alpha: float
    sigma: np.ndarray = field(compare=False, repr=False)
    t0: BaseChannel = field(compare=False, repr=False)
    t1: BaseChannel = field(compare=False, repr=False)
    sigma_label: str = "sigma"
    check: bool = field(default=True, compare=False)

    def __post_init__(self) -> None:
        if not self.check:
            return
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        _check_base_pair(self.t0.r, self.t1.r)
        la.check_density(self.sigma)
        if np.allclose(self.t0.superoperator, self.t1.superoperator):
            raise ValueError("base channels T0 and T1 must differ")


class RrrChannel(QuantumChannel):
    """``T(v, A) = (1 - alpha)(v T0 + (1 - v) T1)(A) + alpha sigma tr[A]``.

    The ``tr[A]`` factor makes the map linear on all operators; on unit-trace
    inputs it is the usual reset term ``alpha sigma``.
    """

    def __init__(self, params: RrrParams, domain: InputDomain | None = None):
        self.params = params
        self.n = la.n_qubits(params.sigma.shape[0])
        self.domain = domain

    def __repr__(self) -> str:
        return f"RrrChannel(n={self.n}, alpha={self.params.alpha}, sigma={self.params.sigma_label})"

    def apply(self, v: float, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a)
        self._check_operand(v, a)
        p = self.params
        mixed = v * p.t0(a) + (1.0 - v) * p.t1(a)
        return (1.0 - p.alpha) * mixed + p.alpha * p.sigma * np.trace(a)

    @cached_property
    def _affine(self) -> tuple[np.ndarray, np.ndarray]:
        p = self.params
        s0, s1 = p.t0.superoperator, p.t1.superoperator
        reset = np.outer(la.vec(p.sigma), la.vec(np.eye(self.dim)))
        return (1.0 - p.alpha) * s1 + p.alpha * reset, (1.0 - p.alpha) * (s0 - s1)

    def affine_superoperators(self) -> tuple[np.ndarray, np.ndarray]:
        return self._affine


# --------------------------------------------------------------------------------------
# Parameter grids
# --------------------------------------------------------------------------------------


def _canonical(value: Any) -> str:
    return json.dumps(value, sort_keys=True)


@dataclass(frozen=True)
class ParameterGrid:
    """Finite, deduplicated Cartesian product of named axes."""

    names: tuple[str, ...]
    points: tuple[tuple[Any, ...], ...]

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        for point in self.points:
            yield dict(zip(self.names, point))


def parameter_grid(axes: Mapping[str, Sequence[Any]]) -> ParameterGrid:
    names = tuple(axes)
    distinct = []
    for name in names:
        values = list(axes[name])
        if not values:
            raise ValueError(f"grid axis {name!r} is empty")
        seen: dict[str, Any] = {}
        for value in values:
            seen.setdefault(_canonical(value), value)
        distinct.append(list(seen.values()))
    return ParameterGrid(names, tuple(itertools.product(*distinct)))


def resolve_state(spec: Any, n: int) -> tuple[np.ndarray, str]:
    """Reset-state spec: ``"mixed"``, ``"ground"`` or ``{"random": seed}``."""
    d = 2**n
    if spec == "mixed":
        return la.maximally_mixed(n), "mixed"
    if spec == "ground":
        return la.basis_projector(0, d), "ground"
    if isinstance(spec, Mapping) and set(spec) == {"random"}:
        return la.random_density(n, int(spec["random"])), f"random{spec['random']}"
    raise ValueError(f"unknown state spec {spec!r}")


def ptr_channels(
    grid: ParameterGrid, n: int, domain: InputDomain | None = None
) -> list[PtrChannel]:
    """One channel per point of a grid with axes ``j_seed``, ``gamma``, ``tau``."""
    out = []
    for point in grid:
        seed = int(point["j_seed"])
        params = PtrParams(n, sample_couplings(n, seed), float(point["gamma"]), float(point["tau"]), seed)
        out.append(PtrChannel(params, domain))
    return out


def rrr_base_channels(
    n: int, r0: float, r1: float, seed: int, *, check: bool = True
) -> tuple[BaseChannel, BaseChannel]:
    """Base pair with Haar-random unitaries and random reset states derived from ``seed``."""
    d = 2**n
    made = []
    for j, r in enumerate((r0, r1)):
        rng = np.random.default_rng(np.random.SeedSequence([seed, j]))
        made.append(BaseChannel(r, la.random_unitary(d, rng), la.random_density(n, rng), check=check))
    return made[0], made[1]


def rrr_channels(
    grid: ParameterGrid,
    n: int,
    base: tuple[BaseChannel, BaseChannel],
    domain: InputDomain | None = None,
    *,
    check: bool = True,
) -> list[RrrChannel]:
    """One channel per point of a grid with axes ``alpha`` and ``sigma``."""
    out = []
    for point in grid:
        sigma, label = resolve_state(point["sigma"], n)
        params = RrrParams(float(point["alpha"]), sigma, base[0], base[1], label, check=check)
        out.append(RrrChannel(params, domain))
    return out
