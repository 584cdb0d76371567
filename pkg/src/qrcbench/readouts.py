"""Readout classes over single-qubit Z expectations.

A polynomial readout has one weight per monomial of total degree ``1..R`` in
the ``n`` variables ``<Z_1>, ..., <Z_n>``; there are ``C(n + R, R) - 1`` of
them.  Monomials are listed in graded order, descending-lexicographic within
a degree: ``(1,0), (0,1), (2,0), (1,1), (0,2)`` for ``n = R = 2``.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

MultiIndex = tuple[int, ...]


@lru_cache(maxsize=None)
def enumerate_monomials(n: int, r: int) -> tuple[MultiIndex, ...]:
    if n < 1 or r < 1:
        raise ValueError(f"need n >= 1 and r >= 1, got n={n}, r={r}")
    out = []
    for degree in range(1, r + 1):
        for combo in itertools.combinations_with_replacement(range(n), degree):
            exps = [0] * n
            for i in combo:
                exps[i] += 1
            out.append(tuple(exps))
    return tuple(out)


def monomial_count(n: int, r: int) -> int:
    return math.comb(n + r, r) - 1


@lru_cache(maxsize=None)
def z_signs(n: int) -> np.ndarray:
    """``(n, 2^n)`` table of the diagonal of ``Z_i`` (qubit 0 most significant)."""
    idx = np.arange(2**n)
    bits = (idx[None, :] >> (n - 1 - np.arange(n))[:, None]) & 1
    return 1.0 - 2.0 * bits


def z_expectations(rho: np.ndarray, n: int | None = None) -> np.ndarray:
    """``tr[Z_i rho]`` for every qubit; accepts a single state or a stack ``(..., d, d)``."""
    rho = np.asarray(rho)
    d = rho.shape[-1]
    if n is None:
        n = int(round(math.log2(d)))
    if rho.shape[-2:] != (2**n, 2**n):
        raise ValueError(f"state shape {rho.shape[-2:]} does not match {n} qubits")
    diag = np.real(np.diagonal(rho, axis1=-2, axis2=-1))
    return diag @ z_signs(n).T


def monomial_features(z: np.ndarray, monomials: Sequence[MultiIndex]) -> np.ndarray:
    """Monomial values ``prod_i z_i^{r_i}`` for ``z`` of shape ``(..., n)``."""
    z = np.asarray(z, dtype=float)
    exps = np.asarray(monomials, dtype=int)
    return np.prod(z[..., None, :] ** exps, axis=-1)


@dataclass(frozen=True)
class ReadoutConstants:
    l_h_bar: float
    l_h0: float


def lipschitz_bound_poly(n: int, r_max: int) -> float:
    return n * math.sqrt(2**n) * r_max * monomial_count(n, r_max)


def lipschitz_bound_sm(n: int, ell_max: int) -> float:
    return ell_max**2.5 * math.sqrt(2**n)


@dataclass(frozen=True)
class PolynomialReadout:
    n: int
    r_max: int
    c_max: float
    c: float = 0.0
    weights: Mapping[MultiIndex, float] = field(default_factory=dict)
    r: int | None = None

    def __post_init__(self) -> None:
        r = self.r_max if self.r is None else self.r
        object.__setattr__(self, "r", r)
        if not 1 <= r <= self.r_max:
            raise ValueError(f"active degree {r} outside [1, {self.r_max}]")
        if self.c_max < 0 or abs(self.c) > self.c_max:
            raise ValueError(f"bias {self.c} exceeds C_max = {self.c_max}")
        allowed = set(enumerate_monomials(self.n, r))
        clean = {}
        for key, w in self.weights.items():
            key = tuple(int(e) for e in key)
            if key not in allowed:
                raise ValueError(f"monomial {key} not admissible for n={self.n}, R={r}")
            if not 0.0 <= w <= 1.0:
                raise ValueError(f"weight {w} for {key} outside [0, 1]")
            if w:
                clean[key] = float(w)
        object.__setattr__(self, "weights", clean)

    @classmethod
    def from_vector(
        cls, n: int, r_max: int, c_max: float, c: float, w: Sequence[float]
    ) -> "PolynomialReadout":
        monos = enumerate_monomials(n, r_max)
        if len(w) != len(monos):
            raise ValueError(f"expected {len(monos)} weights, got {len(w)}")
        return cls(n, r_max, c_max, float(c), dict(zip(monos, map(float, w))))

    def weight_vector(self) -> np.ndarray:
        return np.array([self.weights.get(m, 0.0) for m in enumerate_monomials(self.n, self.r_max)])

    def constants(self) -> ReadoutConstants:
        return ReadoutConstants(lipschitz_bound_poly(self.n, self.r_max), self.c_max)

    def __call__(self, rho: np.ndarray) -> float:
        return eval_poly(self, rho)

    def evaluate_z(self, z: np.ndarray) -> np.ndarray:
        feats = monomial_features(z, enumerate_monomials(self.n, self.r_max))
        return self.c + feats @ self.weight_vector()

    def to_json(self) -> str:
        monos = enumerate_monomials(self.n, self.r_max)
        terms = [{"exponents": list(m), "weight": self.weights[m]} for m in monos if m in self.weights]
        payload = {"n": self.n, "r_max": self.r_max, "r": self.r, "c_max": self.c_max, "c": self.c, "terms": terms}
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PolynomialReadout":
        data = json.loads(text)
        weights = {tuple(t["exponents"]): t["weight"] for t in data["terms"]}
        return cls(data["n"], data["r_max"], data["c_max"], data["c"], weights, data.get("r"))


def eval_poly(h: PolynomialReadout, rho: np.ndarray) -> float:
    """Readout value ``C + sum_m w_m prod_i <Z_i>^{r_i}``; the zero matrix gives ``C``."""
    z = z_expectations(rho, h.n)
    total = h.c
    for mono, w in h.weights.items():
        total += w * float(np.prod(z ** np.asarray(mono)))
    return float(total)


def linear_readout(n: int, c_max: float, c: float, w: Sequence[float]) -> PolynomialReadout:
    return PolynomialReadout.from_vector(n, 1, c_max, c, w)


@dataclass(frozen=True)
class SpatialMultiplexReadout:
    """Product of ``ell`` linear readouts on ``n / ell``-qubit blocks, plus a bias."""

    n: int
    ell: int
    ell_max: int
    c_max: float
    c: float
    block_weights: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if not 1 <= self.ell <= self.ell_max:
            raise ValueError(f"block count {self.ell} outside [1, {self.ell_max}]")
        if self.n % self.ell:
            raise ValueError(f"{self.ell} blocks do not divide {self.n} qubits")
        if self.c_max < 0 or abs(self.c) > self.c_max:
            raise ValueError(f"bias {self.c} exceeds C_max = {self.c_max}")
        blocks = tuple(tuple(float(w) for w in block) for block in self.block_weights)
        if len(blocks) != self.ell or any(len(b) != self.block_size for b in blocks):
            raise ValueError(f"need {self.ell} weight blocks of length {self.block_size}")
        if any(not 0.0 <= w <= 1.0 for b in blocks for w in b):
            raise ValueError("spatial multiplexing weights must lie in [0, 1]")
        object.__setattr__(self, "block_weights", blocks)

    @property
    def block_size(self) -> int:
        return self.n // self.ell

    def constants(self) -> ReadoutConstants:
        return ReadoutConstants(lipschitz_bound_sm(self.n, self.ell_max), self.c_max)


def eval_sm(h: SpatialMultiplexReadout, block_states: Sequence[np.ndarray]) -> float:
    if len(block_states) != h.ell:
        raise ValueError(f"expected {h.ell} block states, got {len(block_states)}")
    value = 1.0
    for weights, rho in zip(h.block_weights, block_states):
        value *= float(np.dot(weights, z_expectations(rho, h.block_size)))
    return h.c + value


def sm_to_polynomial(h: SpatialMultiplexReadout) -> PolynomialReadout:
    """The equivalent degree-``ell`` polynomial readout on the joint ``n``-qubit state."""
    weights = {}
    k = h.block_size
    for picks in itertools.product(range(k), repeat=h.ell):
        exps = [0] * h.n
        w = 1.0
        for block, i in enumerate(picks):
            exps[block * k + i] = 1
            w *= h.block_weights[block][i]
        weights[tuple(exps)] = w
    return PolynomialReadout(h.n, h.ell, h.c_max, h.c, weights)
