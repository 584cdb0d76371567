"""Closed-form Rademacher and generalisation-risk bounds.

Two assembly routes exist for the channel-specific risk bounds: the generic
four-term bound fed with substituted constants (:func:`risk_bound_general`)
and the explicit per-channel constants (:func:`risk_bound_ptr`,
:func:`risk_bound_rrr`).  They must agree; tests hold them to each other.

Logarithms are natural unless ``log_base`` says otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from .channels import ChannelConstants, ptr_constants, rrr_constants, SQRT_SQRT2_M1
from .processes import ProcessConstants
from .readouts import lipschitz_bound_poly, monomial_count

LOG_BASES = {"e": math.e, "2": 2.0, "10": 10.0}


def _log(x: float, base: float = math.e) -> float:
    return math.log(x) if base == math.e else math.log(x) / math.log(base)


def _check_k(k: int) -> None:
    if k < 2:
        raise ValueError(f"Rademacher bounds need k >= 2, got {k}")


def rademacher_constant_poly(theta_size: int, n: int, r_max: int, c_max: float) -> float:
    """Numerator ``|Θ| R_max (C(n+R_max, R_max) - 1) + C_max`` of the polynomial bound."""
    return theta_size * r_max * monomial_count(n, r_max) + c_max


def rademacher_bound_poly(theta_size: int, n: int, r_max: int, c_max: float, k: int) -> float:
    _check_k(k)
    return rademacher_constant_poly(theta_size, n, r_max, c_max) / math.sqrt(k)


def rademacher_bound_lin(theta_size: int, c_max: float, k: int, r_max: int = 1) -> float:
    """Linear-readout bound ``(|Θ| R_max + C_max) / sqrt(k)``.

    The linear class fixes ``R_max = 1``; pass another ``r_max`` only to
    evaluate the formula with the symbol left free.
    """
    _check_k(k)
    return (theta_size * r_max + c_max) / math.sqrt(k)


def rademacher_bound_sm(theta_size: int, n: int, c_max: float, k: int) -> float:
    _check_k(k)
    return (theta_size * n + c_max) / math.sqrt(k)


@dataclass(frozen=True)
class BoundInputs:
    """Everything the risk bounds consume apart from the channel constants."""

    n: int
    r_max: int
    c_max: float
    theta_size: int
    l_ell: float
    process: ProcessConstants
    e_loss_zero: float
    e_loss_zero_std_err: float | None = None
    e_loss_zero_source: str = "monte_carlo"

    def __post_init__(self) -> None:
        if self.theta_size < 1:
            raise ValueError("parameter grid must be nonempty")
        if self.n < 1 or self.r_max < 1:
            raise ValueError("need n >= 1 and r_max >= 1")
        if self.c_max < 0 or self.l_ell <= 0 or self.e_loss_zero < 0:
            raise ValueError("C_max, L_ell and E|loss(0, Y0)| must be nonnegative (L_ell positive)")

    @property
    def l_h_bar(self) -> float:
        return lipschitz_bound_poly(self.n, self.r_max)

    @property
    def c_rademacher(self) -> float:
        return rademacher_constant_poly(self.theta_size, self.n, self.r_max, self.c_max)


@dataclass(frozen=True)
class GeneralConstants:
    zeta_max: float
    s: float
    c_v: float
    c_y: float
    c_0_qrc: float
    c_1: float
    c_2: float
    c_3: float
    c_bd: float


def zeta_max(r: float, process: ProcessConstants) -> float:
    return max(r, process.d_wy, process.d_wv)


def general_constants(
    inputs: BoundInputs,
    channel: ChannelConstants,
    c_qrc: float,
    *,
    l_h_bar: float | None = None,
    l_h0: float | None = None,
    log_base: float = math.e,
) -> GeneralConstants:
    """Constants of the generic four-term risk bound (bounded-functional constant set to one)."""
    p = inputs.process
    l_ell = inputs.l_ell
    l_h = inputs.l_h_bar if l_h_bar is None else l_h_bar
    l_h0 = inputs.c_max if l_h0 is None else l_h0
    r = channel.r
    zeta = zeta_max(r, p)
    if not zeta < 1.0:
        raise ValueError(f"zeta_max = {zeta} must be < 1")
    log_inv = -_log(zeta, log_base)
    s = l_ell * l_h + inputs.e_loss_zero + l_h0 * l_ell
    return GeneralConstants(
        zeta_max=zeta,
        s=s,
        c_v=p.c_v,
        c_y=p.c_y,
        c_0_qrc=2.0 * r * l_ell * l_h / (1.0 - r),
        c_1=l_ell * (2.0 * l_h + p.c_y) / zeta,
        c_2=2.0 * s / log_inv + l_ell * channel.l_r * l_h * p.c_v / (zeta * log_inv),
        c_3=2.0 * l_ell * c_qrc / math.sqrt(log_inv),
        c_bd=2.0 * l_ell * (l_h / (1.0 - r) * (r + channel.l_r * p.m_xi * p.l_v * p.w1_v) + p.m_xi * p.l_y * p.w1_y),
    )


def is_valid_m(m: int, zeta: float, log_base: float = math.e) -> bool:
    """Applicability condition ``log m < m log(1 / zeta_max)``."""
    return _log(m, log_base) < m * -_log(zeta, log_base)


@dataclass
class BoundReport:
    variant: str
    m: int
    delta: float
    zeta_max: float
    valid: bool
    r: float
    l_r: float
    l_h_bar: float
    s: float
    c_v: float
    c_y: float
    c_0: float
    c_1: float
    c_2: float
    c_3: float
    c_bd: float
    c_rademacher: float
    terms: tuple[float, float, float, float] | None = None
    total: float | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    _SYMBOLS = {
        "general": ("c_0_qrc", "c_2", "c_3", "c_bd", "c_qrc"),
        "ptr": ("c_0_p", "c_2_p", "c_3_p", "c_4_p", "c_ptr"),
        "rrr_equal": ("c_0_a_r", "c_2_r", "c_3_r", "c_4_a_r", "c_rrr"),
        "rrr_unequal": ("c_0_b_r", "c_2_r", "c_3_r", "c_4_b_r", "c_rrr"),
    }

    def to_dict(self) -> dict[str, Any]:
        """JSON payload keyed by the snake_case symbol names of each constant."""
        c0, c2, c3, c4, crad = self._SYMBOLS[self.variant]
        out = {
            "variant": self.variant,
            "m": self.m,
            "delta": self.delta,
            "zeta_max": self.zeta_max,
            "validity": self.valid,
            "r": self.r,
            "l_r": self.l_r,
            "l_h_bar": self.l_h_bar,
            "s": self.s,
            "c_v": self.c_v,
            "c_y": self.c_y,
            c0: self.c_0,
            "c_1": self.c_1,
            c2: self.c_2,
            c3: self.c_3,
            c4: self.c_bd,
            crad: self.c_rademacher,
            "terms": list(self.terms) if self.terms is not None else None,
            "total": self.total,
        }
        out.update(self.extras)
        return out


def _four_terms(
    first: float, c_2: float, c_3: float, c_bd: float, m: int, delta: float, log_base: float
) -> tuple[float, float, float, float]:
    lm = _log(m, log_base)
    return (
        first / m,
        c_2 * lm / m,
        c_3 * math.sqrt(lm) / math.sqrt(m),
        c_bd * math.sqrt(_log(4.0 / delta, log_base)) / math.sqrt(2.0 * m),
    )


def _check_m_delta(m: int, delta: float) -> None:
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def risk_bound_general(
    inputs: BoundInputs,
    channel: ChannelConstants,
    constants: GeneralConstants,
    m: int,
    delta: float,
    *,
    c_qrc: float | None = None,
    l_h_bar: float | None = None,
    log_base: float = math.e,
) -> BoundReport:
    """Generic four-term bound; totals are withheld when ``m`` fails the validity test."""
    _check_m_delta(m, delta)
    r = channel.r
    valid = is_valid_m(m, constants.zeta_max, log_base)
    report = BoundReport(
        variant="general",
        m=m,
        delta=delta,
        zeta_max=constants.zeta_max,
        valid=valid,
        r=r,
        l_r=channel.l_r,
        l_h_bar=inputs.l_h_bar if l_h_bar is None else l_h_bar,
        s=constants.s,
        c_v=constants.c_v,
        c_y=constants.c_y,
        c_0=constants.c_0_qrc,
        c_1=constants.c_1,
        c_2=constants.c_2,
        c_3=constants.c_3,
        c_bd=constants.c_bd,
        c_rademacher=inputs.c_rademacher if c_qrc is None else c_qrc,
    )
    if valid:
        first = (1.0 - r**m) * constants.c_0_qrc + constants.c_1
        report.terms = _four_terms(first, constants.c_2, constants.c_3, constants.c_bd, m, delta, log_base)
        report.total = sum(report.terms)
    return report


def risk_bound_via_general(
    inputs: BoundInputs, channel: ChannelConstants, m: int, delta: float, *, log_base: float = math.e
) -> BoundReport:
    """Generic route with the polynomial-readout constants substituted."""
    c_qrc = inputs.c_rademacher
    consts = general_constants(inputs, channel, c_qrc, log_base=log_base)
    return risk_bound_general(inputs, channel, consts, m, delta, c_qrc=c_qrc, log_base=log_base)


# --------------------------------------------------------------------------------------
# Explicit per-channel constants
# --------------------------------------------------------------------------------------


def c0_ptr_closed_form(epsilon: float, l_ell: float, n: int, r_max: int) -> float:
    """Leading constant of the PTR bound written directly in ``epsilon``.

    ``r L_ell L̄ / (sqrt(2) (eps s - eps^2))`` with ``s = sqrt(sqrt(2) - 1)``,
    which equals ``2 r L_ell L̄ / (1 - r)`` for ``r = r_PTR(eps)``.
    """
    q = epsilon**2 - epsilon * SQRT_SQRT2_M1
    r = 2.0 * math.sqrt(2.0) * q + 1.0
    return r * l_ell * r_max * n * math.sqrt(2**n) * monomial_count(n, r_max) / (math.sqrt(2.0) * -q)


def _explicit_report(
    variant: str,
    inputs: BoundInputs,
    channel: ChannelConstants,
    m: int,
    delta: float,
    c_0: float,
    c_2: float,
    c_4: float,
    log_base: float,
    extras: dict[str, Any],
) -> BoundReport:
    p = inputs.process
    l_ell, l_h = inputs.l_ell, inputs.l_h_bar
    zeta = zeta_max(channel.r, p)
    if not zeta < 1.0:
        raise ValueError(f"zeta_max = {zeta} must be < 1")
    log_inv = -_log(zeta, log_base)
    c_1 = l_ell * (2.0 * l_h + p.c_y) / zeta
    c_3 = 2.0 * l_ell * inputs.c_rademacher / math.sqrt(log_inv)
    s = l_ell * l_h + inputs.e_loss_zero + inputs.c_max * l_ell
    valid = is_valid_m(m, zeta, log_base)
    report = BoundReport(
        variant=variant,
        m=m,
        delta=delta,
        zeta_max=zeta,
        valid=valid,
        r=channel.r,
        l_r=channel.l_r,
        l_h_bar=l_h,
        s=s,
        c_v=p.c_v,
        c_y=p.c_y,
        c_0=c_0,
        c_1=c_1,
        c_2=c_2,
        c_3=c_3,
        c_bd=c_4,
        c_rademacher=inputs.c_rademacher,
        extras=extras,
    )
    if valid:
        report.terms = _four_terms(c_0 + c_1, c_2, c_3, c_4, m, delta, log_base)
        report.total = sum(report.terms)
    return report


def risk_bound_ptr(
    inputs: BoundInputs, epsilon: float, m: int, delta: float, *, log_base: float = math.e
) -> BoundReport:
    """Explicit PTR bound; ``C_0^P`` already carries the ``(1 - r^m)`` factor."""
    _check_m_delta(m, delta)
    ch = ptr_constants(epsilon)
    p = inputs.process
    l_ell, l_h, r = inputs.l_ell, inputs.l_h_bar, ch.r
    zeta = zeta_max(r, p)
    log_inv = -_log(zeta, log_base)
    c_0 = 2.0 * (1.0 - r**m) * r * l_ell * l_h / (1.0 - r)
    c_2 = (
        2.0 * (l_ell * l_h + inputs.e_loss_zero + inputs.c_max * l_ell) / log_inv
        + 2.0 * l_ell * l_h * p.c_v / (zeta * log_inv)
    )
    c_4 = 2.0 * l_ell * (l_h / (1.0 - r) * (r + 2.0 * p.m_xi * p.l_v * p.w1_v) + p.m_xi * p.l_y * p.w1_y)
    extras = {"epsilon_ptr": epsilon, "r_ptr": r}
    extras.update(bigO_params("ptr", inputs, epsilon=epsilon, log_base=log_base))
    report = _explicit_report("ptr", inputs, ch, m, delta, c_0, c_2, c_4, log_base, extras)
    if report.valid:
        report.extras["big_o_envelope"] = big_o_envelope(report, inputs, log_base)
    return report


def risk_bound_rrr(
    inputs: BoundInputs,
    alpha_min: float,
    r0: float,
    r1: float,
    epsilon: float,
    m: int,
    delta: float,
    *,
    c4_scope: str = "inner",
    p4_verbatim: bool = True,
    log_base: float = math.e,
) -> BoundReport:
    """Explicit RRR bound, dispatching on ``r0 == r1`` versus ``r0 > r1``.

    ``c4_scope="inner"`` keeps the trailing ``M_xi L_y ||w^y||_1`` term inside
    the ``2 L_ell (...)`` factor, as in the generic constant; ``"outer"``
    adds it after the factor.
    """
    _check_m_delta(m, delta)
    if c4_scope not in ("inner", "outer"):
        raise ValueError(f"c4_scope must be 'inner' or 'outer', got {c4_scope!r}")
    ch = rrr_constants(alpha_min, r0, r1, epsilon)
    p = inputs.process
    l_ell, l_h = inputs.l_ell, inputs.l_h_bar
    zeta = zeta_max(ch.r, p)
    log_inv = -_log(zeta, log_base)
    keep = 1.0 - alpha_min
    if r0 == r1:
        variant = "rrr_equal"
        q = keep * r0
        c_0 = 2.0 * l_ell * l_h * (1.0 - keep**m * r0**m) * q / (1.0 - q)
        head, inner = l_h / (1.0 - q), q + 2.0 * keep * p.m_xi * p.l_v * p.w1_v
    else:
        variant = "rrr_unequal"
        c_0 = 2.0 * l_ell * l_h * (1.0 - (1.0 - epsilon) ** m) * (1.0 - epsilon) / epsilon
        head, inner = l_h / epsilon, 1.0 - epsilon + 2.0 * keep * p.m_xi * p.l_v * p.w1_v
    c_2 = (
        2.0 * (l_ell * l_h + inputs.e_loss_zero + inputs.c_max * l_ell) / log_inv
        + 2.0 * keep * l_ell * l_h * p.c_v / (zeta * log_inv)
    )
    tail = p.m_xi * p.l_y * p.w1_y
    if c4_scope == "inner":
        c_4 = 2.0 * l_ell * (head * inner + tail)
    else:
        c_4 = 2.0 * l_ell * head * inner + tail
    extras = {"alpha_min": alpha_min, "r_0": r0, "r_1": r1, "epsilon_rrr": epsilon, "r_rrr": ch.r}
    extras.update(
        bigO_params("rrr", inputs, alpha_min=alpha_min, r0=r0, r1=r1, epsilon=epsilon,
                    p4_verbatim=p4_verbatim, log_base=log_base)
    )
    report = _explicit_report(variant, inputs, ch, m, delta, c_0, c_2, c_4, log_base, extras)
    if report.valid:
        report.extras["big_o_envelope"] = big_o_envelope(report, inputs, log_base)
    return report


def bigO_params(
    variant: str,
    inputs: BoundInputs,
    *,
    epsilon: float,
    alpha_min: float | None = None,
    r0: float | None = None,
    r1: float | None = None,
    p4_verbatim: bool = True,
    log_base: float = math.e,
) -> dict[str, float]:
    """Reservoir-dependent expressions ``P_1..P_4`` of the Big-O risk bounds.

    For the RRR equal case the ``P_4`` prefactor is ``(1 - a) / (1 - a r)`` as
    printed; ``p4_verbatim=False`` uses ``(1 - a) / (1 - (1 - a) r)``, the
    form that matches the explicit constant.
    """
    p = inputs.process
    l_ell, l_h, c_max = inputs.l_ell, inputs.l_h_bar, inputs.c_max
    numerator = inputs.theta_size * inputs.r_max * monomial_count(inputs.n, inputs.r_max)
    if variant == "ptr":
        r = ptr_constants(epsilon).r
        zeta = zeta_max(r, p)
        p3 = max(numerator, c_max) / (l_h * math.sqrt(-_log(zeta, log_base)))
        return {
            "p_1_p": max(r / (1.0 - r), 2.0 * l_ell / zeta, l_ell * p.c_y / zeta),
            "p_2_p": max(1.0, c_max, 2.0 * p.c_v / zeta),
            "p_3_p": p3,
            "p_4_p": max(r, 2.0 * p.m_xi * p.l_v * p.w1_v) / (1.0 - r),
        }
    if variant != "rrr":
        raise ValueError(f"unknown variant {variant!r}")
    if alpha_min is None or r0 is None or r1 is None:
        raise ValueError("RRR parameters alpha_min, r0, r1 are required")
    ch = rrr_constants(alpha_min, r0, r1, epsilon)
    zeta = zeta_max(ch.r, p)
    keep = 1.0 - alpha_min
    drive = 2.0 * p.m_xi * p.l_v * p.w1_v
    if r0 == r1:
        q = keep * r0
        p1 = max(q / (1.0 - q), 1.0)
        pref = keep / (1.0 - alpha_min * r0) if p4_verbatim else keep / (1.0 - q)
        p4 = pref * max(r0, drive)
    else:
        p1 = max((1.0 - epsilon) / epsilon, 1.0)
        p4 = max(1.0 - epsilon, keep * drive) / epsilon
    return {
        "p_1_r": p1,
        "p_2_r": max(1.0, 2.0 * keep * l_ell * p.c_v / zeta, c_max * l_ell),
        "p_3_r": max(numerator, c_max) / (l_h * math.sqrt(-_log(zeta, log_base))),
        "p_4_r": p4,
    }


def big_o_envelope(report: BoundReport, inputs: BoundInputs, log_base: float = math.e) -> float:
    """``L̄ max{P_1/m, P_2 log m/m, P_3 sqrt(log m/m), P_4 sqrt(log(4/δ)/2m)}``."""
    suffix = "p" if report.variant == "ptr" else "r"
    ps = [report.extras[f"p_{i}_{suffix}"] for i in range(1, 5)]
    m = report.m
    lm = _log(m, log_base)
    return inputs.l_h_bar * max(
        ps[0] / m,
        ps[1] * lm / m,
        ps[2] * math.sqrt(lm / m),
        ps[3] * math.sqrt(_log(4.0 / report.delta, log_base) / (2.0 * m)),
    )


def channel_constants_for(variant: str, **params: float) -> ChannelConstants:
    if variant == "ptr":
        return ptr_constants(params["epsilon"])
    return rrr_constants(params["alpha_min"], params["r0"], params["r1"], params["epsilon"])
