"""Config-driven experiment assembly shared by the command line and the scripts.

:func:`build_context` is cheap and closed form (domain, constants, process,
grid size); :func:`build_channels` realises the grid.  The ``run_*``
functions return plain dictionaries ready for JSON.
"""
from __future__ import annotations

import copy
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import bounds as bd
from .channels import (
    ChannelConstants,
    InputDomain,
    QuantumChannel,
    parameter_grid,
    ptr_channels,
    ptr_constants,
    ptr_input_domain,
    rrr_base_channels,
    rrr_channels,
    rrr_constants,
    rrr_input_domain,
)
from .config import ConfigError
from .learning import (
    LossFunction,
    ReservoirFunctional,
    empirical_risk,
    fit_readout,
    generalisation_error_mc,
    rademacher_mc,
    washout_length,
)
from .processes import ProcessSpec, fit_process, generate_series, process_constants, sample_batch
from .readouts import lipschitz_bound_poly, lipschitz_bound_sm
from . import verify as vf

THREADS_ENV = "QRCBENCH_THREADS"


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parallel_map(fn: Callable[[Any], Any], items: Iterable[Any]) -> list[Any]:
    """Ordered map, threaded up to ``QRCBENCH_THREADS`` workers."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def seed_rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *stream]))


@dataclass(frozen=True)
class Context:
    cfg: dict
    variant: str
    n: int
    epsilon: float
    domain: InputDomain
    constants: ChannelConstants
    process: ProcessSpec
    loss: LossFunction
    kind: str
    r_max: int
    c_max: float
    ell_max: int
    theta_size: int
    alpha_min: float | None = None
    r0: float | None = None
    r1: float | None = None

    @property
    def washout_tol(self) -> float:
        return self.cfg["run"]["washout_tol"]

    @property
    def seed(self) -> int:
        return self.cfg["run"]["seed"]


def _grid_axes(cfg: dict) -> dict[str, list]:
    grid = cfg["channel"]["grid"]
    names = ("j_seed", "gamma", "tau") if cfg["channel"]["variant"] == "ptr" else ("alpha", "sigma")
    return {name: grid[name] for name in names}


def build_context(cfg: dict, *, alpha_min: float | None = None, theta_size: int | None = None) -> Context:
    """Closed-form pieces of an experiment; ``ValueError`` from the library becomes ``ConfigError``."""
    ch, ro, pr, run = cfg["channel"], cfg["readout"], cfg["process"], cfg["run"]
    variant, n, eps = ch["variant"], ch["n"], ch["epsilon"]
    try:
        grid = parameter_grid(_grid_axes(cfg))
        theta = len(grid) if theta_size is None else int(theta_size)
        if variant == "ptr":
            domain, consts = ptr_input_domain(eps), ptr_constants(eps)
            extra = {}
        else:
            a_min = min(grid_point["alpha"] for grid_point in grid) if alpha_min is None else alpha_min
            domain = rrr_input_domain(eps)
            consts = rrr_constants(a_min, ch["r0"], ch["r1"], eps)
            extra = {"alpha_min": a_min, "r0": ch["r0"], "r1": ch["r1"]}
        process = fit_process(
            domain,
            pr["lambda_v"],
            pr["lambda_y"],
            pr["m_xi"],
            delay=pr["delay"],
            y_scale=pr["y_scale"],
            independent_target=pr["independent_target"],
            seed=run["seed"],
        )
        loss = LossFunction(run["loss"]["kind"], run["loss"]["delta"])
    except ValueError as exc:
        raise ConfigError(str(exc), "$.channel") from exc
    r_max = 1 if ro["kind"] == "linear" else ro["r_max"]
    return Context(
        cfg=cfg, variant=variant, n=n, epsilon=eps, domain=domain, constants=consts, process=process,
        loss=loss, kind=ro["kind"], r_max=r_max, c_max=ro["c_max"], ell_max=ro["ell_max"],
        theta_size=theta, **extra,
    )


def build_channels(ctx: Context) -> list[QuantumChannel]:
    cfg = ctx.cfg
    grid = parameter_grid(_grid_axes(cfg))
    try:
        if ctx.variant == "ptr":
            return ptr_channels(grid, ctx.n, ctx.domain)
        fault = cfg.get("fault", {})
        r0 = fault.get("base_r0", ctx.r0)
        check = not fault
        base = rrr_base_channels(ctx.n, r0, ctx.r1, cfg["channel"]["base_seed"], check=check)
        return rrr_channels(grid, ctx.n, base, ctx.domain, check=check)
    except ValueError as exc:
        raise ConfigError(str(exc), "$.channel") from exc


# --------------------------------------------------------------------------------------
# Bounds
# --------------------------------------------------------------------------------------


def e_loss_zero(ctx: Context) -> tuple[float, float | None, str]:
    """``E|loss(0, Y_0)|`` as (value, std err, provenance)."""
    run = ctx.cfg["run"]
    if run.get("e_loss_zero") is not None:
        return float(run["e_loss_zero"]), None, "override"
    samples = run["e_loss_zero_samples"]
    _, y = sample_batch(ctx.process, samples, 1, seed_rng(ctx.seed, 0xE0))
    losses = ctx.loss(0.0, y[:, 0])
    return float(losses.mean()), float(losses.std(ddof=1) / math.sqrt(samples)), "monte_carlo"


def bound_inputs(ctx: Context, e0: tuple[float, float | None, str]) -> bd.BoundInputs:
    return bd.BoundInputs(
        n=ctx.n,
        r_max=ctx.r_max,
        c_max=ctx.c_max,
        theta_size=ctx.theta_size,
        l_ell=ctx.loss.l_ell,
        process=process_constants(ctx.process),
        e_loss_zero=e0[0],
        e_loss_zero_std_err=e0[1],
        e_loss_zero_source=e0[2],
    )


def explicit_bound(ctx: Context, inputs: bd.BoundInputs, m: int, delta: float, log_base: float) -> bd.BoundReport:
    if ctx.variant == "ptr":
        return bd.risk_bound_ptr(inputs, ctx.epsilon, m, delta, log_base=log_base)
    return bd.risk_bound_rrr(
        inputs, ctx.alpha_min, ctx.r0, ctx.r1, ctx.epsilon, m, delta,
        c4_scope=ctx.cfg["run"]["c4_scope"], log_base=log_base,
    )


def general_bound(ctx: Context, inputs: bd.BoundInputs, m: int, delta: float, log_base: float) -> bd.BoundReport:
    return bd.risk_bound_via_general(inputs, ctx.constants, m, delta, log_base=log_base)


def k_values(cfg: dict) -> list[int]:
    k = cfg["run"]["k"]
    return [k] if isinstance(k, int) else list(k)


def rademacher_bounds(ctx: Context, k: int) -> dict[str, float]:
    out = {
        "rademacher_poly": bd.rademacher_bound_poly(ctx.theta_size, ctx.n, ctx.r_max, ctx.c_max, k),
        "rademacher_lin": bd.rademacher_bound_lin(ctx.theta_size, ctx.c_max, k),
    }
    if ctx.kind == "sm":
        out["rademacher_sm"] = bd.rademacher_bound_sm(ctx.theta_size, ctx.n, ctx.c_max, k)
    return out


def class_bound(ctx: Context, k: int) -> float:
    if ctx.kind == "linear":
        return bd.rademacher_bound_lin(ctx.theta_size, ctx.c_max, k)
    if ctx.kind == "sm":
        return bd.rademacher_bound_sm(ctx.theta_size, ctx.n, ctx.c_max, k)
    return bd.rademacher_bound_poly(ctx.theta_size, ctx.n, ctx.r_max, ctx.c_max, k)


def relative_gap(a: float | None, b: float | None) -> float | None:
    if a is None or b is None:
        return None
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def run_bound(ctx: Context, log_base: float = math.e) -> dict[str, Any]:
    run = ctx.cfg["run"]
    m, delta = run["m"], run["delta"]
    e0 = e_loss_zero(ctx)
    inputs = bound_inputs(ctx, e0)
    explicit = explicit_bound(ctx, inputs, m, delta, log_base)
    general = general_bound(ctx, inputs, m, delta, log_base)
    lipschitz = {"l_h_bar_poly": lipschitz_bound_poly(ctx.n, ctx.r_max)}
    if ctx.kind == "sm":
        lipschitz["l_h_bar_sm"] = lipschitz_bound_sm(ctx.n, ctx.ell_max)
    return {
        "variant": ctx.variant,
        "n": ctx.n,
        "r_max": ctx.r_max,
        "c_max": ctx.c_max,
        "theta_size": ctx.theta_size,
        "readout_kind": ctx.kind,
        "e_loss_zero": {"value": e0[0], "std_err": e0[1], "source": e0[2]},
        "validity": explicit.valid,
        "explicit": explicit.to_dict(),
        "general": general.to_dict(),
        "route_rel_diff": relative_gap(explicit.total, general.total),
        "lipschitz": lipschitz,
        "rademacher": [{"k": k, **rademacher_bounds(ctx, k)} for k in k_values(ctx.cfg)],
    }


BOUND_CSV_HEADER = (
    "variant", "n", "r_max", "c_max", "theta_size", "m", "delta", "k", "zeta_max", "validity",
    "r", "l_r", "l_h_bar", "total", "total_general", "rademacher_poly", "rademacher_lin",
)


def bound_rows(payload: dict[str, Any]) -> list[dict[str, Any]]:
    ex = payload["explicit"]
    return [
        {
            "variant": payload["variant"], "n": payload["n"], "r_max": payload["r_max"],
            "c_max": payload["c_max"], "theta_size": payload["theta_size"], "m": ex["m"],
            "delta": ex["delta"], "k": rad["k"], "zeta_max": ex["zeta_max"], "validity": ex["validity"],
            "r": ex["r"], "l_r": ex["l_r"], "l_h_bar": ex["l_h_bar"], "total": ex["total"],
            "total_general": payload["general"]["total"], "rademacher_poly": rad["rademacher_poly"],
            "rademacher_lin": rad["rademacher_lin"],
        }
        for rad in payload["rademacher"]
    ]


# --------------------------------------------------------------------------------------
# Verification
# --------------------------------------------------------------------------------------


def run_verify(ctx: Context, channels: Sequence[QuantumChannel]) -> list[vf.CheckResult]:
    v = ctx.cfg["verify"]
    seed = ctx.seed
    r, l_r = ctx.constants.r, ctx.constants.l_r
    checks = [
        vf.check_cptp(channels, vf.input_grid(ctx.domain, v["cptp_inputs"])),
        vf.check_contraction(channels, r, ctx.domain, n_inputs=v["inputs"], n_pairs=v["pairs"], seed=seed),
        vf.check_restricted_norm(channels, r, ctx.domain),
        vf.check_input_lipschitz(channels, l_r, ctx.domain, n_pairs=v["pairs"], seed=seed + 1),
    ]
    esp = [
        vf.check_esp(ch, r, ctx.domain, n_pairs=v["esp_pairs"], r_max=ctx.r_max, seed=seed + 2 + i)
        for i, ch in enumerate(channels)
    ]
    worst = max(esp, key=lambda c: (not c.passed, c.measured))
    worst.details["channels"] = len(esp)
    checks.append(worst)
    checks.append(vf.check_readout_lipschitz(ctx.n, ctx.r_max, ctx.c_max, n_pairs=v["pairs"], seed=seed + 3))
    return checks


# --------------------------------------------------------------------------------------
# Simulation
# --------------------------------------------------------------------------------------


def simulate_once(
    ctx: Context,
    channels: Sequence[QuantumChannel],
    seed: int,
    *,
    m: int | None = None,
    n_mc: int | None = None,
    bound: bd.BoundReport | None = None,
    log_base: float = math.e,
) -> dict[str, Any]:
    """Train by ERM over the grid, then compare ``|R - R̂_m|`` with the risk bound."""
    run = ctx.cfg["run"]
    m = run["m"] if m is None else m
    n_mc = run["n_mc"] if n_mc is None else n_mc
    if bound is None:
        bound = explicit_bound(ctx, bound_inputs(ctx, e_loss_zero(ctx)), m, run["delta"], log_base)
    r = ctx.constants.r
    series = generate_series(ctx.process, m, seed=np.random.SeedSequence([seed, 1]))

    def train(ch: QuantumChannel):
        h = fit_readout(ch, r, series, m, ctx.r_max, ctx.c_max, washout_tol=ctx.washout_tol)
        f = ReservoirFunctional(ch, h, r, ctx.washout_tol)
        return f, empirical_risk(f, series, m, ctx.loss)

    fitted = parallel_map(train, channels)
    best = int(np.argmin([risk for _, risk in fitted]))
    functional, emp = fitted[best]
    gen, se = generalisation_error_mc(functional, ctx.process, ctx.loss, n_mc, seed=np.random.SeedSequence([seed, 2]))
    gap = abs(gen - emp)
    total = bound.total
    return {
        "seed": seed,
        "m": m,
        "theta_index": best,
        "estimate": emp,
        "generalisation": gen,
        "std_err": se,
        "gap": gap,
        "bound": total,
        "validity": bound.valid,
        "dominated": bool(bound.valid and gap <= total),
        "readout": functional.readout.to_json(),
    }


# --------------------------------------------------------------------------------------
# Rademacher complexity
# --------------------------------------------------------------------------------------


def loglog_slope(ks: Sequence[float], values: Sequence[float]) -> float | None:
    if len(ks) < 2:
        return None
    return float(np.polyfit(np.log(ks), np.log(values), 1)[0])


def run_rademacher(ctx: Context, channels: Sequence[QuantumChannel]) -> dict[str, Any]:
    if ctx.kind == "sm":
        raise ConfigError("Monte-Carlo estimation covers poly and linear readouts", "$.readout.kind")
    run = ctx.cfg["run"]
    ks = k_values(ctx.cfg)
    horizon = washout_length(ctx.constants.r, ctx.washout_tol)

    def one(item: tuple[int, int]) -> dict[str, Any]:
        i, k = item
        est = rademacher_mc(channels, ctx.r_max, ctx.c_max, ctx.process, k, horizon, run["mc_reps"],
                            np.random.SeedSequence([ctx.seed, 3, i]))
        bound = class_bound(ctx, k)
        return {
            "k": k,
            "mc_reps": est.mc_reps,
            "estimate": est.estimate,
            "std_err": est.std_err,
            "bound": bound,
            "dominated": bool(est.estimate + 3.0 * est.std_err <= bound),
        }

    rows = parallel_map(one, list(enumerate(ks)))
    return {
        "readout_kind": ctx.kind,
        "theta_size": ctx.theta_size,
        "horizon": horizon,
        "rows": rows,
        "bound_slope": loglog_slope(ks, [row["bound"] for row in rows]),
        "estimate_slope": loglog_slope(ks, [row["estimate"] for row in rows]),
        "dominated": all(row["dominated"] for row in rows),
    }


RADEMACHER_CSV_HEADER = ("k", "mc_reps", "estimate", "std_err", "bound", "dominated")


# --------------------------------------------------------------------------------------
# Sweeps
# --------------------------------------------------------------------------------------

SWEEP_CSV_HEADER = (
    "axis", "value", "variant", "n", "r_max", "c_max", "theta_size", "k", "m", "delta", "epsilon",
    "alpha_min", "r", "zeta_max", "validity", "l_h_bar_poly", "l_h_bar_sm", "rademacher_poly",
    "rademacher_lin", "rademacher_sm", "risk_total", "risk_total_general",
)


def _with_axis(cfg: dict, axis: str, value: float) -> tuple[dict, dict]:
    out = copy.deepcopy(cfg)
    extra: dict[str, Any] = {}
    if axis == "n":
        out["channel"]["n"] = int(value)
    elif axis == "m":
        out["run"]["m"] = int(value)
    elif axis == "k":
        out["run"]["k"] = int(value)
    elif axis == "r_max":
        out["readout"]["r_max"] = int(value)
    elif axis == "epsilon":
        out["channel"]["epsilon"] = float(value)
    elif axis == "alpha_min":
        if cfg["channel"]["variant"] != "rrr":
            raise ConfigError("alpha_min sweeps need the rrr variant", "$.sweep.axis")
        extra["alpha_min"] = float(value)
    elif axis == "theta_size":
        extra["theta_size"] = int(value)
    if int(out["run"]["k"] if isinstance(out["run"]["k"], int) else out["run"]["k"][0]) < 2:
        raise ConfigError("k must be at least 2", "$.sweep.values")
    return out, extra


def sweep_row(cfg: dict, axis: str, value: float, e0: tuple[float, float | None, str], log_base: float) -> dict:
    sub, extra = _with_axis(cfg, axis, value)
    ctx = build_context(sub, **extra)
    k = k_values(sub)[0]
    inputs = bound_inputs(ctx, e0)
    run = sub["run"]
    try:
        explicit = explicit_bound(ctx, inputs, run["m"], run["delta"], log_base)
        general = general_bound(ctx, inputs, run["m"], run["delta"], log_base)
    except ValueError as exc:
        raise ConfigError(str(exc), "$.sweep.values") from exc
    return {
        "axis": axis,
        "value": value,
        "variant": ctx.variant,
        "n": ctx.n,
        "r_max": ctx.r_max,
        "c_max": ctx.c_max,
        "theta_size": ctx.theta_size,
        "k": k,
        "m": run["m"],
        "delta": run["delta"],
        "epsilon": ctx.epsilon,
        "alpha_min": ctx.alpha_min,
        "r": ctx.constants.r,
        "zeta_max": explicit.zeta_max,
        "validity": explicit.valid,
        "l_h_bar_poly": lipschitz_bound_poly(ctx.n, ctx.r_max),
        "l_h_bar_sm": lipschitz_bound_sm(ctx.n, ctx.ell_max),
        "rademacher_poly": bd.rademacher_bound_poly(ctx.theta_size, ctx.n, ctx.r_max, ctx.c_max, k),
        "rademacher_lin": bd.rademacher_bound_lin(ctx.theta_size, ctx.c_max, k),
        "rademacher_sm": bd.rademacher_bound_sm(ctx.theta_size, ctx.n, ctx.c_max, k),
        "risk_total": explicit.total,
        "risk_total_general": general.total,
    }


def run_sweep(cfg: dict, log_base: float = math.e) -> list[dict[str, Any]]:
    if "sweep" not in cfg:
        raise ConfigError("sweep section required", "$.sweep")
    axis, values = cfg["sweep"]["axis"], cfg["sweep"]["values"]
    # E|loss(0, Y_0)| depends only on the target law, which no sweep axis touches.
    e0 = e_loss_zero(build_context(cfg))
    return parallel_map(lambda value: sweep_row(cfg, axis, value, e0, log_base), values)
