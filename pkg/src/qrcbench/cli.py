"""``qrcbench`` command line.

Exit codes: 0 success, 1 property-check failure, 2 bound not applicable at
the configured ``m``, 64 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from . import config as cfgmod
from . import experiment as ex
from .bounds import LOG_BASES
from .config import ConfigError

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID_BOUND = 2
EXIT_CONFIG = 64

VERIFY_MAX_N = 4
SIMULATE_MAX_N = 6

log = logging.getLogger("qrcbench")


def write_atomic(path: Path, text: str) -> None:
    """Write via a temporary sibling and rename, so readers never see partial files."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def csv_text(header: Sequence[str], rows: Sequence[dict[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(header), extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: "" if row.get(k) is None else row[k] for k in header})
    return buf.getvalue()


def envelope(command: str, cfg: dict, log_base: str, payload: Any) -> dict[str, Any]:
    return {
        "schema_version": cfgmod.SCHEMA_VERSION,
        "tool_version": __version__,
        "command": command,
        "config_hash": cfgmod.config_hash({k: v for k, v in cfg.items() if k != "output"}),
        "seed": cfg["run"]["seed"],
        "log_base": log_base,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "payload": payload,
    }


class Outputs:
    def __init__(self, cfg: dict, out_dir: Path, command: str, log_base: str):
        self.cfg = cfg
        self.dir = out_dir
        self.command = command
        self.log_base = log_base
        self.formats = set(cfg["output"]["formats"])
        self.written: list[Path] = []

    def json(self, payload: Any) -> None:
        if "json" in self.formats:
            path = self.dir / f"{self.command}.json"
            body = envelope(self.command, self.cfg, self.log_base, payload)
            write_atomic(path, json.dumps(body, indent=2, sort_keys=True) + "\n")
            self.written.append(path)

    def csv(self, header: Sequence[str], rows: Sequence[dict[str, Any]]) -> None:
        if "csv" in self.formats:
            path = self.dir / f"{self.command}.csv"
            write_atomic(path, csv_text(header, rows))
            self.written.append(path)


def _guard(ctx: ex.Context, limit: int, override: bool, command: str) -> None:
    if ctx.n > limit and not override:
        raise ConfigError(f"{command} is limited to n <= {limit}; pass --override-guards", "$.channel.n")


def cmd_bound(ctx: ex.Context, out: Outputs, args: argparse.Namespace) -> int:
    payload = ex.run_bound(ctx, LOG_BASES[args.log_base])
    out.json(payload)
    out.csv(ex.BOUND_CSV_HEADER, ex.bound_rows(payload))
    ok = payload["validity"]
    print(f"bound: variant={ctx.variant} m={ctx.cfg['run']['m']} validity={ok} total={payload['explicit']['total']}")
    return EXIT_OK if ok else EXIT_INVALID_BOUND


def cmd_verify(ctx: ex.Context, out: Outputs, args: argparse.Namespace) -> int:
    _guard(ctx, VERIFY_MAX_N, args.override_guards, "verify")
    checks = ex.run_verify(ctx, ex.build_channels(ctx))
    for check in checks:
        print(check.line())
    passed = all(c.passed for c in checks)
    out.json({"passed": passed, "checks": [c.to_dict() for c in checks]})
    out.csv(("name", "passed", "measured", "theory"), [c.to_dict() for c in checks])
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def cmd_simulate(ctx: ex.Context, out: Outputs, args: argparse.Namespace) -> int:
    _guard(ctx, SIMULATE_MAX_N, args.override_guards, "simulate")
    base = LOG_BASES[args.log_base]
    run = ctx.cfg["run"]
    inputs = ex.bound_inputs(ctx, ex.e_loss_zero(ctx))
    bound = ex.explicit_bound(ctx, inputs, run["m"], run["delta"], base)
    result = ex.simulate_once(ctx, ex.build_channels(ctx), ctx.seed, bound=bound, log_base=base)
    out.json({"risk": result, "bound": bound.to_dict()})
    out.csv(("seed", "m", "theta_index", "estimate", "generalisation", "std_err", "gap", "bound", "dominated"), [result])
    print(f"simulate: gap={result['gap']:.6g} bound={result['bound']} dominated={result['dominated']}")
    return EXIT_OK if bound.valid else EXIT_INVALID_BOUND


def cmd_rademacher(ctx: ex.Context, out: Outputs, args: argparse.Namespace) -> int:
    payload = ex.run_rademacher(ctx, ex.build_channels(ctx))
    out.json(payload)
    out.csv(ex.RADEMACHER_CSV_HEADER, payload["rows"])
    for row in payload["rows"]:
        print(f"rademacher: k={row['k']} estimate={row['estimate']:.6g} +- {row['std_err']:.2g} "
              f"bound={row['bound']:.6g} dominated={row['dominated']}")
    return EXIT_OK


def cmd_sweep(ctx: ex.Context, out: Outputs, args: argparse.Namespace) -> int:
    rows = ex.run_sweep(ctx.cfg, LOG_BASES[args.log_base])
    out.json({"axis": ctx.cfg["sweep"]["axis"], "rows": rows})
    out.csv(ex.SWEEP_CSV_HEADER, rows)
    print(f"sweep: {len(rows)} points over {ctx.cfg['sweep']['axis']}")
    return EXIT_OK


COMMANDS = {
    "bound": cmd_bound,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "rademacher": cmd_rademacher,
    "sweep": cmd_sweep,
}


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors, not the bound-validity exit code 2."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qrcbench", description="Quantum reservoir computing bound workbench")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--out", help="output directory (overrides output.dir)")
    parser.add_argument("--seed", type=int, help="master seed (overrides run.seed)")
    parser.add_argument("--override-guards", action="store_true", help="lift the n limits of verify/simulate")
    parser.add_argument("--log-base", choices=sorted(LOG_BASES), default="e")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = cfgmod.load(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed must be an unsigned 64-bit integer", "--seed")
            cfg["run"]["seed"] = args.seed
        if args.out is not None:
            cfg["output"]["dir"] = args.out
        if args.command == "sweep" and "sweep" not in cfg:
            raise ConfigError("sweep section required", "$.sweep")
        ctx = ex.build_context(cfg)
        out = Outputs(cfg, Path(cfg["output"]["dir"]), args.command, args.log_base)
        code = COMMANDS[args.command](ctx, out, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in out.written:
        log.info("wrote %s", path)
    return code


if __name__ == "__main__":
    sys.exit(main())
