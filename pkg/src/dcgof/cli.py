"""Command-line surface: fit models, run adequacy tests, run the study.

Exit codes: 0 success, 1 input/parse error, 2 model fit failure,
3 unreliable bootstrap, 10 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .boot import (
    DEFAULT_LEVELS,
    BootstrapConfig,
    RejectionTable,
    UnreliableBootstrapError,
    bootstrap_test,
    rejection_tables_to_csv,
    run_scenario,
    scenario_registry,
)
from .estimate import NonConvergenceError, fit_mle
from .model import AssumptionViolationError, LinkKind, ModelSpec, Series
from .stats import StatKind

__all__ = ["RunConfig", "load_series", "cmd_fit", "cmd_test", "cmd_mc", "main"]

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_FIT = 2
EXIT_BOOTSTRAP = 3
EXIT_INTERNAL = 10


class ParseError(ValueError):
    """Invalid input data or flags."""


@dataclass
class RunConfig:
    """Resolved settings of one CLI invocation."""

    command: str
    input: str | None = None
    out: str = "."
    model_file: str | None = None
    link: str = "probit"
    ylags: int = 0
    interactions: bool = False
    support_size: int = 1
    ordered: bool = False
    B: int = 199
    seed: int = 0
    levels: tuple[float, ...] = DEFAULT_LEVELS
    stats: tuple[str, ...] | None = None
    m: tuple[int, ...] = (1, 2, 25)
    scenarios: tuple[int, ...] = ()
    T: tuple[int, ...] = ()
    R: int = 0
    threads: int = 1

    def model_spec(self, n_regressors: int) -> ModelSpec:
        if self.model_file:
            with open(self.model_file) as fh:
                spec = ModelSpec.from_json_dict(json.load(fh))
            if spec.n_regressors != n_regressors:
                raise ParseError(
                    f"model file declares {spec.n_regressors} regressors, data has {n_regressors}"
                )
            return spec
        link = {"logit": "logistic"}.get(self.link, self.link)
        return ModelSpec(
            link=LinkKind(link),
            support_size=self.support_size,
            q=self.ylags,
            n_regressors=n_regressors,
            interactions=self.interactions,
            ordered=self.ordered or self.support_size >= 2,
        )

    def stat_kinds(self) -> tuple[StatKind, ...]:
        if self.stats:
            return tuple(StatKind.from_name(n) for n in self.stats)
        names = ["CvM0", "CvM1", "CvM2", "KS0", "KS1", "KS2"]
        names += [f"BPN_{m}" for m in self.m]
        names += ["JB"]
        names += [f"BPD_{m}" for m in self.m]
        return tuple(StatKind.from_name(n) for n in names)

    def echo(self) -> dict:
        """Configuration echo for reports; worker count omitted on purpose
        so outputs are byte-identical across --threads settings."""
        out = {
            "command": self.command,
            "B": self.B,
            "seed": self.seed,
            "levels": list(self.levels),
            "m": list(self.m),
        }
        if self.command == "mc":
            out["scenarios"] = list(self.scenarios)
            out["T"] = list(self.T)
            out["R"] = self.R
        return out


def load_series(path: str, support_size: int = 1) -> Series:
    """Read a series from CSV: integer column ``y`` plus real ``x1..xk``.

    Raises :class:`ParseError` naming the offending row and column.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if "y" not in header:
            raise ParseError(f"{path}: header must contain a column named 'y'")
        y_col = header.index("y")
        x_cols = []
        for k in range(1, len(header)):
            name = f"x{k}"
            if name in header:
                x_cols.append(header.index(name))
            else:
                break
        expected = {"y"} | {f"x{k+1}" for k in range(len(x_cols))}
        extra = set(header) - expected
        if extra:
            raise ParseError(f"{path}: unexpected columns {sorted(extra)}; use y, x1..xk")
        ys: list[int] = []
        xs: list[list[float]] = []
        for row_num, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise ParseError(f"{path}: row {row_num} has {len(row)} fields, expected {len(header)}")
            raw = row[y_col].strip()
            try:
                y_val = int(raw)
            except ValueError:
                raise ParseError(f"{path}: row {row_num}, column y: {raw!r} is not an integer") from None
            if not 0 <= y_val <= support_size:
                raise ParseError(
                    f"{path}: row {row_num}, column y: value {y_val} outside {{0..{support_size}}}"
                )
            ys.append(y_val)
            x_row = []
            for k, col in enumerate(x_cols, start=1):
                raw = row[col].strip()
                try:
                    x_row.append(float(raw))
                except ValueError:
                    raise ParseError(
                        f"{path}: row {row_num}, column x{k}: {raw!r} is not a number"
                    ) from None
            xs.append(x_row)
        if not ys:
            raise ParseError(f"{path}: no data rows")
    return Series(y=np.array(ys), x=np.array(xs).reshape(len(ys), len(x_cols)))


def _write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)


def cmd_fit(config: RunConfig) -> int:
    series = load_series(config.input, config.support_size)
    spec = config.model_spec(series.n_regressors)
    result = fit_mle(spec, series)
    payload = {"config": config.echo(), "fit": result.to_json_dict(), "model": spec.to_json_dict()}
    _write(os.path.join(config.out, "fit.json"), json.dumps(payload, indent=2, sort_keys=True) + "\n")
    theta = result.theta_hat
    print(f"log-likelihood {result.loglik:.4g} after {result.iterations} iterations "
          f"(converged={result.converged})")
    for name, vals in (("pi0", [theta.pi0]), ("delta", theta.delta), ("beta", theta.beta),
                       ("gamma", theta.gamma), ("mu", theta.mu)):
        if vals:
            print(f"  {name}: " + ", ".join(f"{v:.4g}" for v in vals))
    return EXIT_OK if result.converged else EXIT_FIT


def _report_text(report) -> str:
    lines = [f"{'statistic':<10} {'value':>12} {'p-value':>10}"]
    for s in report.statistics:
        lines.append(f"{s.name:<10} {s.value:>12.4g} {s.p_value:>10.4g}")
    lines.append(f"bootstrap replications: {report.B} (failed fits: {report.failed_fits})")
    return "\n".join(lines) + "\n"


def cmd_test(config: RunConfig) -> int:
    series = load_series(config.input, config.support_size)
    spec = config.model_spec(series.n_regressors)
    boot_config = BootstrapConfig(B=config.B, master_seed=config.seed, stats=config.stat_kinds())
    report = bootstrap_test(spec, series, boot_config)
    payload = {"config": config.echo(), "model": spec.to_json_dict(), "report": report.to_json_dict()}
    _write(os.path.join(config.out, "report.json"), json.dumps(payload, indent=2, sort_keys=True) + "\n")
    text = _report_text(report)
    _write(os.path.join(config.out, "report.txt"), text)
    print(text, end="")
    return EXIT_OK


def cmd_mc(config: RunConfig) -> int:
    registry = {s.id: s for s in scenario_registry()}
    for sid in config.scenarios:
        if sid not in registry:
            raise ParseError(f"unknown scenario id {sid}; valid ids are 1..11")
    if not config.scenarios or not config.T or config.R <= 0:
        raise ParseError("mc requires --scenarios, --T and --R")
    tables: list[RejectionTable] = []
    for T in config.T:
        for sid in config.scenarios:
            tables.append(
                run_scenario(
                    registry[sid],
                    T=T,
                    R=config.R,
                    master_seed=config.seed,
                    stats=config.stat_kinds(),
                    levels=config.levels,
                    threads=config.threads,
                )
            )
    csv_text = rejection_tables_to_csv(tables)
    _write(os.path.join(config.out, "rejections.csv"), csv_text)
    payload = {"config": config.echo(), "tables": [t.to_json_dict() for t in tables]}
    _write(os.path.join(config.out, "rejections.json"),
           json.dumps(payload, indent=2, sort_keys=True) + "\n")
    lines = []
    for tab in tables:
        lines.append(f"scenario {tab.scenario_id} ({tab.label}), T={tab.T}, "
                     f"R={tab.R} (effective {tab.R_effective})")
        for i, level in enumerate(tab.levels):
            cells = "  ".join(f"{name}={tab.rates[i, j]:.4g}" for j, name in enumerate(tab.stat_names))
            lines.append(f"  {100 * level:g}%: {cells}")
    summary = "\n".join(lines) + "\n"
    _write(os.path.join(config.out, "summary.txt"), summary)
    print(summary, end="")
    return EXIT_OK


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcgof",
        description="Adequacy tests for the conditional distribution of dynamic discrete choice models",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("fit", "test", "mc"):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON config file; flags override its keys")
        p.add_argument("--input", default=None, help="CSV input with columns y, x1..xk")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--model-file", default=None, help="model JSON file instead of flags")
        p.add_argument("--link", default=None, choices=["probit", "logit", "chisq1"])
        p.add_argument("--ylags", type=int, default=None, help="number of outcome lags q")
        p.add_argument("--interactions", action="store_true", default=None)
        p.add_argument("--J", type=int, default=None, dest="support_size",
                       help="support size (outcomes in 0..J)")
        p.add_argument("--ordered", action="store_true", default=None)
        p.add_argument("--B", type=int, default=None, help="bootstrap replications")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--levels", type=str, default=None, help="comma list, e.g. 0.1,0.05,0.01")
        p.add_argument("--stats", type=str, default=None, help="comma list of statistic names")
        p.add_argument("--m", type=str, default=None, help="comma list of Box-Pierce lags")
        p.add_argument("--scenarios", type=str, default=None, help="comma list of scenario ids")
        p.add_argument("--T", type=str, default=None, help="comma list of sample sizes")
        p.add_argument("--R", type=int, default=None, help="Monte Carlo replications")
        p.add_argument("--threads", type=int, default=None)
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    file_conf: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                file_conf = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read config {args.config}: {exc}") from exc
    config = RunConfig(command=args.command)

    def pick(flag_name, conf_key, default, convert=lambda v: v):
        flag = getattr(args, flag_name, None)
        if flag is not None:
            return convert(flag) if isinstance(flag, str) else flag
        if conf_key in file_conf:
            raw = file_conf[conf_key]
            return convert(raw) if isinstance(raw, str) else raw
        return default

    config.input = pick("input", "input", None)
    config.out = pick("out", "out", ".")
    config.model_file = pick("model_file", "model_file", None)
    config.link = pick("link", "link", "probit")
    config.ylags = int(pick("ylags", "ylags", 0))
    config.interactions = bool(pick("interactions", "interactions", False))
    config.support_size = int(pick("support_size", "J", 1))
    config.ordered = bool(pick("ordered", "ordered", False))
    config.B = int(pick("B", "B", 199))
    config.seed = int(pick("seed", "seed", 0))
    config.levels = tuple(pick("levels", "levels", DEFAULT_LEVELS, _float_list))
    stats = pick("stats", "stats", None, lambda s: tuple(v.strip() for v in s.split(",") if v.strip()))
    config.stats = tuple(stats) if stats else None
    config.m = tuple(int(v) for v in pick("m", "m", (1, 2, 25), _int_list))
    config.scenarios = tuple(int(v) for v in pick("scenarios", "scenarios", (), _int_list))
    config.T = tuple(int(v) for v in pick("T", "T", (), _int_list))
    config.R = int(pick("R", "R", 0))
    config.threads = int(pick("threads", "threads", 1))
    for level in config.levels:
        if not 0.0 < level < 1.0:
            raise ParseError(f"level {level} outside (0, 1)")
    if config.command in ("fit", "test") and not config.input:
        raise ParseError(f"{config.command} requires --input")
    return config


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _resolve_config(args)
        if config.command == "fit":
            return cmd_fit(config)
        if config.command == "test":
            return cmd_test(config)
        return cmd_mc(config)
    except (ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NonConvergenceError, AssumptionViolationError) as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return EXIT_FIT
    except UnreliableBootstrapError as exc:
        print(f"bootstrap error: {exc}", file=sys.stderr)
        return EXIT_BOOTSTRAP
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
