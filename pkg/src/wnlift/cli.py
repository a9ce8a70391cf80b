"""Command-line runner for the registered experiments.

Usage::

    wnlift list
    wnlift run ibp --n 2 --M 24
    wnlift run --experiment beta --n 2 --N 3 --out results
    wnlift run all --config run.cfg

A config file holds flat ``key=value`` lines whose keys mirror the long flags
(``a-list`` and ``a_list`` are both accepted); ``#`` starts a comment. Flags on
the command line override the file.

Exit codes: 0 when every verdict passes, 1 when any fails, 2 for an invalid
configuration or an unknown experiment.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field

from .experiments import REGISTRY, write_summary

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INVALID = 2

_INT_KEYS = ("n", "M", "K", "N", "seed")
_FLOAT_KEYS = ("eps",)


class ConfigError(ValueError):
    """Raised for malformed or out-of-range run configurations."""


@dataclass
class RunConfig:
    """Parsed run parameters; ``None`` means the experiment default."""

    experiments: list = field(default_factory=list)
    n: int | None = None
    M: int | None = None
    K: int | None = None
    N: int | None = None
    eps: float | None = None
    a_list: tuple | None = None
    mode: str | None = None
    out: str = "results"
    seed: int | None = None

    def validate(self) -> None:
        if not self.experiments:
            raise ConfigError("no experiment given")
        for name in self.experiments:
            if name not in REGISTRY:
                raise ConfigError(f"unknown experiment {name!r}")
        for key in ("M", "K", "N", "n"):
            val = getattr(self, key)
            if val is not None and val <= 0:
                raise ConfigError(f"{key} must be positive")
        if self.eps is not None and self.eps <= 0:
            raise ConfigError("eps must be positive")
        if self.a_list is not None and any(not 0 < a <= 1 for a in self.a_list):
            raise ConfigError("a-list entries must lie in (0, 1]")

    def params(self) -> dict:
        return {
            "n": self.n,
            "M": self.M,
            "K": self.K,
            "N": self.N,
            "eps": self.eps,
            "a_list": self.a_list,
            "mode": self.mode,
            "seed": self.seed,
        }


def _convert(key: str, raw: str):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key == "a_list":
            return tuple(float(s) for s in raw.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return raw


def read_config_file(path: str) -> dict:
    """Parse a flat ``key=value`` file into RunConfig field values."""
    values = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    known = set(RunConfig.__dataclass_fields__) | {"experiment"}
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in ("experiment", "experiments"):
            values["experiments"] = raw.replace(",", " ").split()
        else:
            values[key] = _convert(key, raw)
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wnlift", description="Desk-scale lift experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list registered experiments")
    run = sub.add_parser("run", help="run experiments and write CSV reports")
    run.add_argument("names", nargs="*", help="experiment names, or 'all'")
    run.add_argument("--experiment", action="append", default=[], help="experiment name (repeatable)")
    run.add_argument("--n", type=int, help="complex dimension of the torus")
    run.add_argument("--M", type=int, help="base grid points per real axis")
    run.add_argument("--K", type=int, help="fibre grid points per chart axis")
    run.add_argument("--N", type=int, help="simplex dimension")
    run.add_argument("--eps", type=float, help="fixture amplitude")
    run.add_argument("--a-list", dest="a_list", help="comma-separated values of a")
    run.add_argument("--mode", choices=("thm", "cor"), help="ibp mode at n = 2")
    run.add_argument("--out", help="output directory (default: results)")
    run.add_argument("--seed", type=int, help="seed for sampled inputs")
    run.add_argument("--config", help="key=value config file")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    names = list(args.names) + list(args.experiment)
    if names:
        values["experiments"] = names
    for key in ("n", "M", "K", "N", "eps", "mode", "out", "seed"):
        val = getattr(args, key)
        if val is not None:
            values[key] = val
    if args.a_list is not None:
        values["a_list"] = _convert("a_list", args.a_list)
    exps = values.get("experiments", [])
    if "all" in exps:
        values["experiments"] = list(REGISTRY)
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def list_experiments() -> str:
    lines = []
    for exp in REGISTRY.values():
        defaults = " ".join(f"{k}={v}" for k, v in exp.defaults.items() if v is not None)
        lines.append(f"{exp.name:<15} {exp.description} [{defaults}]")
    return "\n".join(lines)


def run(cfg: RunConfig, stream=None) -> int:
    """Run every experiment in ``cfg``, write CSVs and return the exit code."""
    stream = sys.stdout if stream is None else stream
    reports = []
    for name in cfg.experiments:
        try:
            report = REGISTRY[name].run(**cfg.params())
        except ValueError as exc:
            print(f"{name}: invalid configuration: {exc}", file=sys.stderr)
            return EXIT_INVALID
        except RuntimeError as exc:
            print(f"{name}: aborted: {exc}", file=stream)
            return EXIT_FAIL
        report.write_csv(cfg.out)
        print(report.summary_line(), file=stream)
        reports.append(report)
    write_summary(reports, cfg.out)
    return EXIT_PASS if all(r.verdict for r in reports) else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "list":
        print(list_experiments())
        return EXIT_PASS
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("registered experiments:\n" + list_experiments(), file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
