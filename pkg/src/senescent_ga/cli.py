"""Command-line entry point: ``senescent-ga <subcommand> [flags]``.

Every default is the reference experimental constant, so the shortest command
line reproduces the original setup. Exit codes: 0 success, 1 usage error,
2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .engines import ConfigurationError, StrategyConfig, Variant
from .experiment import (
    SWEEP_PARAMS, CampaignSummary, compare, load_summary, run_campaign, sweep, write_reports,
)
from .torus import CaConfig
from .tsp import generate_instance, load_instance, save_instance

OUT_ENV = "SENESCENT_GA_OUT"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


class _Formatter(argparse.ArgumentDefaultsHelpFormatter):
    pass


def _checked(kind, test, what):
    def convert(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value {text!r}") from None
        if not test(value):
            raise argparse.ArgumentTypeError(f"{text} is out of range ({what})")
        return value
    return convert


positive_float = _checked(float, lambda v: v > 0, "must be > 0")
nonneg_float = _checked(float, lambda v: v >= 0, "must be >= 0")
positive_int = _checked(int, lambda v: v >= 1, "must be >= 1")
nonneg_int = _checked(int, lambda v: v >= 0, "must be >= 0")
probability = _checked(float, lambda v: 0 <= v <= 1, "must be in [0, 1]")


def _add_instance(p):
    src = p.add_argument_group("instance (exactly one source)")
    src.add_argument("--instance", metavar="PATH", help="instance file (EUC2D text format)")
    src.add_argument("--instance-seed", type=int, metavar="N",
                     help="generate a uniform random instance from this seed instead")
    src.add_argument("--cities", type=positive_int, default=100, help="generated instance size")
    src.add_argument("--extent", type=positive_float, default=1000.0,
                     help="generated cities lie in [0, extent)^2")


def _add_strategy(p, extra_choices=()):
    g = p.add_argument_group("strategy")
    g.add_argument("--strategy", choices=[v.value for v in Variant] + list(extra_choices),
                   required=True, help="replacement strategy")
    g.add_argument("--pop-size", type=positive_int, default=30, help="population size")
    g.add_argument("--breed-fraction", type=probability, default=0.6,
                   help="fraction that breeds and is replaced (fitness/rapid/gradual)")
    g.add_argument("--max-age", type=nonneg_float, default=25,
                   help="rapid: generations survived before forced replacement")
    g.add_argument("--divisor", type=positive_float, default=1000.0,
                   help="gradual: v in distance + age^3 / v")
    g.add_argument("--soma-budget", type=positive_float, default=52.0,
                   help="soma: starting life budget in generations")
    g.add_argument("--mutation-rate", type=probability, default=1e-4, help="per-gene swap chance")


def _add_output(p, reps_default=100):
    g = p.add_argument_group("output")
    g.add_argument("--reps", type=positive_int, default=reps_default, help="repetitions")
    g.add_argument("--seed", type=int, default=0, help="base seed; run i uses seed + i")
    g.add_argument("--jobs", type=positive_int, default=1, help="worker processes")
    g.add_argument("--out", default=os.environ.get(OUT_ENV, "results"),
                   help=f"output directory (env {OUT_ENV})")
    g.add_argument("--format", default="csv,json", help="comma list of csv, json")
    g.add_argument("--trace", action="store_true", help="write per-generation best-distance traces")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="senescent-ga", description=__doc__.splitlines()[0],
                     formatter_class=_Formatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text, formatter_class=_Formatter)
        p.add_argument("--config", metavar="FILE",
                       help="flat 'key = value' file; explicit flags override it")
        return p

    p = add("gen-instance", "write a seeded uniform random instance file")
    p.add_argument("--seed", type=int, default=1, help="instance seed")
    p.add_argument("--cities", type=positive_int, default=100, help="number of cities")
    p.add_argument("--extent", type=positive_float, default=1000.0,
                   help="cities lie in [0, extent)^2")
    p.add_argument("--out", required=True, metavar="PATH", help="file to write")

    p = add("run", "one seeded run of a panmictic strategy")
    _add_instance(p)
    _add_strategy(p)
    p.add_argument("--generations", type=nonneg_int, default=20_000, help="generations per run")
    _add_output(p, reps_default=1)

    p = add("campaign", "repeated runs of one strategy with aggregate statistics")
    _add_instance(p)
    _add_strategy(p)
    p.add_argument("--generations", type=nonneg_int, default=20_000, help="generations per run")
    _add_output(p)

    p = add("sweep", "mean final distance over a range of one parameter")
    _add_instance(p)
    _add_strategy(p, extra_choices=("ca",))
    p.add_argument("--generations", type=nonneg_int, default=None,
                   help="default 20000, or 4500 for --strategy ca")
    p.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--step", type=positive_float, required=True)
    p.add_argument("--samples", type=positive_int, default=5, help="runs per parameter value")
    _add_output(p)

    p = add("ca", "cellular GA on a torus, ageing or immortal")
    _add_instance(p)
    p.add_argument("--max-age", type=nonneg_float, default=45, help="programmed death age")
    p.add_argument("--immortal", action="store_true", help="max age beyond the run length")
    p.add_argument("--generations", type=nonneg_int, default=4500, help="sweeps per run")
    p.add_argument("--height", type=positive_int, default=10, help="grid rows")
    p.add_argument("--width", type=positive_int, default=10, help="grid columns")
    p.add_argument("--mutation-rate", type=probability, default=1e-4, help="per-gene swap chance")
    p.add_argument("--snapshot", metavar="DIR",
                   help="dump a distance/age text matrix per generation (first run only)")
    _add_output(p)

    p = add("compare", "pairwise Welch comparison of campaign summary files")
    p.add_argument("summaries", nargs="+", metavar="SUMMARY_JSON")
    return parser


def _config_tokens(path: str) -> list[str]:
    tokens = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"--config {path}:{lineno}: expected 'key = value'")
        flag = "--" + key.strip().replace("_", "-")
        value = value.strip()
        if value.lower() in ("true", "yes", "on"):
            tokens.append(flag)
        elif value.lower() not in ("false", "no", "off"):
            tokens += [flag, value]
    return tokens


def parse_args(argv: list[str]) -> argparse.Namespace:
    """Parse ``argv``; config-file values sit before explicit flags so the flags win."""
    parser = build_parser()
    argv = list(argv)
    if "--config" in argv[1:]:
        i = argv.index("--config")
        if i + 1 >= len(argv):
            raise UsageError("--config: expected a file path")
        argv = argv[:1] + _config_tokens(argv[i + 1]) + argv[1:i] + argv[i + 2:]
    args = parser.parse_args(argv)
    _validate(args)
    return args


def _validate(args) -> None:
    if hasattr(args, "instance_seed") and args.command != "gen-instance":
        if (args.instance is None) == (args.instance_seed is None):
            raise UsageError("give exactly one of --instance or --instance-seed")
    if hasattr(args, "format"):
        bad = set(args.format.split(",")) - {"csv", "json"}
        if bad:
            raise UsageError(f"--format: unknown format(s) {sorted(bad)}")
    if args.command == "sweep":
        if (args.param == "ca_max_age") != (args.strategy == "ca"):
            raise UsageError("--param ca_max_age goes with --strategy ca, and only with it")
        if args.lo > args.hi:
            raise UsageError("--lo must not exceed --hi")
    try:
        if getattr(args, "strategy", None) not in (None, "ca"):
            strategy_config(args)
        if args.command == "ca" or getattr(args, "strategy", None) == "ca":
            ca_config(args)
    except ConfigurationError as exc:
        raise UsageError(str(exc)) from None


def strategy_config(args) -> StrategyConfig:
    return StrategyConfig(
        variant=Variant(args.strategy), pop_size=args.pop_size, breed_fraction=args.breed_fraction,
        max_age=args.max_age, divisor_v=args.divisor, soma_start_budget=args.soma_budget,
        mutation_rate=args.mutation_rate)


def ca_config(args) -> CaConfig:
    generations = args.generations if args.generations is not None else 4500
    if getattr(args, "immortal", False):
        return CaConfig.immortal(generations, height=args.height, width=args.width,
                                 mutation_rate=args.mutation_rate)
    return CaConfig(max_age=args.max_age, generations=generations,
                    height=getattr(args, "height", 10), width=getattr(args, "width", 10),
                    mutation_rate=args.mutation_rate)


def _instance(args):
    if args.instance is not None:
        return load_instance(args.instance)
    return generate_instance(args.instance_seed, args.cities, args.extent)


def _print_summary(s: CampaignSummary) -> None:
    frac = "n/a" if s.mean_senescent_fraction is None else f"{s.mean_senescent_fraction:.6f}"
    print(f"{'strategy':<12}{'reps':>6}{'mean':>16}{'std':>14}{'min':>16}{'max':>16}"
          f"{'last_impr':>14}{'senescent':>12}")
    print(f"{s.strategy:<12}{s.repetitions:>6}{s.mean_distance:>16.6f}{s.std_distance:>14.6f}"
          f"{s.min_distance:>16.6f}{s.max_distance:>16.6f}{s.mean_last_improvement:>14.6f}{frac:>12}")
    if s.std_is_degenerate:
        print("(single repetition: std reported as 0)")


def _print_run(rec) -> None:
    sen = "-" if rec.deaths_senescent is None else rec.deaths_senescent
    print(f"{rec.strategy} seed={rec.seed} best={rec.final_best_distance:.6f} "
          f"last_improvement={rec.last_improvement_generation} deaths={rec.deaths_total} "
          f"senescent={sen} time={rec.wall_time_seconds:.2f}s")


def _campaign(args, cfg, generations):
    inst = _instance(args)
    summary, records = run_campaign(inst, cfg, args.reps, args.seed, generations, args.jobs,
                                    trace=args.trace)
    for rec in records:
        _print_run(rec)
    _print_summary(summary)
    summary.config["instance"] = args.instance or f"generated seed={args.instance_seed} " \
                                                  f"n={args.cities} extent={args.extent}"
    paths = write_reports(records, summary, args.out, args.format.split(","))
    for path in paths[:2]:
        print(f"wrote {path}")
    return summary, records


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return _dispatch(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "gen-instance":
        inst = generate_instance(args.seed, args.cities, args.extent)
        save_instance(inst, args.out)
        print(f"wrote {args.out} ({inst.n} cities, fingerprint {inst.fingerprint})")
    elif args.command in ("run", "campaign"):
        _campaign(args, strategy_config(args), args.generations)
    elif args.command == "ca":
        cfg = ca_config(args)
        if args.snapshot:
            from .torus import run_ca
            run_ca(_instance(args), cfg, args.seed, snapshot_dir=Path(args.snapshot))
        _campaign(args, cfg, cfg.generations)
    elif args.command == "sweep":
        inst = _instance(args)
        if args.strategy == "ca":
            cfg = ca_config(args)
            generations = cfg.generations
        else:
            cfg = strategy_config(args)
            generations = args.generations if args.generations is not None else 20_000
        table = sweep(inst, cfg, args.param, args.lo, args.hi, args.step, args.samples,
                      args.seed, generations, args.jobs)
        print(f"{args.param:>12}{'samples':>9}{'mean':>16}{'std':>14}")
        for row in table.rows:
            print(f"{row.value:>12g}{row.samples:>9}{row.mean_distance:>16.6f}{row.std_distance:>14.6f}")
        print(f"argmin {args.param} = {table.argmin:g}")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        doc = table.to_dict() | {"strategy": args.strategy, "instance_fingerprint": inst.fingerprint,
                                 "base_seed": args.seed, "generations": generations,
                                 "config": cfg.params(), "version": __version__}
        path = out / f"sweep_{args.strategy}_{args.param}.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        print(f"wrote {path}")
    elif args.command == "compare":
        report = compare([load_summary(p) for p in args.summaries])
        print(report.format_table())
    return 0


if __name__ == "__main__":
    sys.exit(main())
