"""Command-line entry point."""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ScenarioConfig, get_preset, presets
from .errors import ColmeError, ConfigError
from .separation import format_table, separation_table, table_csv

log = logging.getLogger("colme")


class _Parser(argparse.ArgumentParser):
    # argparse already exits with 2 on usage errors; keep the message short
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _scenario_args(p, overrides=True):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="scenario YAML file")
    src.add_argument("--preset", help="bundled scenario name (see `colme presets`)")
    if overrides:
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--realizations", type=int)
        p.add_argument("--agents", type=int, help="number of agents")
        p.add_argument("--horizon", type=int, help="number of time steps")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="colme", description="Collaborative mean estimation simulator.")
    sub = parser.add_subparsers(dest="command", metavar="{run,separation-table,presets,validate}",
                                parser_class=_Parser)

    run = sub.add_parser("run", help="simulate a scenario and write artifacts")
    _scenario_args(run)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--workers", type=int, default=1, help="parallel realizations")
    run.add_argument("--backend", choices=("compiled", "python"), help="kernel backend")
    run.add_argument("--bins", type=int, default=30, help="histogram bins")

    tab = sub.add_parser("separation-table", help="expected separation times per class pair")
    _scenario_args(tab, overrides=False)
    tab.add_argument("--csv", action="store_true", help="CSV instead of a text matrix")

    pre = sub.add_parser("presets", help="list bundled scenarios or print one as YAML")
    pre.add_argument("name", nargs="?")

    val = sub.add_parser("validate", help="check a scenario without running it")
    _scenario_args(val)
    return parser


def _load(args) -> ScenarioConfig:
    cfg = ScenarioConfig.load(args.config) if args.config else get_preset(args.preset)
    over = {}
    for flag, key in (("seed", "master_seed"), ("realizations", "realizations"),
                      ("agents", "n_agents"), ("horizon", "horizon")):
        if getattr(args, flag, None) is not None:
            over[key] = getattr(args, flag)
    if over:
        cfg = cfg.with_overrides(**over)
        if "horizon" in over:
            cfg = cfg.with_overrides(
                checkpoints=tuple(c for c in cfg.checkpoints if c <= cfg.horizon)
            )
    return cfg.validate()


def _cmd_run(args) -> int:
    from .harness import run_scenario, write_outputs

    cfg = _load(args)
    log.info("running %s: %d agents, %d steps, %d realizations",
             cfg.name, cfg.n_agents, cfg.horizon, cfg.realizations)
    metrics = run_scenario(cfg, workers=args.workers, backend=args.backend)
    out = write_outputs(metrics, args.out, bins=args.bins)
    (out / "config.yaml").write_text(cfg.dump())
    final = metrics.at(cfg.horizon)
    print(f"{cfg.name}: t={cfg.horizon} mse_collab={final['mse_collab']:.3e} "
          f"mse_oracle={final['mse_oracle']:.3e} "
          f"wrong_links={final['wrong_link_fraction']:.4f} -> {out}")
    return 0


def _cmd_table(args) -> int:
    cfg = _load(args)
    specs = cfg.class_specs
    if len(specs) < 2:
        raise ConfigError("separation table needs at least two classes")
    table = separation_table(specs, cfg.delta, cfg.z_delta)
    if args.csv:
        sys.stdout.write(table_csv(specs, table))
    else:
        print("(mean, sigma, kurtosis) separation times; fastest fold after each cell")
        print(format_table(specs, table))
    return 0


def _cmd_presets(args) -> int:
    table = presets()
    if args.name:
        sys.stdout.write(get_preset(args.name).dump())
        return 0
    for name, cfg in table.items():
        folds = "+".join(cfg.active_folds)
        extra = [x for x, on in (("weighted", cfg.weighting),
                                 ("reconnection", cfg.reconnection)) if on]
        print(f"{name:34s} {cfg.protocol:8s} {len(cfg.classes)} classes  folds={folds}"
              + (f"  {', '.join(extra)}" if extra else ""))
    return 0


def _cmd_validate(args) -> int:
    cfg = _load(args)
    print(f"{cfg.name}: ok")
    return 0


COMMANDS = {
    "run": _cmd_run,
    "separation-table": _cmd_table,
    "presets": _cmd_presets,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("COLME_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ColmeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
