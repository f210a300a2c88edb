"""Command-line front end.

Two subcommands:

  lansir campaign --class gen --runs 7150 --seed 1 --out results/gen
  lansir sweep --scenario base.json --param dt_mal_b --points 50 --out results/sweep

A JSON config file (--config) mirrors the campaign configuration, including
a "domains" map of {parameter: [lo, hi]} box overrides; flags given on the
command line take precedence over file values.
"""

from __future__ import annotations

import argparse
import json
import sys

from .campaign import (
    CampaignConfig,
    run_campaign,
    run_sweep,
    write_sweep,
)
from .design import ParameterDomain, SCENARIO_CLASSES
from .integrator import SimConfig
from .model import Scenario
from .stats import LONG_COMBAT_THRESHOLD

# config-file keys holding campaign settings, mapped to argparse dests
_CAMPAIGN_KEYS = {
    "class": "scenario_class",
    "transform": "transformation",
    "runs": "runs",
    "seed": "seed",
    "dt": "dt",
    "eps_stop": "eps_stop",
    "eps_kin": "eps_kin",
    "t_max": "t_max",
    "out": "out",
    "format": "fmt",
    "workers": "workers",
    "record_trajectories": "record_trajectories",
    "superiority_partition": "superiority_partition",
    "superiority_filter": "superiority_filter",
    "dt_filter": "dt_filter",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lansir",
        description="Monte-Carlo analysis of the coupled attrition / "
                    "malware-epidemic model",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    camp = sub.add_parser("campaign", help="run a Monte-Carlo campaign")
    camp.add_argument("--class", dest="scenario_class",
                      choices=SCENARIO_CLASSES, default=None,
                      help="scenario class to sample (default gen)")
    camp.add_argument("--transform", dest="transformation",
                      choices=("A1", "A2", "A3", "D1", "D2", "D3"),
                      default=None,
                      help="pair every run with its transformed scenario")
    camp.add_argument("--runs", type=int, default=None)
    camp.add_argument("--seed", type=int, default=None)
    camp.add_argument("--dt", type=float, default=None)
    camp.add_argument("--eps-stop", dest="eps_stop", type=float, default=None)
    camp.add_argument("--eps-kin", dest="eps_kin", type=float, default=None)
    camp.add_argument("--t-max", dest="t_max", type=float, default=None)
    camp.add_argument("--out", default=None, help="output directory")
    camp.add_argument("--format", dest="fmt", default=None,
                      help="comma list of csv,json (default both)")
    camp.add_argument("--workers", type=int, default=None,
                      help="worker threads (0 = one per CPU)")
    camp.add_argument("--config", default=None,
                      help="JSON config file; flags override file values")
    camp.add_argument("--record-trajectories", dest="record_trajectories",
                      action="store_true", default=None)
    camp.add_argument("--superiority-partition", dest="superiority_partition",
                      action="store_true", default=None)
    camp.add_argument("--dt-filter", dest="dt_filter", type=float,
                      default=None,
                      help="duration threshold on the pure-kinetic companion")

    swp = sub.add_parser("sweep", help="sweep one scenario parameter")
    swp.add_argument("--scenario", default=None,
                     help="JSON file with the 22 base scenario values")
    swp.add_argument("--param", default=None, help="scenario field to vary")
    swp.add_argument("--points", type=int, default=None)
    swp.add_argument("--dt", type=float, default=None)
    swp.add_argument("--eps-stop", dest="eps_stop", type=float, default=None)
    swp.add_argument("--eps-kin", dest="eps_kin", type=float, default=None)
    swp.add_argument("--t-max", dest="t_max", type=float, default=None)
    swp.add_argument("--out", default=None)
    swp.add_argument("--format", dest="fmt", default=None)
    swp.add_argument("--config", default=None,
                     help="JSON config file; flags override file values")
    return parser


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _merged(args: argparse.Namespace, file_cfg: dict, key: str, dest: str,
            default):
    flag = getattr(args, dest, None)
    if flag is not None:
        return flag
    if key in file_cfg:
        return file_cfg[key]
    return default


def _sim_config(args, file_cfg) -> SimConfig:
    return SimConfig(
        dt=_merged(args, file_cfg, "dt", "dt", 0.05),
        eps_stop=_merged(args, file_cfg, "eps_stop", "eps_stop", 3.0e-4),
        eps_kin=_merged(args, file_cfg, "eps_kin", "eps_kin", 0.01),
        t_max=_merged(args, file_cfg, "t_max", "t_max", 2000.0),
    )


def _formats(args, file_cfg) -> tuple:
    raw = _merged(args, file_cfg, "format", "fmt", "csv,json")
    formats = tuple(part.strip() for part in raw.split(",") if part.strip())
    bad = set(formats) - {"csv", "json"}
    if bad:
        raise SystemExit(f"unknown output format(s): {sorted(bad)}")
    return formats


def _cmd_campaign(args) -> int:
    file_cfg = _load_config_file(args.config)
    domains = ParameterDomain(
        {k: tuple(v) for k, v in file_cfg.get("domains", {}).items()})
    cfg = CampaignConfig(
        scenario_class=_merged(args, file_cfg, "class", "scenario_class", "gen"),
        transformation=_merged(args, file_cfg, "transform", "transformation", None),
        runs=_merged(args, file_cfg, "runs", "runs", 7150),
        seed=_merged(args, file_cfg, "seed", "seed", 0),
        sim=_sim_config(args, file_cfg),
        domains=domains,
        workers=_merged(args, file_cfg, "workers", "workers", 0),
        record_trajectories=bool(_merged(
            args, file_cfg, "record_trajectories", "record_trajectories", False)),
        superiority_partition=bool(_merged(
            args, file_cfg, "superiority_partition", "superiority_partition",
            False)),
        superiority_filter=_merged(
            args, file_cfg, "superiority_filter", "superiority_filter", None),
        dt_filter=_merged(args, file_cfg, "dt_filter", "dt_filter",
                          LONG_COMBAT_THRESHOLD),
    )
    out_dir = _merged(args, file_cfg, "out", "out", None)
    result = run_campaign(cfg, out_dir=out_dir, formats=_formats(args, file_cfg))
    s = result.summary
    print(f"class={cfg.scenario_class} transform={cfg.transformation} "
          f"runs={cfg.runs} failures={result.failure_count}")
    print(f"mean delta_n={s.observables['delta_n'].mean:.6f} "
          f"var delta_n={s.observables['delta_n'].variance:.6f} "
          f"risk={s.risk:.6f} mean delta_t={s.observables['delta_t'].mean:.3f}")
    if result.comparison is not None:
        c = result.comparison
        print(f"mean d_delta_n={c.d['delta_n'].mean:.6f} "
              f"win-change fraction={c.win_change_fraction:.4f} "
              f"(long combat: {c.long_combat_win_change_fraction:.4f})")
    if out_dir is not None:
        print(f"results written to {out_dir}")
    return 0


def _cmd_sweep(args) -> int:
    file_cfg = _load_config_file(args.config)
    scenario_src = args.scenario or file_cfg.get("scenario")
    if scenario_src is None:
        raise SystemExit("sweep needs --scenario FILE or a 'scenario' "
                         "object in --config")
    if isinstance(scenario_src, str):
        with open(scenario_src) as fh:
            scenario_values = json.load(fh)
    else:
        scenario_values = scenario_src
    base = Scenario.from_values(scenario_values)
    parameter = _merged(args, file_cfg, "param", "param", None)
    if parameter is None:
        raise SystemExit("sweep needs --param NAME")
    points = _merged(args, file_cfg, "points", "points", 50)
    domains = ParameterDomain(
        {k: tuple(v) for k, v in file_cfg.get("domains", {}).items()})
    sweep = run_sweep(base, parameter, points,
                      sim=_sim_config(args, file_cfg), domains=domains)
    out_dir = _merged(args, file_cfg, "out", "out", None)
    if out_dir is not None:
        write_sweep(sweep, parameter, out_dir, formats=_formats(args, file_cfg))
        print(f"sweep of {parameter} ({len(sweep)} points) written to {out_dir}")
    else:
        for pt in sweep:
            print(f"{parameter}={pt.value:.6g} delta_n={pt.delta_n:.6f} "
                  f"t_peak_I_r={pt.t_peak_i_red:.3f} "
                  f"kinetic=[{pt.t_kin:.3f}, {pt.t_kin_end:.3f}]")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "campaign":
        return _cmd_campaign(args)
    if args.command == "sweep":
        return _cmd_sweep(args)
    raise SystemExit(2)


if __name__ == "__main__":
    sys.exit(main())
