"""Monte-Carlo campaigns: reproducible scenario ensembles, paired
transformation runs, parameter sweeps, and result serialization.

A campaign is fully determined by (config, master seed): run i draws its
scenario from substream(seed, i), so results are byte-identical no matter
how many worker threads execute the runs. The stepping kernels release the
GIL, so a plain thread pool scales across cores. Failed runs (non-finite
states) are recorded and counted but never abort a campaign and never enter
the aggregates.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .design import (
    EPS_WIN,
    ParameterDomain,
    SCENARIO_CLASSES,
    TRANSFORM_SOURCE_CLASSES,
    apply_transformation,
    effective_domains,
    get_transformation,
    sample_scenario,
    substream,
    superiority_bin,
)
from .integrator import NumericalFailureError, RunOutcome, SimConfig, run
from .model import SCENARIO_FIELDS, Scenario
from .observables import OBSERVABLE_NAMES, ObservableSet, observe
from .stats import (
    BiasMonitor,
    ComparisonStats,
    Histogram,
    LONG_COMBAT_THRESHOLD,
    RunningMoments,
    SummaryStats,
    histogram,
    monitor_bias,
    superiority_partition,
)

# Fixed plot-ready histogram layouts (range, bins).
HISTOGRAM_SPECS = {
    "delta_n": (-1.0, 1.0, 40),
    "delta_d": (-1.0, 1.0, 40),
    "loss_b": (0.0, 1.0, 40),
    "delta_t": (0.0, 1000.0, 40),
}
PAIRED_HISTOGRAM_SPECS = {
    "d_delta_n": (-2.0, 2.0, 40),
    "d_loss_b": (-1.0, 1.0, 40),
}

BASE_CSV_COLUMNS = (
    ["run_index", "class", "seed"]
    + list(SCENARIO_FIELDS)
    + ["delta_n", "delta_d", "loss_b", "delta_t", "t_end", "t_kin_end",
       "t_peak_I_b", "t_peak_I_r", "stopped_by", "kinetic_classification"]
)
PAIRED_CSV_COLUMNS = ["delta_n_ref", "delta_d_ref", "loss_b_ref",
                      "delta_t_ref", "d_delta_n", "d_delta_d", "d_loss_b",
                      "d_delta_t"]
GKIN_CSV_COLUMN = "delta_t_gkin"


@dataclass(frozen=True)
class CampaignConfig:
    """One campaign's full specification.

    transformation pairs every sampled scenario x with g(x); the
    pure-kinetic companion g_kin(x) is run in addition whenever a
    transformation, a superiority partition / filter, or the duration
    filter needs it. superiority_filter restricts the aggregates (not the
    records) to runs whose companion classifies blue as given.
    """

    scenario_class: str = "gen"
    transformation: str | None = None
    runs: int = 7150
    seed: int = 0
    sim: SimConfig = field(default_factory=SimConfig)
    domains: ParameterDomain = field(default_factory=ParameterDomain)
    workers: int = 0
    record_trajectories: bool = False
    superiority_partition: bool = False
    superiority_filter: str | None = None
    dt_filter: float = LONG_COMBAT_THRESHOLD
    eps_win: float = EPS_WIN

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.scenario_class not in SCENARIO_CLASSES:
            raise ValueError(f"unknown scenario class {self.scenario_class!r}")
        if self.transformation is not None:
            allowed = TRANSFORM_SOURCE_CLASSES[
                get_transformation(self.transformation).id]
            if self.scenario_class not in allowed:
                raise ValueError(
                    f"transformation {self.transformation} requires a source "
                    f"class in {allowed}, got {self.scenario_class!r}")
        if self.superiority_filter not in (None, "superior", "inferior", "even"):
            raise ValueError(
                f"invalid superiority filter {self.superiority_filter!r}")

    @property
    def needs_gkin(self) -> bool:
        return (self.transformation is not None
                or self.superiority_partition
                or self.superiority_filter is not None)

    def echo(self) -> dict:
        """Config echo for the summary meta block.

        Excludes execution-only knobs (workers, output paths) so identical
        campaigns serialize identically regardless of how they were run.
        """
        sim = self.sim
        return {
            "class": self.scenario_class,
            "transformation": self.transformation,
            "runs": self.runs,
            "seed": self.seed,
            "dt": sim.dt,
            "eps_stop": sim.eps_stop,
            "window_steps": sim.window,
            "eps_kin": sim.eps_kin,
            "t_max": sim.t_max,
            "t_kin": sim.t_kin,
            "dt_filter": self.dt_filter,
            "eps_win": self.eps_win,
            "superiority_partition": self.superiority_partition,
            "superiority_filter": self.superiority_filter,
            "domains": self.domains.as_dict(),
        }


@dataclass(frozen=True)
class RunRecord:
    """Everything one campaign run contributes to records and aggregates."""

    index: int
    scenario: Scenario
    failed: bool
    fail_time: float | None = None
    outcome: RunOutcome | None = None
    obs: ObservableSet | None = None
    ref_obs: ObservableSet | None = None
    gkin_obs: ObservableSet | None = None
    classification: str | None = None


@dataclass
class CampaignResult:
    """Aggregated campaign output plus the ordered per-run records."""

    config: CampaignConfig
    records: list
    summary: SummaryStats
    bias: BiasMonitor
    histograms: dict
    comparison: ComparisonStats | None
    partition: Histogram | None
    failure_count: int
    aggregated_count: int

    def summary_dict(self) -> dict:
        out = {
            "meta": {
                "version": __version__,
                "variance": "population",
                "config": self.config.echo(),
                "runs": self.config.runs,
                "aggregated": self.aggregated_count,
                "failures": self.failure_count,
            },
            "summary": self.summary.as_dict(),
            "bias": self.bias.as_dict(),
            "histograms": {k: h.as_dict() for k, h in self.histograms.items()},
        }
        out["comparison"] = (self.comparison.as_dict()
                             if self.comparison is not None else None)
        out["superiority_partition"] = (self.partition.as_dict()
                                        if self.partition is not None else None)
        return out


def _run_one(index: int, cfg: CampaignConfig) -> RunRecord:
    rng = substream(cfg.seed, index)
    scenario = sample_scenario(cfg.domains, cfg.scenario_class, rng)
    sim = cfg.sim
    if cfg.record_trajectories:
        sim = replace(sim, record_trajectory=True)
    try:
        outcome = run(scenario, sim)
    except NumericalFailureError as err:
        return RunRecord(index=index, scenario=scenario, failed=True,
                         fail_time=err.time)
    obs = observe(outcome, scenario, sim.t_kin)

    ref_obs = None
    gkin_obs = None
    gkin_scenario = None
    if cfg.needs_gkin:
        gkin_scenario = apply_transformation("g_kin", scenario)
    try:
        if cfg.transformation is not None:
            g_scenario = apply_transformation(cfg.transformation, scenario)
            if gkin_scenario is not None and g_scenario == gkin_scenario:
                # A1 on gen/equ and A3 on b-a project onto the pure-kinetic
                # companion; run it once and reuse the outcome.
                g_outcome = run(g_scenario, cfg.sim)
                ref_obs = observe(g_outcome, g_scenario, cfg.sim.t_kin)
                gkin_obs = ref_obs
            else:
                g_outcome = run(g_scenario, cfg.sim)
                ref_obs = observe(g_outcome, g_scenario, cfg.sim.t_kin)
        if cfg.needs_gkin and gkin_obs is None:
            k_outcome = run(gkin_scenario, cfg.sim)
            gkin_obs = observe(k_outcome, gkin_scenario, cfg.sim.t_kin)
    except NumericalFailureError as err:
        return RunRecord(index=index, scenario=scenario, failed=True,
                         fail_time=err.time)

    classification = None
    if gkin_obs is not None:
        if gkin_obs.delta_n > cfg.eps_win:
            classification = "superior"
        elif gkin_obs.delta_n < -cfg.eps_win:
            classification = "inferior"
        else:
            classification = "even"

    return RunRecord(index=index, scenario=scenario, failed=False,
                     outcome=outcome, obs=obs, ref_obs=ref_obs,
                     gkin_obs=gkin_obs, classification=classification)


def run_campaign(cfg: CampaignConfig,
                 out_dir: str | os.PathLike | None = None,
                 formats: tuple = ("csv", "json"),
                 progress=None) -> CampaignResult:
    """Execute one campaign and (optionally) serialize its outputs.

    Runs are dispatched over a thread pool (workers = 0 picks the CPU
    count); records come back in run-index order and aggregation is
    single-threaded over that order, so outputs are byte-identical for any
    worker count. Output files: runs.csv (per-run records, format "csv"),
    summary.json (aggregates, format "json"), plus per-run trajectory files
    when record_trajectories is set.
    """
    workers = cfg.workers if cfg.workers > 0 else (os.cpu_count() or 1)
    indices = range(cfg.runs)
    if workers == 1:
        records = []
        for i in indices:
            records.append(_run_one(i, cfg))
            if progress is not None:
                progress(i + 1, cfg.runs)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda i: _run_one(i, cfg), indices))

    aggregate_filter = cfg.superiority_filter
    summary = SummaryStats()
    param_moments = {name: RunningMoments() for name in SCENARIO_FIELDS}
    obs_lists = {name: [] for name in OBSERVABLE_NAMES}
    comparison = None
    if cfg.transformation is not None:
        comparison = ComparisonStats(transformation=cfg.transformation,
                                     eps_win=cfg.eps_win,
                                     threshold=cfg.dt_filter)
    paired_d = {"d_delta_n": [], "d_loss_b": []}
    gkin_delta_n = []
    failure_count = 0
    aggregated = 0

    for rec in records:
        if rec.failed:
            failure_count += 1
            continue
        if aggregate_filter is not None and rec.classification != aggregate_filter:
            continue
        aggregated += 1
        summary.push(rec.obs, rec.scenario.blue.s0, rec.outcome.final_blue.N)
        for name, v in rec.scenario.values().items():
            param_moments[name].push(v)
        for name in OBSERVABLE_NAMES:
            obs_lists[name].append(getattr(rec.obs, name))
        if comparison is not None and rec.ref_obs is not None:
            gk = rec.gkin_obs.delta_t if rec.gkin_obs is not None else None
            comparison.push(rec.obs, rec.ref_obs, gk)
            paired_d["d_delta_n"].append(rec.obs.delta_n - rec.ref_obs.delta_n)
            paired_d["d_loss_b"].append(rec.obs.loss_b - rec.ref_obs.loss_b)
        if rec.gkin_obs is not None:
            gkin_delta_n.append(rec.gkin_obs.delta_n)

    if aggregated == 0:
        raise RuntimeError(
            "campaign produced no aggregatable runs "
            f"({failure_count} failures, filter={aggregate_filter!r})")

    s0_hi = cfg.domains.box("s0")[1]
    bias = monitor_bias(param_moments,
                        {name: summary.observables[name]
                         for name in OBSERVABLE_NAMES},
                        effective_domains(cfg.domains, cfg.scenario_class),
                        delta_n_bound=s0_hi)

    histos = {}
    for name, (lo, hi, bins) in HISTOGRAM_SPECS.items():
        histos[name] = histogram(obs_lists[name], lo, hi, bins)
    if comparison is not None:
        for name, (lo, hi, bins) in PAIRED_HISTOGRAM_SPECS.items():
            histos[name] = histogram(paired_d[name], lo, hi, bins)

    partition = None
    if cfg.superiority_partition and gkin_delta_n:
        partition = superiority_partition(gkin_delta_n)

    result = CampaignResult(
        config=cfg, records=records, summary=summary, bias=bias,
        histograms=histos, comparison=comparison, partition=partition,
        failure_count=failure_count, aggregated_count=aggregated,
    )
    if out_dir is not None:
        write_campaign(result, out_dir, formats)
    return result


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    """Shortest round-trip decimal for floats; empty string for None."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def campaign_csv_columns(cfg: CampaignConfig) -> list:
    cols = list(BASE_CSV_COLUMNS)
    if cfg.transformation is not None:
        cols += PAIRED_CSV_COLUMNS
    if cfg.needs_gkin:
        cols.append(GKIN_CSV_COLUMN)
    return cols


def _record_row(rec: RunRecord, cfg: CampaignConfig) -> list:
    vals = rec.scenario.values()
    row = [rec.index, cfg.scenario_class, cfg.seed]
    row += [vals[name] for name in SCENARIO_FIELDS]
    if rec.failed:
        row += [None] * 8 + ["numerical-failure", None]
    else:
        out = rec.outcome
        row += [rec.obs.delta_n, rec.obs.delta_d, rec.obs.loss_b,
                rec.obs.delta_t, out.t_end, out.t_kin_end,
                out.t_peak_i_blue, out.t_peak_i_red, out.stopped_by,
                rec.classification]
    if cfg.transformation is not None:
        if rec.failed or rec.ref_obs is None:
            row += [None] * 8
        else:
            r = rec.ref_obs
            o = rec.obs
            row += [r.delta_n, r.delta_d, r.loss_b, r.delta_t,
                    o.delta_n - r.delta_n, o.delta_d - r.delta_d,
                    o.loss_b - r.loss_b, o.delta_t - r.delta_t]
    if cfg.needs_gkin:
        row.append(rec.gkin_obs.delta_t if rec.gkin_obs is not None else None)
    return [_fmt(v) for v in row]


def write_campaign(result: CampaignResult, out_dir: str | os.PathLike,
                   formats: tuple = ("csv", "json")) -> dict:
    """Write runs.csv / summary.json (and trajectories) into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    cfg = result.config
    if "csv" in formats:
        path = out / "runs.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(campaign_csv_columns(cfg))
            for rec in result.records:
                writer.writerow(_record_row(rec, cfg))
        written["csv"] = path
    if "json" in formats:
        path = out / "summary.json"
        with open(path, "w") as fh:
            json.dump(result.summary_dict(), fh, indent=2)
            fh.write("\n")
        written["json"] = path
    if cfg.record_trajectories:
        tdir = out / "trajectories"
        tdir.mkdir(exist_ok=True)
        for rec in result.records:
            if rec.failed or rec.outcome is None or rec.outcome.trajectory is None:
                continue
            tpath = tdir / f"run_{rec.index:06d}.csv"
            traj = rec.outcome.trajectory
            with open(tpath, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["t", "S_b", "I_b", "R_b", "D_b",
                                 "S_r", "I_r", "R_r", "D_r"])
                for k in range(len(traj)):
                    writer.writerow(
                        [_fmt(float(traj.times[k]))]
                        + [_fmt(float(v)) for v in traj.blue[k]]
                        + [_fmt(float(v)) for v in traj.red[k]])
        written["trajectories"] = tdir
    return written


# ---------------------------------------------------------------------------
# Parameter sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepPoint:
    """One grid point of a single-parameter sweep."""

    value: float
    delta_n: float
    t_peak_i_blue: float
    t_peak_i_red: float
    t_kin: float
    t_kin_end: float


def run_sweep(base: Scenario, parameter: str, points: int,
              sim: SimConfig = SimConfig(),
              domains: ParameterDomain = ParameterDomain()) -> list:
    """Vary one scenario field over a uniform grid spanning its box.

    Everything else is held at the base scenario's values. A single-point
    grid degenerates to the base scenario itself. t_kin_end falls back to
    t_end for runs whose kinetic-end threshold never triggered.
    """
    if parameter not in SCENARIO_FIELDS:
        raise KeyError(f"unknown scenario field {parameter!r}; "
                       f"valid names: {', '.join(SCENARIO_FIELDS)}")
    if points < 1:
        raise ValueError("points must be >= 1")
    if points == 1:
        grid = [base.values()[parameter]]
    else:
        lo, hi = domains.box(parameter)
        grid = [lo + (hi - lo) * k / (points - 1) for k in range(points)]
    out = []
    for v in grid:
        scn = base.replace_value(parameter, v)
        outcome = run(scn, sim)
        tke = outcome.t_kin_end if outcome.t_kin_end is not None else outcome.t_end
        out.append(SweepPoint(
            value=v,
            delta_n=observe(outcome, scn, sim.t_kin).delta_n,
            t_peak_i_blue=outcome.t_peak_i_blue,
            t_peak_i_red=outcome.t_peak_i_red,
            t_kin=sim.t_kin,
            t_kin_end=tke,
        ))
    return out


SWEEP_CSV_COLUMNS = ["value", "delta_n", "t_peak_I_b", "t_peak_I_r",
                     "t_kin", "t_kin_end"]


def write_sweep(points: list, parameter: str, out_dir: str | os.PathLike,
                formats: tuple = ("csv", "json")) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    if "csv" in formats:
        path = out / "sweep.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["parameter"] + SWEEP_CSV_COLUMNS)
            for pt in points:
                writer.writerow([parameter] + [
                    _fmt(v) for v in (pt.value, pt.delta_n, pt.t_peak_i_blue,
                                      pt.t_peak_i_red, pt.t_kin, pt.t_kin_end)])
        written["csv"] = path
    if "json" in formats:
        path = out / "sweep.json"
        payload = {
            "parameter": parameter,
            "points": [
                {"value": pt.value, "delta_n": pt.delta_n,
                 "t_peak_I_b": pt.t_peak_i_blue,
                 "t_peak_I_r": pt.t_peak_i_red,
                 "t_kin": pt.t_kin, "t_kin_end": pt.t_kin_end}
                for pt in points
            ],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        written["json"] = path
    return written


__all__ = [
    "BASE_CSV_COLUMNS",
    "CampaignConfig",
    "CampaignResult",
    "GKIN_CSV_COLUMN",
    "HISTOGRAM_SPECS",
    "PAIRED_CSV_COLUMNS",
    "RunRecord",
    "SweepPoint",
    "campaign_csv_columns",
    "run_campaign",
    "run_sweep",
    "write_campaign",
    "write_sweep",
]
