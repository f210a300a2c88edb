"""Campaign statistics: streaming summaries, risk, pairwise comparisons,
win-change counting, design-quality bias monitors, and histograms.

All aggregators are mergeable: partial accumulators built on any subset of
runs combine associatively, so a campaign can aggregate its workers'
partials in any grouping (merge order changes results by at most rounding).
Variance is the population variance throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .design import EPS_WIN, SUPERIORITY_BINS
from .observables import OBSERVABLE_NAMES, ObservableSet

# Duration threshold (on the pure-kinetic companion run) separating long
# from short kinetic combat in the filtered comparison statistics.
LONG_COMBAT_THRESHOLD = 50.0


@dataclass
class RunningMoments:
    """Streaming min / max / mean / population variance (Welford + Chan merge)."""

    count: int = 0
    mean: float = 0.0
    _m2: float = 0.0
    min: float = math.inf
    max: float = -math.inf

    def push(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (x - self.mean)
        if x < self.min:
            self.min = x
        if x > self.max:
            self.max = x

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        if other.count == 0:
            return self
        if self.count == 0:
            self.count = other.count
            self.mean = other.mean
            self._m2 = other._m2
            self.min = other.min
            self.max = other.max
            return self
        n = self.count + other.count
        delta = other.mean - self.mean
        self._m2 += other._m2 + delta * delta * self.count * other.count / n
        self.mean += delta * other.count / n
        self.count = n
        self.min = min(self.min, other.min)
        self.max = max(self.max, other.max)
        return self

    @property
    def variance(self) -> float:
        """Population variance (zero for empty or single-sample streams)."""
        if self.count == 0:
            return 0.0
        return self._m2 / self.count

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    def as_dict(self) -> dict:
        return {
            "min": self.min if self.count else None,
            "max": self.max if self.count else None,
            "mean": self.mean if self.count else None,
            "var": self.variance if self.count else None,
            "count": self.count,
        }


def _moments_of(values) -> RunningMoments:
    m = RunningMoments()
    for v in values:
        m.push(v)
    return m


@dataclass
class SummaryStats:
    """Per-observable moments plus the risk / chance pair.

    Risk is the ensemble mean of the blue losses D_b(t_end); chance is
    mean(N_b(0)) - risk, which equals the mean surviving blue force by
    conservation.
    """

    observables: dict = field(default_factory=dict)
    initial_n_blue: RunningMoments = field(default_factory=RunningMoments)
    final_n_blue: RunningMoments = field(default_factory=RunningMoments)

    @property
    def count(self) -> int:
        return self.initial_n_blue.count

    @property
    def risk(self) -> float:
        return self.observables["loss_b"].mean

    @property
    def chance(self) -> float:
        return self.initial_n_blue.mean - self.risk

    def push(self, obs: ObservableSet, initial_n_blue: float,
             final_n_blue: float | None = None) -> None:
        for name in OBSERVABLE_NAMES:
            self.observables.setdefault(name, RunningMoments()).push(
                getattr(obs, name))
        self.initial_n_blue.push(initial_n_blue)
        if final_n_blue is not None:
            self.final_n_blue.push(final_n_blue)

    def merge(self, other: "SummaryStats") -> "SummaryStats":
        for name, m in other.observables.items():
            self.observables.setdefault(name, RunningMoments()).merge(m)
        self.initial_n_blue.merge(other.initial_n_blue)
        self.final_n_blue.merge(other.final_n_blue)
        return self

    def as_dict(self) -> dict:
        out = {name: self.observables[name].as_dict()
               for name in OBSERVABLE_NAMES if name in self.observables}
        out["risk"] = self.risk if self.count else None
        out["chance"] = self.chance if self.count else None
        out["count"] = self.count
        return out


def summarize(observables: Sequence[ObservableSet],
              initial_n_blue: Sequence[float],
              final_n_blue: Sequence[float] | None = None) -> SummaryStats:
    """Aggregate a campaign's observables (exact streaming moments).

    Raises ValueError on empty input or mismatched lengths.
    """
    if len(observables) == 0:
        raise ValueError("summarize needs at least one run")
    if len(observables) != len(initial_n_blue):
        raise ValueError("observables and initial_n_blue lengths differ")
    s = SummaryStats()
    finals = final_n_blue if final_n_blue is not None else [None] * len(observables)
    for obs, n0, nf in zip(observables, initial_n_blue, finals):
        s.push(obs, n0, nf)
    return s


# ---------------------------------------------------------------------------
# Pairwise comparison of a scenario and its transformed partner
# ---------------------------------------------------------------------------

def is_win_change(delta_n_x: float, delta_n_g: float,
                  eps_win: float = EPS_WIN) -> bool:
    """Strict sign flip of delta_n outside the tie band (draws never count)."""
    return ((delta_n_x > eps_win and delta_n_g < -eps_win)
            or (delta_n_x < -eps_win and delta_n_g > eps_win))


@dataclass
class ComparisonStats:
    """Statistics of d_o = o(x) - o(g(x)) over paired runs.

    win_change counts strict sign flips of delta_n; the win-change subset
    repeats the d_o moments over exactly those pairs, and long_combat
    repeats moments and win-change fraction over the pairs whose
    pure-kinetic companion fought at least `threshold` time units.
    """

    transformation: str
    eps_win: float = EPS_WIN
    threshold: float = LONG_COMBAT_THRESHOLD
    d: dict = field(default_factory=dict)
    win_change_count: int = 0
    count: int = 0
    win_change_subset: dict = field(default_factory=dict)
    long_combat_d: dict = field(default_factory=dict)
    long_combat_win_change_count: int = 0
    long_combat_count: int = 0

    @property
    def win_change_fraction(self) -> float:
        return self.win_change_count / self.count if self.count else 0.0

    @property
    def long_combat_win_change_fraction(self) -> float:
        if not self.long_combat_count:
            return 0.0
        return self.long_combat_win_change_count / self.long_combat_count

    def push(self, obs_x: ObservableSet, obs_g: ObservableSet,
             gkin_delta_t: float | None = None) -> None:
        self.count += 1
        flipped = is_win_change(obs_x.delta_n, obs_g.delta_n, self.eps_win)
        if flipped:
            self.win_change_count += 1
        long_combat = (gkin_delta_t is not None
                       and gkin_delta_t >= self.threshold)
        if long_combat:
            self.long_combat_count += 1
            if flipped:
                self.long_combat_win_change_count += 1
        for name in OBSERVABLE_NAMES:
            dv = getattr(obs_x, name) - getattr(obs_g, name)
            self.d.setdefault(name, RunningMoments()).push(dv)
            if flipped:
                self.win_change_subset.setdefault(
                    name, RunningMoments()).push(dv)
            if long_combat:
                self.long_combat_d.setdefault(name, RunningMoments()).push(dv)

    def merge(self, other: "ComparisonStats") -> "ComparisonStats":
        self.count += other.count
        self.win_change_count += other.win_change_count
        self.long_combat_count += other.long_combat_count
        self.long_combat_win_change_count += other.long_combat_win_change_count
        for target, source in ((self.d, other.d),
                               (self.win_change_subset, other.win_change_subset),
                               (self.long_combat_d, other.long_combat_d)):
            for name, m in source.items():
                target.setdefault(name, RunningMoments()).merge(m)
        return self

    def as_dict(self) -> dict:
        def block(moments, count):
            return {
                "count": count,
                **{f"d_{name}": moments[name].as_dict()
                   for name in OBSERVABLE_NAMES if name in moments},
            }
        return {
            "transformation": self.transformation,
            "eps_win": self.eps_win,
            **block(self.d, self.count),
            "win_change_fraction": self.win_change_fraction,
            "win_change_count": self.win_change_count,
            "win_change_subset": block(self.win_change_subset,
                                       self.win_change_count),
            "long_combat": {
                "threshold": self.threshold,
                **block(self.long_combat_d, self.long_combat_count),
                "win_change_fraction": self.long_combat_win_change_fraction,
                "win_change_count": self.long_combat_win_change_count,
            },
        }


def compare(pairs: Sequence[tuple], transformation: str,
            gkin_delta_t: Sequence[float] | None = None,
            threshold: float = LONG_COMBAT_THRESHOLD,
            eps_win: float = EPS_WIN) -> ComparisonStats:
    """Compare paired observables (x, g(x)) for one transformation.

    gkin_delta_t, when given, must align with pairs and carries each
    scenario's pure-kinetic combat duration for the long-combat restriction.
    Raises ValueError on length mismatches.
    """
    if gkin_delta_t is not None and len(gkin_delta_t) != len(pairs):
        raise ValueError("gkin_delta_t length differs from pairs")
    cs = ComparisonStats(transformation=transformation, eps_win=eps_win,
                         threshold=threshold)
    for k, (obs_x, obs_g) in enumerate(pairs):
        cs.push(obs_x, obs_g,
                gkin_delta_t[k] if gkin_delta_t is not None else None)
    return cs


# ---------------------------------------------------------------------------
# Design-quality bias monitors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InputBias:
    """Observed-minus-theoretical deltas of one sampled input parameter."""

    mean_delta: float
    sigma_delta: float
    min_delta: float
    max_delta: float

    def as_dict(self) -> dict:
        return {"mean_delta": self.mean_delta, "sigma_delta": self.sigma_delta,
                "min_delta": self.min_delta, "max_delta": self.max_delta}


@dataclass(frozen=True)
class BiasMonitor:
    """Monte-Carlo quality monitor.

    Per input parameter: observed mean minus (lo+hi)/2, observed population
    sigma minus (hi-lo)/sqrt(12), and the gaps of the observed extrema to
    the box bounds. Per outcome: mean delta_n / delta_d, and the gaps of the
    delta_n extrema to the theoretical range bounds. All entries tend to 0
    as the run count grows (for symmetric uniform designs).
    """

    inputs: Mapping[str, InputBias]
    mean_delta_n: float
    mean_delta_d: float
    max_delta_n_gap: float
    min_delta_n_gap: float

    def as_dict(self) -> dict:
        return {
            "inputs": {k: v.as_dict() for k, v in self.inputs.items()},
            "outcomes": {
                "mean_delta_n": self.mean_delta_n,
                "mean_delta_d": self.mean_delta_d,
                "max_delta_n_gap": self.max_delta_n_gap,
                "min_delta_n_gap": self.min_delta_n_gap,
            },
        }


def monitor_bias(parameter_moments: Mapping[str, RunningMoments],
                 observable_moments: Mapping[str, RunningMoments],
                 domains: Mapping[str, tuple],
                 delta_n_bound: float) -> BiasMonitor:
    """Compare sampled-input and outcome statistics with their exact values.

    `domains` holds the effective per-field boxes (class-constrained fields
    have degenerate boxes); delta_n_bound is the theoretical |delta_n|
    maximum (the largest admissible initial force level).
    """
    inputs = {}
    for name, m in parameter_moments.items():
        lo, hi = domains[name]
        inputs[name] = InputBias(
            mean_delta=m.mean - 0.5 * (lo + hi),
            sigma_delta=m.std - (hi - lo) / math.sqrt(12.0),
            min_delta=m.min - lo,
            max_delta=m.max - hi,
        )
    dn = observable_moments["delta_n"]
    dd = observable_moments["delta_d"]
    return BiasMonitor(
        inputs=inputs,
        mean_delta_n=dn.mean,
        mean_delta_d=dd.mean,
        max_delta_n_gap=dn.max - delta_n_bound,
        min_delta_n_gap=dn.min - (-delta_n_bound),
    )


def monitor_bias_from_samples(scenarios: Sequence, observables: Sequence[ObservableSet],
                              domains: Mapping[str, tuple],
                              delta_n_bound: float = 1.0) -> BiasMonitor:
    """Convenience wrapper building the moment streams from raw samples."""
    param_moments: dict[str, RunningMoments] = {}
    for scn in scenarios:
        for name, v in scn.values().items():
            param_moments.setdefault(name, RunningMoments()).push(v)
    obs_moments = {
        name: _moments_of(getattr(o, name) for o in observables)
        for name in OBSERVABLE_NAMES
    }
    return monitor_bias(param_moments, obs_moments, domains, delta_n_bound)


# ---------------------------------------------------------------------------
# Histograms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Histogram:
    """Uniform-bin counts over [lo, hi].

    Bins are left-closed with a right-closed top bin; out-of-range values
    land in the respective edge bin, so counts always sum to the input size.
    """

    lo: float
    hi: float
    counts: tuple

    @property
    def bin_count(self) -> int:
        return len(self.counts)

    @property
    def edges(self) -> list:
        n = self.bin_count
        return [self.lo + (self.hi - self.lo) * k / n for k in range(n + 1)]

    @property
    def total(self) -> int:
        return sum(self.counts)

    def as_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "counts": list(self.counts)}


def bin_index(value: float, lo: float, hi: float, bins: int) -> int:
    """Bin of one value under the histogram convention (edge capture)."""
    idx = int(math.floor((value - lo) / (hi - lo) * bins))
    if idx < 0:
        return 0
    if idx >= bins:
        return bins - 1
    return idx


def histogram(values: Sequence[float], lo: float, hi: float,
              bins: int) -> Histogram:
    """Histogram with the fixed binning convention.

    Raises ValueError for an empty range, bins < 1, or non-finite values.
    """
    if not hi > lo:
        raise ValueError(f"empty histogram range [{lo}, {hi}]")
    if bins < 1:
        raise ValueError("bin count must be >= 1")
    counts = [0] * bins
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"non-finite histogram value {v}")
        counts[bin_index(v, lo, hi, bins)] += 1
    return Histogram(lo=lo, hi=hi, counts=tuple(counts))


def superiority_partition(delta_n_kin_values: Sequence[float]) -> Histogram:
    """Ten-level partition of delta_n(g_kin) over [-1, 1]."""
    return histogram(delta_n_kin_values, -1.0, 1.0, SUPERIORITY_BINS)


__all__ = [
    "BiasMonitor",
    "ComparisonStats",
    "Histogram",
    "InputBias",
    "LONG_COMBAT_THRESHOLD",
    "RunningMoments",
    "SummaryStats",
    "bin_index",
    "compare",
    "histogram",
    "is_win_change",
    "monitor_bias",
    "monitor_bias_from_samples",
    "summarize",
    "superiority_partition",
]
