"""Core model: compartment state, parameters, flows, and the event schedule.

Two homogeneous forces (blue and red) fight on two levels at once. Each
force is split into four compartments:

  S  vulnerable elements (can be infected)
  I  infected elements (fight with reduced effectiveness eta)
  R  patched elements (immune)
  D  destroyed elements (bookkeeping)

Kinetic losses move S/I/R mass into D at a rate set by the opponent's
attrition factor ``delta * (f(S)S^p + f(R)R^p + eta f(I)I^p)`` times the
target compartment's own damped power ``f(x)x^q``. The barrier factor
``f(x) = exp(-1e-4/x)`` shuts every kinetic flow off smoothly as a level
approaches zero, which keeps all compartments non-negative and makes an
annihilated force harmless even for exponents near zero.

Epidemic flows (infection, patching) are normalized by the live force size
N = S + I + R; the adversarial malware-attack flow ``alpha_opp (S_opp +
R_opp) S`` is not, because its scale is set by absolute force sizes.

Timed events switch parameters between zero and their nominal values:
everything starts switched off, kinetic effectiveness comes on at t_kin,
the malware attack runs during [t_att, t_att + dt_mal), and patching comes
on at t_pat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import BARRIER_SCALE, EPS_N

# Default absolute start of kinetic combat. All timing parameters are
# offsets against it; with offsets in [-2, 4] every event time stays >= 0.
DEFAULT_T_KIN = 2.0

# Canonical per-force field order used for sampling, CSV columns and sweeps.
FORCE_FIELDS = (
    "alpha",
    "beta",
    "gamma",
    "gamma_tilde",
    "delta",
    "eta",
    "dt_att",
    "dt_mal",
    "dt_pat",
    "s0",
)

# The 22 scenario values in their documented fixed order: the ten blue
# fields, the ten red fields, then the shared exponents.
SCENARIO_FIELDS = tuple(
    [f"{name}_b" for name in FORCE_FIELDS]
    + [f"{name}_r" for name in FORCE_FIELDS]
    + ["p", "q"]
)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class ForceState:
    """Compartment levels of one force at one instant (all >= 0)."""

    S: float
    I: float
    R: float
    D: float

    def __post_init__(self):
        for name in ("S", "I", "R", "D"):
            v = getattr(self, name)
            _require(v >= 0.0, f"compartment {name} must be >= 0, got {v}")

    @property
    def N(self) -> float:
        """Live force size S + I + R."""
        return self.S + self.I + self.R

    def as_array(self) -> np.ndarray:
        return np.array([self.S, self.I, self.R, self.D], dtype=np.float64)


@dataclass(frozen=True)
class ForceParams:
    """Rate parameters of one force.

    alpha: malware attack rate (>= 0)
    beta: infection rate (>= 0)
    gamma: patch rate for vulnerable elements (in [0, 1])
    gamma_tilde: patch rate for infected elements (>= 0)
    delta: kinetic effectiveness (>= 0)
    eta: effectiveness retained by infected elements (in [0, 1])
    """

    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    gamma_tilde: float = 0.0
    delta: float = 0.0
    eta: float = 1.0

    def __post_init__(self):
        _require(self.alpha >= 0.0, "alpha must be >= 0")
        _require(self.beta >= 0.0, "beta must be >= 0")
        _require(0.0 <= self.gamma <= 1.0, "gamma must be in [0, 1]")
        _require(self.gamma_tilde >= 0.0, "gamma_tilde must be >= 0")
        _require(self.delta >= 0.0, "delta must be >= 0")
        _require(0.0 <= self.eta <= 1.0, "eta must be in [0, 1]")


@dataclass(frozen=True)
class TimingParams:
    """Event-timing offsets of one force, relative to the kinetic start.

    dt_att: offset of the malware-attack start (may be negative)
    dt_mal: duration of the malware attack (>= 0)
    dt_pat: offset of the patching start (may be negative)
    """

    dt_att: float = 0.0
    dt_mal: float = 0.0
    dt_pat: float = 0.0

    def __post_init__(self):
        _require(self.dt_mal >= 0.0, "dt_mal must be >= 0")


@dataclass(frozen=True)
class ForceConfig:
    """One force's full parameterization: rates, timing, initial level."""

    params: ForceParams
    timing: TimingParams
    s0: float

    def __post_init__(self):
        _require(self.s0 >= 0.0, "initial level s0 must be >= 0")

    def initial_state(self) -> ForceState:
        # I(0) = R(0) = D(0) = 0 by convention.
        return ForceState(self.s0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Scenario:
    """Full parameterization of one simulation run.

    The exponents p (attacker capability) and q (defender capability) are
    shared between the two forces; everything else is per force.
    """

    blue: ForceConfig
    red: ForceConfig
    p: float
    q: float

    def __post_init__(self):
        _require(self.p >= 0.0, "p must be >= 0")
        _require(self.q >= 0.0, "q must be >= 0")

    def swapped(self) -> "Scenario":
        """The same scenario with the blue and red roles exchanged."""
        return Scenario(blue=self.red, red=self.blue, p=self.p, q=self.q)

    def values(self) -> dict:
        """Flat name -> value mapping in the SCENARIO_FIELDS order."""
        out = {}
        for tag, cfg in (("b", self.blue), ("r", self.red)):
            for name in FORCE_FIELDS:
                if name == "s0":
                    out[f"s0_{tag}"] = cfg.s0
                elif name.startswith("dt_"):
                    out[f"{name}_{tag}"] = getattr(cfg.timing, name)
                else:
                    out[f"{name}_{tag}"] = getattr(cfg.params, name)
        out["p"] = self.p
        out["q"] = self.q
        return out

    @staticmethod
    def from_values(values: dict) -> "Scenario":
        """Inverse of :meth:`values`. Unknown keys raise KeyError."""
        unknown = set(values) - set(SCENARIO_FIELDS)
        if unknown:
            raise KeyError(f"unknown scenario fields: {sorted(unknown)}")
        forces = {}
        for tag in ("b", "r"):
            forces[tag] = ForceConfig(
                params=ForceParams(
                    alpha=values[f"alpha_{tag}"],
                    beta=values[f"beta_{tag}"],
                    gamma=values[f"gamma_{tag}"],
                    gamma_tilde=values[f"gamma_tilde_{tag}"],
                    delta=values[f"delta_{tag}"],
                    eta=values[f"eta_{tag}"],
                ),
                timing=TimingParams(
                    dt_att=values[f"dt_att_{tag}"],
                    dt_mal=values[f"dt_mal_{tag}"],
                    dt_pat=values[f"dt_pat_{tag}"],
                ),
                s0=values[f"s0_{tag}"],
            )
        return Scenario(blue=forces["b"], red=forces["r"],
                        p=values["p"], q=values["q"])

    def replace_value(self, name: str, value: float) -> "Scenario":
        """A copy with one named scenario field changed."""
        vals = self.values()
        if name not in vals:
            raise KeyError(f"unknown scenario field {name!r}; "
                           f"valid names: {', '.join(SCENARIO_FIELDS)}")
        vals[name] = value
        return Scenario.from_values(vals)


def barrier(x: float) -> float:
    """Suppression factor exp(-1e-4/x), continuously extended to 0 at x = 0.

    Monotonically increasing on [0, inf), ~1 for x well above 1e-4. Applied
    to every kinetic power term so flows vanish with the level they act on.
    """
    if not (x >= 0.0):
        raise ValueError(f"barrier argument must be >= 0, got {x}")
    return _kernels.barrier(x)


def damped_power(x: float, a: float) -> float:
    """barrier(x) * x**a, with the convention 0 at x = 0 (even for a = 0)."""
    if not (x >= 0.0):
        raise ValueError(f"damped_power argument must be >= 0, got {x}")
    if not (a >= 0.0):
        raise ValueError(f"damped_power exponent must be >= 0, got {a}")
    return _kernels.damped_power(x, a)


def attrition_factor(params: ForceParams, state: ForceState, p: float) -> float:
    """One force's kinetic hit rate on the opponent.

    delta * (f(S)S^p + f(R)R^p + eta * f(I)I^p), with delta the effective
    (post-event) value.
    """
    return _kernels.attrition_factor(
        params.delta, params.eta, state.S, state.I, state.R, p
    )


def rhs(
    state_blue: ForceState,
    state_red: ForceState,
    eff_blue: ForceParams,
    eff_red: ForceParams,
    p: float,
    q: float,
) -> tuple[tuple[float, float, float, float], tuple[float, float, float, float]]:
    """Time derivative of both forces' compartments.

    ``eff_blue``/``eff_red`` carry the *effective* parameter values at the
    evaluation instant (alpha/delta/gamma/gamma_tilde are zero outside their
    event windows; beta and eta are never switched).

    Returns ((dS, dI, dR, dD) for blue, same for red). The four components
    of each force cancel term by term, so N + D is conserved.
    """
    y = np.empty(8, dtype=np.float64)
    y[0:4] = state_blue.as_array()
    y[4:8] = state_red.as_array()
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite compartment level passed to rhs")
    d = np.empty(8, dtype=np.float64)
    _kernels.rhs_into(
        y, d,
        eff_blue.alpha, eff_blue.beta, eff_blue.gamma, eff_blue.gamma_tilde,
        eff_blue.delta, eff_blue.eta,
        eff_red.alpha, eff_red.beta, eff_red.gamma, eff_red.gamma_tilde,
        eff_red.delta, eff_red.eta,
        p, q,
    )
    return (d[0], d[1], d[2], d[3]), (d[4], d[5], d[6], d[7])


# ---------------------------------------------------------------------------
# Event schedule
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParameterEvent:
    """One timed parameter change: the named values are assigned at `time`."""

    time: float
    force: str  # "blue" | "red"
    kind: str   # initial | kinetic-start | attack-start | attack-stop | patching-start
    settings: tuple


@dataclass(frozen=True)
class EventSchedule:
    """All parameter switches of a run, sorted by time.

    Five events per force: the initial zeroing, kinetic start (delta on),
    attack start (alpha on), attack stop (alpha off), patching start
    (gamma and gamma_tilde on). Ties keep insertion order, so an attack
    of zero duration switches on and immediately off again.
    """

    events: tuple
    t_kin: float
    t_check: float  # earliest time after which no event remains pending


def event_times(cfg: ForceConfig, t_kin: float) -> tuple[float, float, float]:
    """(attack start, attack stop, patching start) absolute times."""
    t_att = t_kin + cfg.timing.dt_att
    return t_att, t_att + cfg.timing.dt_mal, t_kin + cfg.timing.dt_pat


def build_schedule(scenario: Scenario, t_kin: float = DEFAULT_T_KIN) -> EventSchedule:
    """Translate timing offsets into the absolute event list.

    Raises ValueError if any derived event time is negative (the chosen
    t_kin must leave room for the most negative offsets).
    """
    events = []
    t_last = t_kin
    for name, cfg in (("blue", scenario.blue), ("red", scenario.red)):
        events.append(ParameterEvent(
            0.0, name, "initial",
            (("alpha", 0.0), ("delta", 0.0), ("gamma", 0.0), ("gamma_tilde", 0.0)),
        ))
        t_att, t_att_end, t_pat = event_times(cfg, t_kin)
        for t in (t_att, t_att_end, t_pat):
            if t < 0.0:
                raise ValueError(
                    f"event time {t} < 0 for force {name}; "
                    f"t_kin = {t_kin} is too small for these offsets"
                )
        events.append(ParameterEvent(
            t_kin, name, "kinetic-start", (("delta", cfg.params.delta),)))
        events.append(ParameterEvent(
            t_att, name, "attack-start", (("alpha", cfg.params.alpha),)))
        events.append(ParameterEvent(
            t_att_end, name, "attack-stop", (("alpha", 0.0),)))
        events.append(ParameterEvent(
            t_pat, name, "patching-start",
            (("gamma", cfg.params.gamma), ("gamma_tilde", cfg.params.gamma_tilde)),
        ))
        t_last = max(t_last, t_att_end, t_pat)
    events.sort(key=lambda e: e.time)  # stable: ties keep start-before-stop
    return EventSchedule(events=tuple(events), t_kin=t_kin, t_check=t_last)


def effective_params(
    scenario: Scenario, schedule: EventSchedule, t: float
) -> tuple[ForceParams, ForceParams]:
    """Replay the schedule up to (and including) time t.

    An event takes effect from the first instant t >= event time, matching
    the step-aligned switching of the integrator.
    """
    live = {
        "blue": {"alpha": 0.0, "delta": 0.0, "gamma": 0.0, "gamma_tilde": 0.0},
        "red": {"alpha": 0.0, "delta": 0.0, "gamma": 0.0, "gamma_tilde": 0.0},
    }
    for ev in schedule.events:
        if ev.time > t:
            break
        for name, value in ev.settings:
            live[ev.force][name] = value
    out = []
    for name, cfg in (("blue", scenario.blue), ("red", scenario.red)):
        out.append(ForceParams(
            alpha=live[name]["alpha"],
            beta=cfg.params.beta,
            gamma=live[name]["gamma"],
            gamma_tilde=live[name]["gamma_tilde"],
            delta=live[name]["delta"],
            eta=cfg.params.eta,
        ))
    return out[0], out[1]


__all__ = [
    "BARRIER_SCALE",
    "DEFAULT_T_KIN",
    "EPS_N",
    "FORCE_FIELDS",
    "SCENARIO_FIELDS",
    "EventSchedule",
    "ForceConfig",
    "ForceParams",
    "ForceState",
    "ParameterEvent",
    "Scenario",
    "TimingParams",
    "attrition_factor",
    "barrier",
    "build_schedule",
    "damped_power",
    "effective_params",
    "event_times",
    "rhs",
]
