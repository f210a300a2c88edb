"""Time stepping: explicit Euler with events, plus an RK4 validation oracle.

The production path is first-order explicit Euler on a fixed grid with
step-aligned parameter events and an outflow limiter that guarantees exact
non-negativity and conservation at any step size. `run_reference` integrates
the same system with classical RK4 at a tenth of the step between the same
event boundaries; it exists to validate the Euler path (cross-validation of
the pure attrition and pure epidemic submodels, convergence-order checks)
and is not used by campaigns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .model import (
    DEFAULT_T_KIN,
    ForceConfig,
    ForceParams,
    ForceState,
    Scenario,
    TimingParams,
    event_times,
)

STOP_LABELS = {
    _kernels.STOP_FADING: "fading-dynamics",
    _kernels.STOP_TIME_CAP: "time-cap",
}


class NumericalFailureError(RuntimeError):
    """A compartment became non-finite during integration."""

    def __init__(self, time: float):
        super().__init__(f"non-finite state at t = {time}")
        self.time = time


@dataclass(frozen=True)
class SimConfig:
    """Integration policy.

    The fading-dynamics stop compares each compartment with its value
    window_steps grid steps earlier (default floor(1/dt) steps, i.e. about
    one time unit): the run ends at the first grid time whose comparison
    window lies entirely after the last event and whose eight windowed
    changes all stay below eps_stop. A window_steps larger than the step
    budget disables the stop. eps_kin is the live-force threshold that
    marks the end of kinetic combat; t_max is the hard cap for runs whose
    dynamics never fade.
    """

    dt: float = 0.05
    eps_stop: float = 3.0e-4
    window_steps: int | None = None
    eps_kin: float = 0.01
    t_max: float = 2000.0
    t_kin: float = DEFAULT_T_KIN
    record_trajectory: bool = False
    record_stride: int = 1

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be > 0")
        if not self.eps_stop > 0.0:
            raise ValueError("eps_stop must be > 0")
        if self.window_steps is not None and self.window_steps < 1:
            raise ValueError("window_steps must be >= 1")
        if not self.eps_kin > 0.0:
            raise ValueError("eps_kin must be > 0")
        if not self.t_max > self.t_kin:
            raise ValueError("t_max must be > t_kin")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")

    @property
    def window(self) -> int:
        if self.window_steps is not None:
            return self.window_steps
        return int(math.floor(1.0 / self.dt))


@dataclass(frozen=True)
class Trajectory:
    """Sampled grid states: times[k] with blue[k]/red[k] 4-vectors."""

    times: np.ndarray
    blue: np.ndarray
    red: np.ndarray

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class RunOutcome:
    """Everything one simulation run reports.

    t_kin_end is None when neither force dropped below eps_kin before the
    run ended. max_conservation_error and min_level are per-run diagnostics
    (worst-case drift of N + D per force, and the smallest compartment level
    ever seen).
    """

    final_blue: ForceState
    final_red: ForceState
    t_end: float
    t_kin_end: float | None
    t_peak_i_blue: float
    t_peak_i_red: float
    stopped_by: str
    trajectory: Trajectory | None = None
    max_conservation_error: float = 0.0
    min_level: float = 0.0
    n_steps: int = 0


def _force_param_array(p: ForceParams) -> np.ndarray:
    return np.array(
        [p.alpha, p.beta, p.gamma, p.gamma_tilde, p.delta, p.eta],
        dtype=np.float64,
    )


_EMPTY_T = np.zeros(1, dtype=np.float64)
_EMPTY_Y = np.zeros((1, 8), dtype=np.float64)


def _simulate(scenario: Scenario, config: SimConfig, method: int,
              initial_blue: ForceState | None,
              initial_red: ForceState | None) -> RunOutcome:
    ib = initial_blue if initial_blue is not None else scenario.blue.initial_state()
    ir = initial_red if initial_red is not None else scenario.red.initial_state()
    y0 = np.concatenate([ib.as_array(), ir.as_array()])

    t_att_b, t_ae_b, t_pat_b = event_times(scenario.blue, config.t_kin)
    t_att_r, t_ae_r, t_pat_r = event_times(scenario.red, config.t_kin)
    for t in (t_att_b, t_ae_b, t_pat_b, t_att_r, t_ae_r, t_pat_r):
        if t < 0.0:
            raise ValueError(
                f"event time {t} < 0; t_kin = {config.t_kin} is too small "
                "for these timing offsets"
            )

    if config.record_trajectory:
        n_cap = int(math.ceil(config.t_max / config.dt)) + 2
        rows = n_cap // config.record_stride + 3
        traj_t = np.empty(rows, dtype=np.float64)
        traj_y = np.empty((rows, 8), dtype=np.float64)
    else:
        traj_t = _EMPTY_T
        traj_y = _EMPTY_Y

    out = _kernels.simulate(
        y0,
        _force_param_array(scenario.blue.params),
        _force_param_array(scenario.red.params),
        scenario.p, scenario.q, config.t_kin,
        t_att_b, t_ae_b, t_pat_b,
        t_att_r, t_ae_r, t_pat_r,
        config.dt, config.eps_stop, config.window, config.eps_kin,
        config.t_max,
        method, 10,
        config.record_trajectory, config.record_stride, traj_t, traj_y,
    )

    code = int(out[_kernels.OUT_STOP_CODE])
    if code == _kernels.STOP_NONFINITE:
        raise NumericalFailureError(float(out[_kernels.OUT_FAIL_TIME]))

    trajectory = None
    if config.record_trajectory:
        n = int(out[_kernels.OUT_N_RECORDED])
        trajectory = Trajectory(
            times=traj_t[:n].copy(),
            blue=traj_y[:n, 0:4].copy(),
            red=traj_y[:n, 4:8].copy(),
        )

    tke = float(out[_kernels.OUT_T_KIN_END])
    return RunOutcome(
        final_blue=ForceState(out[0], out[1], out[2], out[3]),
        final_red=ForceState(out[4], out[5], out[6], out[7]),
        t_end=float(out[_kernels.OUT_T_END]),
        t_kin_end=None if math.isnan(tke) else tke,
        t_peak_i_blue=float(out[_kernels.OUT_T_PEAK_IB]),
        t_peak_i_red=float(out[_kernels.OUT_T_PEAK_IR]),
        stopped_by=STOP_LABELS[code],
        trajectory=trajectory,
        max_conservation_error=float(out[_kernels.OUT_CONS_ERR]),
        min_level=float(out[_kernels.OUT_MIN_LEVEL]),
        n_steps=int(out[_kernels.OUT_N_STEPS]),
    )


def run(scenario: Scenario, config: SimConfig = SimConfig(), *,
        initial_blue: ForceState | None = None,
        initial_red: ForceState | None = None) -> RunOutcome:
    """Integrate one scenario with limited explicit Euler.

    The optional initial states override the I(0) = R(0) = D(0) = 0
    convention; the epidemic cross-validation uses this to seed infections.

    Raises NumericalFailureError if the state becomes non-finite (carrying
    the offending time) and ValueError for invalid event times.
    """
    return _simulate(scenario, config, _kernels.METHOD_EULER,
                     initial_blue, initial_red)


def run_reference(scenario: Scenario, config: SimConfig = SimConfig(), *,
                  initial_blue: ForceState | None = None,
                  initial_red: ForceState | None = None) -> RunOutcome:
    """Same contract as :func:`run`, integrated with classical RK4 at dt/10.

    Events switch at the same grid-aligned boundaries as the Euler path, so
    the two solutions discretize the identical hybrid system. Used as a
    validation oracle only.
    """
    return _simulate(scenario, config, _kernels.METHOD_RK4,
                     initial_blue, initial_red)


# ---------------------------------------------------------------------------
# Cross-validation of the two submodels (restricted parameter families)
# ---------------------------------------------------------------------------

# "Smooth" sampling boxes for the restricted validation families. Rates are
# kept moderate so per-step relative changes stay small, levels stay far
# above the barrier scale inside the comparison window, and the outflow
# limiter never engages; the stiff corners of the full campaign box
# annihilate in finite time and are not first-order-clean at dt = 0.05.
LANCHESTER_VALIDATION_BOX = {
    "delta": (0.2, 1.2),
    "p": (0.5, 2.0),
    "q": (0.8, 2.0),
    "s0": (0.3, 1.0),
}
SIR_VALIDATION_BOX = {
    "beta": (0.5, 4.0),
    "gamma": (0.0, 1.0),
    "gamma_tilde": (0.0, 1.0),
    "s0": (0.3, 1.0),
}


@dataclass(frozen=True)
class CrossValidationReport:
    """Worst |euler - rk4| deviation over a family of restricted runs."""

    family: str
    max_deviation: float
    per_scenario: tuple


def lanchester_scenario(delta_b: float, delta_r: float, p: float, q: float,
                        s0_b: float, s0_r: float) -> Scenario:
    """Pure attrition configuration: epidemics switched off, eta neutral."""
    def side(delta, s0):
        return ForceConfig(
            params=ForceParams(delta=delta, eta=1.0),
            timing=TimingParams(),
            s0=s0,
        )
    return Scenario(blue=side(delta_b, s0_b), red=side(delta_r, s0_r), p=p, q=q)


def sir_scenario(beta_b: float, gamma_b: float, gtil_b: float, s0_b: float,
                 beta_r: float = 0.0, gamma_r: float = 0.0,
                 gtil_r: float = 0.0, s0_r: float = 0.5,
                 t_kin: float = DEFAULT_T_KIN) -> Scenario:
    """Pure epidemic configuration: no kinetic combat, no malware attack.

    Patching starts at t = 0 (dt_pat = -t_kin) so the comparison system has
    no live event boundary; the forces are fully decoupled.
    """
    def side(beta, gamma, gtil, s0):
        return ForceConfig(
            params=ForceParams(beta=beta, gamma=gamma, gamma_tilde=gtil),
            timing=TimingParams(dt_pat=-t_kin),
            s0=s0,
        )
    return Scenario(blue=side(beta_b, gamma_b, gtil_b, s0_b),
                    red=side(beta_r, gamma_r, gtil_r, s0_r), p=1.0, q=1.0)


def _sample_family(family: str, rng: np.random.Generator, t_kin: float):
    if family == "lanchester":
        box = LANCHESTER_VALIDATION_BOX
        scn = lanchester_scenario(
            delta_b=rng.uniform(*box["delta"]),
            delta_r=rng.uniform(*box["delta"]),
            p=rng.uniform(*box["p"]),
            q=rng.uniform(*box["q"]),
            s0_b=rng.uniform(*box["s0"]),
            s0_r=rng.uniform(*box["s0"]),
        )
        return scn, None, None
    if family == "sir":
        box = SIR_VALIDATION_BOX
        scn = sir_scenario(
            beta_b=rng.uniform(*box["beta"]),
            gamma_b=rng.uniform(*box["gamma"]),
            gtil_b=rng.uniform(*box["gamma_tilde"]),
            s0_b=rng.uniform(*box["s0"]),
            beta_r=rng.uniform(*box["beta"]),
            gamma_r=rng.uniform(*box["gamma"]),
            gtil_r=rng.uniform(*box["gamma_tilde"]),
            s0_r=rng.uniform(*box["s0"]),
            t_kin=t_kin,
        )
        # Seed the epidemic: I(0) = 0.1 * S(0), S reduced accordingly not
        # required (the comparison model takes S(0) and I(0) independently).
        init_b = ForceState(scn.blue.s0, 0.1 * scn.blue.s0, 0.0, 0.0)
        init_r = ForceState(scn.red.s0, 0.1 * scn.red.s0, 0.0, 0.0)
        return scn, init_b, init_r
    raise ValueError(f"unknown validation family {family!r}")


def compare_methods(scenario: Scenario, config: SimConfig, *,
                    initial_blue: ForceState | None = None,
                    initial_red: ForceState | None = None) -> float:
    """Max over common grid times and compartments of |euler - rk4|."""
    cfg = replace(config, record_trajectory=True, record_stride=1)
    a = run(scenario, cfg, initial_blue=initial_blue, initial_red=initial_red)
    b = run_reference(scenario, cfg,
                      initial_blue=initial_blue, initial_red=initial_red)
    n = min(len(a.trajectory), len(b.trajectory))
    dev_blue = np.abs(a.trajectory.blue[:n] - b.trajectory.blue[:n]).max()
    dev_red = np.abs(a.trajectory.red[:n] - b.trajectory.red[:n]).max()
    return float(max(dev_blue, dev_red))


def validate_cross(family: str, config: SimConfig = SimConfig(),
                   n_scenarios: int = 20, seed: int = 0) -> CrossValidationReport:
    """Cross-validate the Euler path against the RK4 oracle.

    family "lanchester" restricts to pure attrition (only delta, p, q
    nonzero, eta = 1); family "sir" restricts to the pure epidemic
    (delta = alpha = 0, infections seeded at 10% of S(0)). Scenarios are
    drawn from the smooth validation boxes above.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    devs = []
    for _ in range(n_scenarios):
        scn, init_b, init_r = _sample_family(family, rng, config.t_kin)
        devs.append(compare_methods(scn, config,
                                    initial_blue=init_b, initial_red=init_r))
    return CrossValidationReport(
        family=family,
        max_deviation=max(devs) if devs else 0.0,
        per_scenario=tuple(devs),
    )


__all__ = [
    "CrossValidationReport",
    "LANCHESTER_VALIDATION_BOX",
    "NumericalFailureError",
    "RunOutcome",
    "SIR_VALIDATION_BOX",
    "SimConfig",
    "Trajectory",
    "compare_methods",
    "lanchester_scenario",
    "run",
    "run_reference",
    "sir_scenario",
    "validate_cross",
]
