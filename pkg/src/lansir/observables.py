"""Scalar assessment measures of a finished run.

delta_n = N_b(t_end) - N_r(t_end)   relative survivors (> 0: blue wins)
delta_d = D_b(t_end) - D_r(t_end)   relative losses (> 0: red advantage)
loss_b  = D_b(t_end)                absolute blue losses
delta_t = t_kin_end - t_kin         duration of kinetic combat

With both forces started at S(0) and I(0) = R(0) = D(0) = 0, delta_n and
delta_d lie in [-N_r(0), N_b(0)] and loss_b in [0, N_b(0)].
"""

from __future__ import annotations

from dataclasses import dataclass

from .integrator import RunOutcome
from .model import DEFAULT_T_KIN, Scenario

OBSERVABLE_NAMES = ("delta_n", "delta_d", "loss_b", "delta_t")


@dataclass(frozen=True)
class ObservableSet:
    delta_n: float
    delta_d: float
    loss_b: float
    delta_t: float

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in OBSERVABLE_NAMES}


def observe(outcome: RunOutcome, scenario: Scenario,
            t_kin: float = DEFAULT_T_KIN) -> ObservableSet:
    """Reduce a run to its four scalar observables.

    When the kinetic-end threshold never triggered, t_end stands in for
    t_kin_end (a stagnating run reads as combat lasting until the stop).
    """
    fb = outcome.final_blue
    fr = outcome.final_red
    t_kin_end = outcome.t_kin_end if outcome.t_kin_end is not None else outcome.t_end
    return ObservableSet(
        delta_n=fb.N - fr.N,
        delta_d=fb.D - fr.D,
        loss_b=fb.D,
        delta_t=t_kin_end - t_kin,
    )


__all__ = ["OBSERVABLE_NAMES", "ObservableSet", "observe"]
