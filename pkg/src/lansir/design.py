"""Design space: knowledge as box domains, uniform sampling, scenario
classes, class transformations, and kinetic superiority classification.

Knowledge about a situation enters as per-parameter intervals; with only box
constraints the maximum-entropy distribution is the product of independent
uniforms, so sampling is a plain uniform draw per free parameter followed by
the class overrides. Blue and red share each parameter's box (the model is
symmetric; asymmetry enters through class constraints, never through the
domains).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .integrator import RunOutcome, SimConfig, run
from .model import FORCE_FIELDS, SCENARIO_FIELDS, Scenario
from .observables import ObservableSet, observe

# Half-width of the tie band around delta_n = 0: outcomes inside count as
# even (a draw), never as a win for either side.
EPS_WIN = 1e-3

# Default per-parameter boxes (shared by both forces).
DEFAULT_BOXES = {
    "alpha": (0.0, 1.0),
    "beta": (0.0, 5.0),
    "gamma": (0.0, 1.0),
    "gamma_tilde": (0.0, 1.0),
    "delta": (0.0, 5.0),
    "eta": (0.0, 1.0),
    "p": (0.0, 3.0),
    "q": (0.0, 3.0),
    "dt_att": (-2.0, 4.0),
    "dt_mal": (0.0, 1.0),
    "dt_pat": (-2.0, 4.0),
    "s0": (0.1, 1.0),
}

SCENARIO_CLASSES = ("gen", "kin", "pat", "b-a", "b-p", "equ")

# Constant overrides per class. 'equ' is handled separately: it ties red to
# blue (s0_r := s0_b, delta_r := delta_b, q := p) instead of fixing values.
CLASS_CONSTRAINTS: dict[str, dict[str, float]] = {
    "gen": {},
    "kin": {"eta_b": 1.0, "eta_r": 1.0},
    "pat": {"gamma_b": 0.0, "gamma_r": 0.0,
            "gamma_tilde_b": 0.0, "gamma_tilde_r": 0.0},
    "b-a": {"eta_b": 1.0},
    "b-p": {"gamma_r": 0.0, "gamma_tilde_r": 0.0},
    "equ": {},
}

TRANSFORMATIONS = ("A1", "A2", "A3", "D1", "D2", "D3", "g_kin")


@dataclass(frozen=True)
class Transformation:
    """A class-change map: assigns the overrides, leaves all else untouched.

    source_class names the scenario class whose constraints the input must
    already satisfy ('gen' accepts anything). Applying twice equals applying
    once.
    """

    id: str
    source_class: str
    reference_class: str
    overrides: Mapping[str, float]


_TRANSFORM_TABLE = {
    "A1": Transformation("A1", "gen", "kin", {"eta_b": 1.0, "eta_r": 1.0}),
    "A2": Transformation("A2", "gen", "b-a", {"eta_b": 1.0}),
    "A3": Transformation("A3", "b-a", "kin", {"eta_r": 1.0}),
    "D1": Transformation("D1", "gen", "pat",
                         {"gamma_b": 0.0, "gamma_r": 0.0,
                          "gamma_tilde_b": 0.0, "gamma_tilde_r": 0.0}),
    "D2": Transformation("D2", "gen", "b-p",
                         {"gamma_r": 0.0, "gamma_tilde_r": 0.0}),
    "D3": Transformation("D3", "b-p", "pat",
                         {"gamma_b": 0.0, "gamma_tilde_b": 0.0}),
    "g_kin": Transformation("g_kin", "gen", "kin",
                            {"eta_b": 1.0, "eta_r": 1.0}),
}

# Scenario classes each transformation may be applied to in a campaign.
# 'equ' only adds kinetic-equality ties, so it stays a valid 'gen' source.
TRANSFORM_SOURCE_CLASSES = {
    "A1": ("gen", "equ"),
    "A2": ("gen", "equ"),
    "A3": ("b-a",),
    "D1": ("gen", "equ"),
    "D2": ("gen", "equ"),
    "D3": ("b-p",),
    "g_kin": SCENARIO_CLASSES,
}


def get_transformation(tid: str) -> Transformation:
    try:
        return _TRANSFORM_TABLE[tid]
    except KeyError:
        raise KeyError(f"unknown transformation {tid!r}; "
                       f"valid: {', '.join(TRANSFORMATIONS)}") from None


@dataclass(frozen=True)
class ParameterDomain:
    """Box domains per base parameter name, identical for blue and red."""

    boxes: Mapping[str, tuple] = field(
        default_factory=lambda: dict(DEFAULT_BOXES))

    def __post_init__(self):
        unknown = set(self.boxes) - set(DEFAULT_BOXES)
        if unknown:
            raise ValueError(f"unknown domain parameters: {sorted(unknown)}")
        merged = dict(DEFAULT_BOXES)
        for name, (lo, hi) in self.boxes.items():
            if not lo <= hi:
                raise ValueError(f"domain {name}: lower {lo} > upper {hi}")
            merged[name] = (float(lo), float(hi))
        object.__setattr__(self, "boxes", merged)

    def box(self, name: str) -> tuple:
        """Bounds for a base name ('beta') or a per-force field ('beta_r')."""
        base = name
        if name.endswith("_b") or name.endswith("_r"):
            base = name[:-2]
        if base not in self.boxes:
            raise KeyError(f"no domain for parameter {name!r}")
        return self.boxes[base]

    def as_dict(self) -> dict:
        return {k: list(v) for k, v in self.boxes.items()}


def scenario_class_constraints(scenario_class: str) -> dict[str, float]:
    if scenario_class not in SCENARIO_CLASSES:
        raise KeyError(f"unknown scenario class {scenario_class!r}; "
                       f"valid: {', '.join(SCENARIO_CLASSES)}")
    return dict(CLASS_CONSTRAINTS[scenario_class])


def substream(master_seed: int, index: int) -> np.random.Generator:
    """Independent, reproducible per-run random stream.

    Derived by spawn-key mixing of (master seed, run index), so streams are
    identical no matter how runs are distributed over workers.
    """
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(index,)))


def sample_scenario(domains: ParameterDomain, scenario_class: str,
                    rng: np.random.Generator) -> Scenario:
    """Draw one scenario: independent uniforms, then class overrides.

    Draw order is fixed (ten blue fields, ten red fields, p, q); the class
    constraints are applied afterwards, and 'equ' copies the shared values
    from the blue draws (s0, delta) and sets q := p.
    """
    values = {}
    for tag in ("b", "r"):
        for name in FORCE_FIELDS:
            lo, hi = domains.box(name)
            values[f"{name}_{tag}"] = rng.uniform(lo, hi)
    for name in ("p", "q"):
        lo, hi = domains.box(name)
        values[name] = rng.uniform(lo, hi)

    for key, v in scenario_class_constraints(scenario_class).items():
        values[key] = v
    if scenario_class == "equ":
        values["s0_r"] = values["s0_b"]
        values["delta_r"] = values["delta_b"]
        values["q"] = values["p"]
    return Scenario.from_values(values)


def effective_domains(domains: ParameterDomain,
                      scenario_class: str) -> dict[str, tuple]:
    """Per-field boxes after class constraints (degenerate for overrides).

    'equ'-tied fields keep their full boxes: copying one uniform draw
    preserves each marginal.
    """
    out = {}
    for name in SCENARIO_FIELDS:
        out[name] = domains.box(name)
    for key, v in scenario_class_constraints(scenario_class).items():
        out[key] = (v, v)
    return out


class TransformationError(ValueError):
    """Input scenario violates the transformation's source-class constraints."""


def apply_transformation(t: Transformation | str, x: Scenario) -> Scenario:
    """Apply a class transformation to one scenario.

    Exactly the overridden fields change; everything else is carried over
    bit-identically. Raises TransformationError when x does not satisfy the
    source class (e.g. A3 on a scenario with eta_b != 1).
    """
    if isinstance(t, str):
        t = get_transformation(t)
    values = x.values()
    for key, required in CLASS_CONSTRAINTS[t.source_class].items():
        if values[key] != required:
            raise TransformationError(
                f"{t.id} requires {key} = {required} (source class "
                f"{t.source_class!r}), got {values[key]}"
            )
    if all(values[k] == v for k, v in t.overrides.items()):
        return x
    for key, v in t.overrides.items():
        values[key] = v
    return Scenario.from_values(values)


# Bin edges of the ten superiority levels over delta_n(g_kin) in [-1, 1]:
# thresholds at -0.8, -0.6, ..., 0.8; the top bin is right-closed.
SUPERIORITY_BINS = 10


def superiority_bin(delta_n_kin: float) -> int:
    """Index 0..9 of the superiority level (0: strongest inferiority)."""
    idx = int(np.floor((delta_n_kin + 1.0) / 2.0 * SUPERIORITY_BINS))
    if idx < 0:
        return 0
    if idx >= SUPERIORITY_BINS:
        return SUPERIORITY_BINS - 1
    return idx


@dataclass(frozen=True)
class KineticClassification:
    """Outcome of the pure-kinetic projection of a scenario.

    label: "superior" | "inferior" | "even" for blue, judged on the
    projected run's delta_n against the tie band. The projected outcome and
    observables ride along for reuse (pairing, duration filters,
    superiority partitions).
    """

    label: str
    bin: int
    outcome: RunOutcome
    observables: ObservableSet


def classify_kinetic(x: Scenario, config: SimConfig = SimConfig(),
                     eps_win: float = EPS_WIN) -> KineticClassification:
    """Classify blue as kinetically superior / inferior / even.

    Runs the projection that neutralizes the malware effectiveness penalty
    (eta := 1 for both forces, everything else untouched) and thresholds
    its delta_n at +-eps_win.
    """
    projected = apply_transformation("g_kin", x)
    outcome = run(projected, config)
    obs = observe(outcome, projected, config.t_kin)
    if obs.delta_n > eps_win:
        label = "superior"
    elif obs.delta_n < -eps_win:
        label = "inferior"
    else:
        label = "even"
    return KineticClassification(
        label=label,
        bin=superiority_bin(obs.delta_n),
        outcome=outcome,
        observables=obs,
    )


__all__ = [
    "CLASS_CONSTRAINTS",
    "DEFAULT_BOXES",
    "EPS_WIN",
    "KineticClassification",
    "ParameterDomain",
    "SCENARIO_CLASSES",
    "SUPERIORITY_BINS",
    "TRANSFORMATIONS",
    "TRANSFORM_SOURCE_CLASSES",
    "Transformation",
    "TransformationError",
    "apply_transformation",
    "classify_kinetic",
    "effective_domains",
    "get_transformation",
    "sample_scenario",
    "scenario_class_constraints",
    "substream",
    "superiority_bin",
]
