"""Run configuration: TOML ingestion, validation and defaults.

Grammar
-------
The file is TOML with the sections ``[beam]``, ``[task]``, ``[sim]``,
``[pso]``, ``[spline]``, ``[ann]``, ``[smc]`` and ``[uncertainty]``.
Every section is optional except ``[beam]``, whose physical keys have no
default.  Unknown sections and unknown keys are errors.  Angles are
radians; a key such as ``theta_i`` may instead be given as
``theta_i_deg`` in degrees (never both).  Times are seconds.

See ``paper.toml`` next to this module for the full key list with the
shipped values.
"""
from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .dynamics import Q_MAX
from .model import BeamConfig, ModelError
from .planning import FamilySettings, Task
from .pso import PRESETS
from .sim import SimConfig
from .smc import REFERENCE_MODES, SmcGains, UncertaintyModel

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

ENV_VAR = "FLEXARM_CONFIG"
REQUIRED = object()


class ConfigError(ValueError):
    """Parse or validation failure; the message starts with the key path."""


def _num(value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeError("expected a number")
    return float(value)


def _int(value):
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeError("expected an integer")
    return value


def _bool(value):
    if not isinstance(value, bool):
        raise TypeError("expected true or false")
    return value


def _str(value):
    if not isinstance(value, str):
        raise TypeError("expected a string")
    return value


def _vec(n):
    def conv(value):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return [float(value)] * n
        if not isinstance(value, list) or len(value) != n:
            raise TypeError(f"expected a number or a list of {n} numbers")
        return [_num(v) for v in value]
    return conv


def _matrix3(value):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [[float(value)] * 3 for _ in range(3)]
    if not isinstance(value, list) or len(value) != 3:
        raise TypeError("expected a number or a 3x3 nested list")
    return [_vec(3)(row) for row in value]


def _positive(x):
    return x > 0


def _nonneg(x):
    return x >= 0


# key -> (converter, default, check, angle?)
SCHEMA = {
    "beam": {
        "length_m": (_num, REQUIRED, _positive, False),
        "flexural_rigidity_Nm2": (_num, REQUIRED, _positive, False),
        "linear_density_kg_per_m": (_num, REQUIRED, _positive, False),
        "tip_mass_kg": (_num, REQUIRED, _nonneg, False),
        "slider_mass_kg": (_num, REQUIRED, _nonneg, False),
        "hub_inertia_kgm2": (_num, REQUIRED, _nonneg, False),
        "hub_radius_m": (_num, 0.1, _positive, False),
        "gravity_m_per_s2": (_num, 10.0, math.isfinite, False),
        "slenderness": (_num, 0.0, _nonneg, False),
        "model": (_str, "nonlinear", lambda s: s in ("nonlinear", "linear"), False),
        "centrifugal": (_bool, False, None, False),
        "damping": (_num, 0.0, _nonneg, False),
        "quadrature_nodes": (_int, 24, lambda n: 2 <= n <= 200, False),
    },
    "task": {
        "theta_i": (_num, -math.pi / 2, math.isfinite, True),
        "theta_f": (_num, 0.0, math.isfinite, True),
        "x_i": (_num, 0.0, math.isfinite, False),
        "x_f": (_num, 1.0, math.isfinite, False),
        "y_i": (_num, 0.0, math.isfinite, False),
        "y_f": (_num, 0.0, math.isfinite, False),
        "T_f_s": (_num, 2.0, _positive, False),
    },
    "sim": {
        "rtol": (_num, 1e-8, _positive, False),
        "atol": (_num, 1e-10, _positive, False),
        "fitness_rtol": (_num, 1e-6, _positive, False),
        "fitness_atol": (_num, 1e-8, _positive, False),
        "horizon": (_num, 3.0, lambda h: h > 2.0, False),
        "dt_out_s": (_num, 0.01, _positive, False),
        "q_max": (_num, Q_MAX, lambda q: 0 < q <= 1, False),
    },
    "pso": {
        "family": (_str, "ann", lambda s: s in ("cycloid", "spline", "ann"), False),
        "coordinate": (_str, "theta", lambda s: s in ("theta", "x", "y", "all"), False),
        "preset": (_str, "canonical", lambda s: s in PRESETS, False),
        "particles": (_int, 30, lambda n: n >= 2, False),
        "iterations": (_int, 70, _nonneg, False),
        "seed": (_int, 0, _nonneg, False),
        "window": (_int, 15, _positive, False),
        "tol": (_num, 1e-8, _nonneg, False),
        "checkpoint_every": (_int, 10, _positive, False),
    },
    "spline": {
        "knots": (_int, 5, _positive, False),
        "knot_margin": (_num, 0.1, _positive, False),
    },
    "ann": {
        "hidden": (_int, 5, lambda n: n >= 2, False),
        "a_min": (_num, 1.0, _positive, False),
        "a_max": (_num, 10.0, _positive, False),
        "w_min": (_num, 0.0, math.isfinite, False),
        "w_max": (_num, 1.0, math.isfinite, False),
    },
    "smc": {
        "k": (_vec(3), 2.0, lambda v: min(v) > 0, False),
        "gamma": (_vec(3), [1.0, 0.5, 0.5], lambda v: min(v) > 0, False),
        "gamma4": (_num, 8.0, _positive, False),
        "psi": (_vec(3), 100.0, lambda v: min(v) > 0, False),
        "D": (_matrix3, 0.1, lambda m: min(map(min, m)) >= 0
              and max(map(sum, m)) <= 1.0, False),
        "safety": (_num, 1.5, lambda s: s >= 1, False),
        "samples": (_int, 200, lambda n: n >= 2, False),
        "sweep": (_num, 0.1, _nonneg, False),
        "coupled": (_bool, True, None, False),
        "include_qddot": (_bool, False, None, False),
        "reference": (_str, "planned", lambda s: s in REFERENCE_MODES, False),
    },
    "uncertainty": {
        "eps": (_num, 0.1, lambda e: 0 <= e <= 0.2, False),
        "omega_rad_per_s": (_num, 20.0, _nonneg, False),
    },
}


def _section(name: str, raw: dict) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(f"[{name}]: expected a table")
    schema = SCHEMA[name]
    out = {}
    seen = set()
    for key, value in raw.items():
        base, scale = key, 1.0
        if key.endswith("_deg") and key[:-4] in schema and schema[key[:-4]][3]:
            base, scale = key[:-4], math.pi / 180.0
        if base not in schema:
            raise ConfigError(f"[{name}].{key}: unknown key")
        if base in seen:
            raise ConfigError(f"[{name}].{key}: given both in radians and degrees")
        seen.add(base)
        conv, _, check, _ = schema[base]
        try:
            val = conv(value)
        except TypeError as exc:
            raise ConfigError(f"[{name}].{key}: {exc}, got {value!r}") from None
        if scale != 1.0:
            val = val * scale
        if check is not None and not check(val):
            raise ConfigError(f"[{name}].{key}: value {value!r} out of range")
        out[base] = val
    for key, (_, default, _, _) in schema.items():
        if key not in out:
            if default is REQUIRED:
                raise ConfigError(f"[{name}].{key}: missing required key")
            out[key] = default
    return out


@dataclass
class RunConfig:
    """Validated configuration with the module-level objects built from it."""

    beam: BeamConfig
    damping: float
    quadrature_nodes: int
    task_seconds: dict
    sim: dict
    pso: dict
    family: FamilySettings
    smc: dict
    uncertainty: dict
    source: str = "<defaults>"
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def time_scale(self) -> float:
        return self.beam.time_scale

    @property
    def task(self) -> Task:
        """Task with ``T_f`` converted to dimensionless time."""
        t = dict(self.task_seconds)
        T_f = t.pop("T_f_s") * self.time_scale
        return Task(T_f=T_f, **t)

    def sim_config(self, horizon: float | None = None) -> SimConfig:
        """Tight-tolerance integration over ``horizon * T_f``."""
        s = self.sim
        h = s["horizon"] if horizon is None else horizon
        return SimConfig(rtol=s["rtol"], atol=s["atol"], t_end=h * self.task.T_f,
                         dt_out=s["dt_out_s"] * self.time_scale, q_max=s["q_max"])

    def fitness_config(self) -> SimConfig:
        s = self.sim
        return SimConfig(rtol=s["fitness_rtol"], atol=s["fitness_atol"], q_max=s["q_max"])

    def gains(self) -> SmcGains:
        s = self.smc
        return SmcGains(k=s["k"], gamma=s["gamma"], gamma4=s["gamma4"], psi=s["psi"])

    def uncertainty_model(self, eps: float | None = None,
                          omega: float | None = None) -> UncertaintyModel:
        u = self.uncertainty
        return UncertaintyModel(D=np.array(self.smc["D"]),
                                eps=u["eps"] if eps is None else eps,
                                omega=u["omega_rad_per_s"] if omega is None else omega)


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """Parse and validate TOML text."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: parse error: {exc}") from None
    unknown = set(raw) - set(SCHEMA)
    if unknown:
        raise ConfigError(f"[{sorted(unknown)[0]}]: unknown section")
    if "beam" not in raw:
        raise ConfigError("[beam]: missing required section")
    sec = {name: _section(name, raw.get(name, {})) for name in SCHEMA}

    b = sec["beam"]
    try:
        beam = BeamConfig(length=b["length_m"], flexural_rigidity=b["flexural_rigidity_Nm2"],
                          linear_density=b["linear_density_kg_per_m"],
                          tip_mass=b["tip_mass_kg"], slider_mass=b["slider_mass_kg"],
                          hub_inertia=b["hub_inertia_kgm2"], hub_radius=b["hub_radius_m"],
                          gravity=b["gravity_m_per_s2"], slenderness=b["slenderness"],
                          model_kind=b["model"], centrifugal=b["centrifugal"])
    except ModelError as exc:
        raise ConfigError(f"[beam]: {exc}") from None
    fam = {**sec["spline"], **sec["ann"]}
    if not fam["a_min"] < fam["a_max"]:
        raise ConfigError("[ann].a_max: must exceed a_min")
    if not fam["w_min"] < fam["w_max"]:
        raise ConfigError("[ann].w_max: must exceed w_min")
    return RunConfig(beam=beam, damping=b["damping"], quadrature_nodes=b["quadrature_nodes"],
                     task_seconds=sec["task"], sim=sec["sim"], pso=sec["pso"],
                     family=FamilySettings(**fam), smc=sec["smc"],
                     uncertainty=sec["uncertainty"], source=source, raw=raw)


def default_config_text() -> str:
    return resources.files("flexarm").joinpath("paper.toml").read_text()


def load_config(path=None) -> RunConfig:
    """Load ``path``, else ``$FLEXARM_CONFIG``, else the shipped ``paper.toml``.

    Raises
    ------
    ConfigError
        On parse or validation failure.
    OSError
        When the file cannot be read.
    """
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is None:
        return parse_config(default_config_text(), "paper.toml")
    path = Path(path)
    return parse_config(path.read_text(), str(path))
