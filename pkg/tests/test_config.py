import math

import numpy as np
import pytest

from flexarm.config import ENV_VAR, ConfigError, default_config_text, load_config, parse_config
from flexarm.model import compute_coefficients

BEAM = """
[beam]
length_m = 2.0
flexural_rigidity_Nm2 = 14.58
linear_density_kg_per_m = 0.27
tip_mass_kg = 0.05
slider_mass_kg = 0.5
hub_inertia_kgm2 = 5e-3
"""


def test_shipped_config_reproduces_reference_set():
    cfg = load_config()
    assert compute_coefficients(cfg.beam).lam4 == pytest.approx(1.4815, abs=1e-4)
    assert cfg.task.theta_i == -math.pi / 2 and cfg.task.x_f == 1.0
    assert cfg.task.T_f == pytest.approx(2.0 * cfg.time_scale)
    assert cfg.sim_config().t_end == pytest.approx(3.0 * cfg.task.T_f)


def test_minimal_config_gets_defaults():
    cfg = parse_config(BEAM)
    assert cfg.beam.hub_radius == 0.1 and cfg.pso["particles"] == 30
    assert np.array_equal(cfg.gains().k, [2.0, 2.0, 2.0])


def test_missing_length_names_key():
    with pytest.raises(ConfigError, match=r"\[beam\]\.length_m"):
        parse_config(BEAM.replace("length_m = 2.0\n", ""))


def test_negative_rigidity_rejected():
    with pytest.raises(ConfigError, match="flexural_rigidity_Nm2"):
        parse_config(BEAM.replace("14.58", "-14.58"))


def test_unknown_key_and_section():
    with pytest.raises(ConfigError, match=r"\[beam\]\.colour"):
        parse_config(BEAM + 'colour = "red"\n')
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config(BEAM + "[extras]\nx = 1\n")


def test_degree_suffix():
    cfg = parse_config(BEAM + "[task]\ntheta_f_deg = 45.0\n")
    assert cfg.task.theta_f == pytest.approx(math.pi / 4)
    with pytest.raises(ConfigError, match="both"):
        parse_config(BEAM + "[task]\ntheta_f = 0.1\ntheta_f_deg = 45.0\n")
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(BEAM + "[sim]\nrtol_deg = 1.0\n")


def test_type_errors_and_parse_errors():
    with pytest.raises(ConfigError, match="particles"):
        parse_config(BEAM + "[pso]\nparticles = 3.5\n")
    with pytest.raises(ConfigError, match="parse error"):
        parse_config("[beam\n")
    with pytest.raises(ConfigError, match="D"):
        parse_config(BEAM + "[smc]\nD = 0.5\n")


def test_env_var_path(tmp_path, monkeypatch):
    path = tmp_path / "c.toml"
    path.write_text(BEAM + "[pso]\nseed = 11\n")
    monkeypatch.setenv(ENV_VAR, str(path))
    assert load_config().pso["seed"] == 11


def test_shipped_text_is_complete():
    assert "[uncertainty]" in default_config_text()
