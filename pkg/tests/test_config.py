from pathlib import Path

import pytest

from marginalrg.config import RunConfig, flow_config_from_mapping, load_config
from marginalrg.errors import ConfigError

CANONICAL = Path(__file__).resolve().parents[1] / "configs" / "canonical.yaml"


def minimal_mapping(**extra):
    data = {"time": {"p": 1.0}}
    data.update(extra)
    return data


def test_load_canonical_file():
    run = load_config(CANONICAL)
    assert run.label == "canonical"
    assert run.out_dir == "out"
    cfg = run.flow
    assert (cfg.kernel.d, cfg.kernel.kappa, cfg.kernel.q) == (2.0, 1.0, 2)
    assert (cfg.tc.p, cfg.tc.r_model) == (1.0, "zero")
    assert (cfg.grid.n_points, cfg.grid.x_max) == (4096, 40.0)
    assert (cfg.solver.m, cfg.solver.picard_tol, cfg.solver.picard_max) == (64, 1e-10, 50)
    assert (cfg.nonlinearity.mu, cfg.nonlinearity.lam) == (0.05, 0.01)
    assert cfg.nonlinearity.terms == ((3, 1.0),)
    # derived from p and d, not declared in the file
    assert cfg.nonlinearity.critical_power == 2
    assert (cfg.L, cfg.n_steps, cfg.A0) == (2.0, 12, 0.05)
    assert (cfg.g0_kind, cfg.g0_eps) == ("even-bump", 1e-3)
    assert not cfg.allow_negative_mu


def test_defaults_fill_missing_sections():
    cfg = flow_config_from_mapping(minimal_mapping())
    assert cfg.grid.n_points == 4096
    assert cfg.solver.m == 64
    assert cfg.nonlinearity.mu == 0.0
    assert cfg.nonlinearity.critical_power == 2
    assert (cfg.L, cfg.n_steps, cfg.A0, cfg.g0_kind) == (2.0, 12, 0.05, "zero")


def test_string_numbers_are_coerced():
    cfg = flow_config_from_mapping(
        minimal_mapping(solver={"picard_tol": "1e-12"}, flow={"A0": "0.125"})
    )
    assert cfg.solver.picard_tol == 1e-12
    assert cfg.A0 == 0.125


def test_unknown_section_and_keys_are_named():
    with pytest.raises(ConfigError, match="kernels"):
        flow_config_from_mapping(minimal_mapping(kernels={"d": 2.0}))
    with pytest.raises(ConfigError, match="dd"):
        flow_config_from_mapping(minimal_mapping(kernel={"dd": 2.0}))
    with pytest.raises(ConfigError, match="n_steps"):
        flow_config_from_mapping(minimal_mapping(flow={"n_steps": 2.5}))


def test_validation_messages_name_the_condition():
    with pytest.raises(ConfigError, match=r"\|lambda\| < mu"):
        flow_config_from_mapping(
            minimal_mapping(
                nonlinearity={"mu": 0.05, "lam": 0.1, "terms": [[3, 1.0]]}
            )
        )
    with pytest.raises(ConfigError, match="2.5"):
        flow_config_from_mapping(minimal_mapping(kernel={"d": 3.0}))
    with pytest.raises(ConfigError, match="critical power"):
        flow_config_from_mapping(
            minimal_mapping(nonlinearity={"mu": 0.05, "critical_power": 3})
        )
    with pytest.raises(ConfigError, match="mu"):
        flow_config_from_mapping(minimal_mapping(nonlinearity={"mu": -0.05}))
    cfg = flow_config_from_mapping(
        minimal_mapping(nonlinearity={"mu": -0.05}), allow_negative_mu=True
    )
    assert cfg.mu == -0.05


def test_terms_shape_is_checked():
    with pytest.raises(ConfigError, match="pairs"):
        flow_config_from_mapping(
            minimal_mapping(nonlinearity={"mu": 0.05, "terms": [3]})
        )
    with pytest.raises(ConfigError, match="integer"):
        flow_config_from_mapping(
            minimal_mapping(nonlinearity={"mu": 0.05, "terms": [[3.5, 1.0]]})
        )


def test_load_config_overrides_and_errors(tmp_path):
    run = load_config(CANONICAL, out_dir=str(tmp_path), label="probe")
    assert run.out_dir == str(tmp_path)
    assert run.label == "probe"

    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.yaml")

    bad = tmp_path / "bad.yaml"
    bad.write_text("time: [\n")
    with pytest.raises(ConfigError, match="invalid YAML"):
        load_config(bad)

    listy = tmp_path / "list.yaml"
    listy.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_config(listy)

    empty = tmp_path / "empty.yaml"
    empty.write_text("")
    with pytest.raises(ConfigError, match="time"):
        load_config(empty)

    with pytest.raises(ConfigError, match="label"):
        load_config(CANONICAL, label="a/b")


def test_manifest_lists_every_resolved_parameter():
    run = load_config(CANONICAL)
    data = run.manifest("flow", seed=7)
    assert data["version"]
    assert data["command"] == "flow"
    assert data["label"] == "canonical"
    assert data["seed"] == 7
    cfg = data["config"]
    assert set(cfg) >= {
        "kernel",
        "tc",
        "grid",
        "solver",
        "nonlinearity",
        "L",
        "n_steps",
        "A0",
        "g0_kind",
        "g0_eps",
        "allow_negative_mu",
    }
    assert cfg["solver"]["picard_max"] == 50
    assert cfg["tc"]["delta"] == 0.0


def test_runconfig_is_frozen():
    run = RunConfig(flow=flow_config_from_mapping(minimal_mapping()))
    with pytest.raises(AttributeError):
        run.label = "other"
