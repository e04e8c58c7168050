"""JSON configuration contract: defaults, sections, unknown-key rejection."""

import json

import pytest

from daggercharge.config import (
    ConfigError,
    battery_params_from,
    dagger_config_from,
    expert_config_from,
    load_battery_params,
    load_document,
    train_config_from,
    validate_document,
)


def write(tmp_path, doc):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return path


class TestBatteryDocument:
    def test_flat_fields_with_defaults(self, tmp_path):
        params = load_battery_params(write(tmp_path, {"capacity_ah": 7.0}))
        assert params.capacity_ah == 7.0
        assert params.r_sei_ohm == 0.0165  # default preserved

    def test_battery_section_form(self, tmp_path):
        params = load_battery_params(
            write(tmp_path, {"battery": {"capacity_ah": 6.0, "t_env": 297.0}})
        )
        assert params.capacity_ah == 6.0
        assert params.t_env == 297.0

    def test_unknown_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_battery_params(write(tmp_path, {"capacity_oops": 1.0}))
        with pytest.raises(ConfigError):
            load_battery_params(write(tmp_path, {"battery": {"weird": 1.0}}))

    def test_surrogate_coefficients_from_lists(self, tmp_path):
        params = load_battery_params(
            write(tmp_path, {"ocv_p_coeffs": [3.7, 0.9], "ocv_n_coeffs": [0.5, -0.3]})
        )
        assert params.ocv_p_coeffs == (3.7, 0.9)

    def test_invalid_values_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_battery_params(write(tmp_path, {"capacity_ah": -1.0}))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_document(tmp_path / "absent.json")

    def test_not_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{nope")
        with pytest.raises(ConfigError):
            load_document(path)


class TestSections:
    def test_expert_section_with_bounds(self):
        doc = {"expert": {"horizon": 8, "bounds": {"i_max": 12.0, "i_min": -12.0}}}
        cfg = expert_config_from(doc)
        assert cfg.horizon == 8
        assert cfg.bounds.i_max == 12.0
        assert cfg.bounds.t_max == 313.15  # table default

    def test_expert_defaults_match_bounds_table(self):
        cfg = expert_config_from({})
        assert (cfg.bounds.i_min, cfg.bounds.i_max) == (-10.0, 10.0)
        assert cfg.bounds.v_max == 4.2
        assert cfg.bounds.t_max == 313.15
        assert (cfg.bounds.soc_min, cfg.bounds.soc_max) == (0.0, 1.0)
        assert cfg.horizon == 4
        assert cfg.ts == 10.0
        assert cfg.q_soc == 1.0
        assert cfg.r == 1e-6

    def test_train_section_noise(self):
        cfg = train_config_from({"train": {"noise": {"sigma_v": 0.05}, "epochs": 7}})
        assert cfg.noise.sigma_v == 0.05
        assert cfg.noise.sigma_t == 0.0
        assert cfg.epochs == 7

    def test_train_defaults(self):
        cfg = train_config_from({})
        assert cfg.learning_rate == 5e-4
        assert (cfg.beta1, cfg.beta2, cfg.eps) == (0.9, 0.999, 1e-8)
        assert cfg.noise.sigma_v == 0.020
        assert cfg.noise.sigma_t == 1.0

    def test_dagger_defaults(self):
        cfg = dagger_config_from({})
        assert cfg.n_iterations == 15
        assert cfg.beta0 == 1.0
        assert cfg.beta_decay == 0.5
        assert cfg.episodes_initial == 500
        assert cfg.episodes_per_iter == 100

    def test_unknown_section_key_rejected(self):
        with pytest.raises(ConfigError):
            expert_config_from({"expert": {"horizons": 4}})
        with pytest.raises(ConfigError):
            train_config_from({"train": {"lr": 1.0}})

    def test_document_validation(self):
        validate_document({"capacity_ah": 6.0, "expert": {}, "train": {}, "dagger": {}})
        with pytest.raises(ConfigError):
            validate_document({"capacity_ah": 6.0, "experts": {}})
