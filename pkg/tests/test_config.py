import json

import pytest

from gridfuse.config import (
    CONFIG_SECTIONS,
    ConfigError,
    apply_overrides,
    coerce_override_value,
    default_configs,
    defaults_snapshot,
    load_packaged_defaults,
    parse_override,
)


class TestPackagedDefaults:
    def test_file_matches_dataclass_defaults(self):
        # the packaged file is the versioned source of default values; it
        # must never drift from the in-code defaults
        assert load_packaged_defaults() == defaults_snapshot()

    def test_snapshot_is_json_safe(self):
        blob = json.dumps(defaults_snapshot(), sort_keys=True)
        assert json.loads(blob) == defaults_snapshot()

    def test_every_section_present(self):
        snap = defaults_snapshot()
        assert set(snap) == set(CONFIG_SECTIONS)
        assert snap["extraction"]["eps_d0"] == 9.0
        assert snap["fusion"]["eta_min"] == 0.15
        assert snap["grid_sim"]["cell_size"] == 0.15


class TestParseOverride:
    def test_parses_typed_values(self):
        assert parse_override("fusion.eta_min=0.2") == \
            ("fusion", "eta_min", 0.2)
        assert parse_override("extraction.min_cluster_cells=6") == \
            ("extraction", "min_cluster_cells", 6)
        assert coerce_override_value("true") is True
        assert coerce_override_value("hello") == "hello"

    def test_malformed(self):
        with pytest.raises(ConfigError):
            parse_override("fusion.eta_min")
        with pytest.raises(ConfigError):
            parse_override("eta_min=0.2")
        with pytest.raises(ConfigError):
            parse_override("a.b.c=1")


class TestApplyOverrides:
    def test_replaces_without_mutating(self):
        base = default_configs()
        out = apply_overrides(base, {"fusion.eta_min": 0.3})
        assert out["fusion"].eta_min == 0.3
        assert base["fusion"].eta_min == 0.15
        assert out["extraction"] is base["extraction"]

    def test_int_field_typing(self):
        base = default_configs()
        out = apply_overrides(base, {"extraction.min_cluster_cells": 6})
        assert out["extraction"].min_cluster_cells == 6
        # a whole-valued float is accepted, a fractional one is not
        out = apply_overrides(base, {"extraction.min_cluster_cells": 6.0})
        assert out["extraction"].min_cluster_cells == 6
        with pytest.raises(ConfigError):
            apply_overrides(base, {"extraction.min_cluster_cells": 6.5})
        with pytest.raises(ConfigError):
            apply_overrides(base, {"extraction.min_cluster_cells": True})

    def test_float_field_typing(self):
        base = default_configs()
        out = apply_overrides(base, {"fusion.assoc_gate": 4})
        assert out["fusion"].assoc_gate == 4.0
        with pytest.raises(ConfigError):
            apply_overrides(base, {"fusion.assoc_gate": "wide"})
        with pytest.raises(ConfigError):
            apply_overrides(base, {"fusion.assoc_gate": True})

    def test_unknown_section_and_field(self):
        base = default_configs()
        with pytest.raises(ConfigError, match="unknown config section"):
            apply_overrides(base, {"sensor.gain": 1.0})
        with pytest.raises(ConfigError, match="unknown field"):
            apply_overrides(base, {"fusion.bogus": 1.0})

    def test_non_scalar_fields_are_protected(self):
        base = default_configs()
        with pytest.raises(ConfigError, match="not a scalar"):
            apply_overrides(base, {"fusion.fov_grid": 1.0})
        with pytest.raises(ConfigError, match="scalar"):
            apply_overrides(base, {"fusion.eta_min": [0.1, 0.2]})

    def test_validation_runs_after_replace(self):
        base = default_configs()
        with pytest.raises(ConfigError, match="rejected"):
            apply_overrides(base, {"fusion.eta_min": 2.0})
        with pytest.raises(ConfigError, match="rejected"):
            apply_overrides(base, {"extraction.eps_pos": -1.0})

    def test_multiple_overrides(self):
        out = apply_overrides(default_configs(),
                              {"fusion.eta_min": 0.2,
                               "fusion.assoc_gate": 5.0,
                               "grid_sim.cell_size": 0.3})
        assert out["fusion"].eta_min == 0.2
        assert out["fusion"].assoc_gate == 5.0
        assert out["grid_sim"].cell_size == 0.3
