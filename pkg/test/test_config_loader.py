"""
Tests for suite configuration parsing and graph construction from instance specs.
"""

import pytest

from config.config_loader import (
    graph_from_spec,
    load_experiment_configs,
    parse_experiment_configs,
    validate_suites,
)
from models.errors import ConfigError, GraphConstructionError
from models.experiment import ExperimentConfig, InstanceSpec, SuiteReport


def test_gap_suite_defaults_to_both_styles():
    cfg = ExperimentConfig.from_dict({"suite": "gap"})
    assert cfg.style == "both"
    assert cfg.k_values == []
    assert ExperimentConfig.from_dict({"suite": "u2"}).style == "ND"


def test_extra_keys_become_params():
    cfg = ExperimentConfig.from_dict({"suite": "cff-law", "c0": [0.5], "twists": [[1]]})
    assert cfg.params == {"c0": [0.5], "twists": [[1]]}


def test_invalid_suites():
    cases = [
        {"suite": "nope"},
        {"suite": "gap", "k_values": [3, 2]},
        {"suite": "gap", "k_values": [1, 2]},
        {"suite": "gap", "tau": -1.0},
        {"suite": "u2", "style": "NN"},
        {"suite": "kenyon", "tolerance": 0.0},
        {"suite": "kenyon", "seed": "seven"},
        {"suite": "gap", "tau": 2.0, "instances": [{"topology": "cylinder", "k": 2, "tau": 1.0}]},
        [],
    ]
    for data in cases:
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(data)


def test_instance_spec_parsing():
    spec = InstanceSpec.from_dict({
        "id": "r",
        "width": 4,
        "height": 6,
        "tuples": [[[[0, 0], [1, 0]], [[2, 2], [2, 3]]]],
        "random_tuples": {"2": 3},
        "corrupt_edge": [[1, 1], [2, 1]],
        "monodromy": [0.0, 1.0],
    })
    assert (spec.cols, spec.rows) == (4, 6)
    assert spec.tuples == [[((0, 0), (1, 0)), ((2, 2), (2, 3))]]
    assert spec.random_tuples == {2: 3}
    assert spec.corrupt_edge == ((1, 1), (2, 1))
    assert spec.monodromy == 1j


def test_invalid_instances():
    cases = [
        {"topology": "torus"},
        {"topology": "cylinder", "k": 1},
        {"topology": "cylinder", "k": 2, "style": "NN"},
        {"cols": 0, "rows": 2},
        {"cols": 2, "rows": 2, "tuples": [[[0, 0]]]},
        {"cols": 2, "rows": 2, "punctures": ["a"]},
        {"cols": 2, "rows": 2, "random_tuples": {0: 1}},
    ]
    for index, data in enumerate(cases):
        with pytest.raises(ConfigError):
            InstanceSpec.from_dict(data, index)


def test_instance_round_trip_keeps_geometry():
    spec = InstanceSpec.from_dict({"id": "c", "topology": "cylinder", "k": 3, "tau": 1.0, "style": "ND"})
    again = InstanceSpec.from_dict(spec.to_dict())
    assert (again.k, again.tau, again.style) == (3, 1.0, "ND")


def test_validate_suites():
    assert not validate_suites(None)
    assert not validate_suites({"suites": []})
    assert not validate_suites([{"instances": []}])
    assert not validate_suites([{"suite": "kenyon", "instances": {}}])
    assert validate_suites({"suite": "gap"})
    assert validate_suites({"suites": [{"suite": "gap"}, {"suite": "u2"}]})


def test_parse_experiment_configs():
    configs = parse_experiment_configs({"suites": [{"suite": "gap", "k_values": [2, 3]}, {"suite": "cff-law"}]})
    assert [c.suite for c in configs] == ["gap", "cff-law"]
    with pytest.raises(ConfigError):
        parse_experiment_configs(None)


def test_packaged_default_suite_loads():
    configs = load_experiment_configs()
    assert [c.suite for c in configs] == ["kenyon", "gap", "u2", "cff-law"]
    kenyon = configs[0]
    assert kenyon.seed == 7
    assert kenyon.params["enumeration_limit"] == 50000
    assert any(spec.kenyon_punctures for spec in kenyon.instances)


def test_missing_config_exits(tmp_path):
    with pytest.raises(SystemExit) as info:
        load_experiment_configs(str(tmp_path / "missing.yaml"))
    assert info.value.code == 1


def test_malformed_config_exits(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("suites:\n  - suite: gap\n    k_values: [4, 2]\n")
    with pytest.raises(SystemExit):
        load_experiment_configs(str(path))
    path.write_text("suites: [unclosed\n")
    with pytest.raises(SystemExit):
        load_experiment_configs(str(path))


def test_json_config_loads(tmp_path):
    path = tmp_path / "suite.json"
    path.write_text('{"suite": "gap", "style": "DD", "k_values": [2]}')
    (cfg,) = load_experiment_configs(str(path))
    assert cfg.style == "DD"


def test_graph_from_spec():
    cases = [
        # (spec, vertices)
        ({"cols": 4, "rows": 4}, 16),
        ({"topology": "cylinder", "k": 2, "tau": 1.0, "style": "DD"}, 12),
        ({"topology": "cylinder", "k": 2, "tau": 1.0, "style": "ND"}, 8),
        ({"topology": "planar_multiholed", "cols": 6, "rows": 6, "holes": [[2, 2, 2, 2]]}, 32),
        ({"cols": 3, "rows": 3, "punctures": [[0, 0]]}, 8),
    ]
    for data, vertices in cases:
        graph = graph_from_spec(InstanceSpec.from_dict(data))
        assert len(graph.vertices) == vertices
        assert graph.is_balanced


def test_multiholed_topology_needs_holes():
    with pytest.raises(GraphConstructionError):
        graph_from_spec(InstanceSpec.from_dict({"topology": "planar_multiholed", "cols": 4, "rows": 4}))


def test_suite_report_verdict():
    report = SuiteReport("kenyon")
    report.add_row({"k": 3}, 0.25)
    report.add_row({"k": 2}, float("nan"))
    assert report.passed and report.max_error == 0.25
    report.add_row({"k": 1}, 0.5, ok=False)
    assert not report.passed
    report.sort_rows(["k"])
    assert [r["k"] for r in report.rows] == [1, 2, 3]
