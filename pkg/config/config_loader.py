import os
import sys
from typing import Any, Dict, List, Optional

import yaml

from constants import FileConstants, LatticeConstants
from models.errors import ConfigError, GraphConstructionError
from models.experiment import ExperimentConfig, InstanceSpec
from models.lattice_graph import (
    DimerGraph,
    VertexId,
    build_cylinder,
    build_multiholed,
    build_rectangle,
    kenyon_punctures,
    puncture,
)
from utils.logging import log_debug, log_error


def get_suite_config_path(config_path: Optional[str] = None) -> str:
    """Resolve the configuration path, falling back to the packaged default suite."""
    if config_path:
        return config_path
    if os.path.exists(FileConstants.DEFAULT_SUITE_FILENAME):
        return FileConstants.DEFAULT_SUITE_FILENAME
    package_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    return os.path.join(package_root, FileConstants.DEFAULT_SUITE_FILENAME)


def _suite_entries(data: Any) -> List[Dict[str, Any]]:
    if isinstance(data, dict) and "suites" in data:
        return list(data["suites"] or [])
    if isinstance(data, list):
        return data
    return [data]


def validate_suites(data: Any) -> bool:
    """Validate the top-level structure of a configuration file."""
    if data is None:
        log_error("Configuration file is empty")
        return False
    entries = _suite_entries(data)
    if not entries:
        log_error("Configuration names no suites")
        return False
    for entry in entries:
        if not isinstance(entry, dict) or "suite" not in entry:
            log_error(f"Invalid suite entry: {entry}")
            return False
        if not isinstance(entry.get("instances", []), list):
            log_error(f"Suite {entry['suite']}: 'instances' must be a list")
            return False
    return True


def parse_experiment_configs(data: Any) -> List[ExperimentConfig]:
    """
    Build ExperimentConfig objects from parsed YAML/JSON data.

    Raises:
        ConfigError: If the data is malformed.
    """
    if not validate_suites(data):
        raise ConfigError("Configuration has an invalid structure")
    return [ExperimentConfig.from_dict(entry) for entry in _suite_entries(data)]


def load_experiment_configs(config_path: Optional[str] = None) -> List[ExperimentConfig]:
    """Load and validate the suites of a YAML or JSON file (YAML is a superset of JSON)."""
    config_path = get_suite_config_path(config_path)
    try:
        with open(config_path, "r") as file:
            data = yaml.safe_load(file)
        configs = parse_experiment_configs(data)
        log_debug(f"Loaded {len(configs)} suites from {config_path}")
        return configs

    except FileNotFoundError:
        log_error(f"Configuration file '{config_path}' not found.")
        sys.exit(1)
    except yaml.YAMLError as e:
        log_error(f"Error parsing configuration: {e}")
        sys.exit(1)
    except ConfigError as e:
        log_error(f"Configuration error: {e}")
        sys.exit(1)


def graph_from_spec(spec: InstanceSpec) -> DimerGraph:
    """
    Build the graph of an instance, applying explicit or Kenyon punctures.

    Raises:
        GraphConstructionError: For invalid graph parameters.
    """
    if spec.topology == LatticeConstants.CYLINDER:
        graph = build_cylinder(spec.k, spec.tau, spec.style, seam=spec.seam)
    elif spec.holes:
        graph = build_multiholed(spec.cols, spec.rows, spec.holes)
    else:
        if spec.topology == LatticeConstants.PLANAR_MULTIHOLED:
            raise GraphConstructionError(f"Instance {spec.id}: multiholed topology without holes")
        # odd rectangles may become balanced after punctures
        if spec.punctures or spec.kenyon_punctures:
            graph = build_multiholed(spec.cols, spec.rows, [])
        else:
            graph = build_rectangle(spec.cols, spec.rows)
    victims: List[VertexId] = [VertexId(*p) for p in spec.punctures]
    if spec.kenyon_punctures:
        victims.extend(kenyon_punctures(graph))
    if victims:
        graph = puncture(graph, victims)
    return graph
