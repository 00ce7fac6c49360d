"""
Experiment configuration and report models.
Contains the data structures shared by the experiment services and the CLI.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from constants import AppConstants, LatticeConstants, ToleranceConstants
from models.errors import ConfigError

Point = Tuple[int, int]
EdgeSpec = Tuple[Point, Point]


def _point(value: Any, what: str) -> Point:
    try:
        x, y = value
        return int(x), int(y)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid {what} {value!r}: expected [x, y]") from e


def _edge(value: Any) -> EdgeSpec:
    try:
        a, b = value
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid edge {value!r}: expected [[x, y], [x, y]]") from e
    return _point(a, "edge endpoint"), _point(b, "edge endpoint")


def _complex(value: Any, what: str) -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    try:
        return complex(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid {what} {value!r}") from e


@dataclass
class InstanceSpec:
    """One graph of a suite plus the edge tuples to test on it."""
    id: str
    topology: str
    cols: int = 0
    rows: int = 0
    holes: List[List[int]] = field(default_factory=list)
    k: int = 0
    tau: float = AppConstants.DEFAULT_TAU
    style: str = LatticeConstants.STYLE_DD
    seam: int = 0
    punctures: List[Point] = field(default_factory=list)
    kenyon_punctures: bool = False
    monodromy: Optional[complex] = None
    corrupt_edge: Optional[EdgeSpec] = None
    corrupt_factor: complex = -1.0
    tuples: List[List[EdgeSpec]] = field(default_factory=list)
    random_tuples: Dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Validate the graph description."""
        known = (LatticeConstants.PLANAR_RECTANGLE, LatticeConstants.PLANAR_MULTIHOLED, LatticeConstants.CYLINDER)
        if self.topology not in known:
            raise ConfigError(f"Instance {self.id}: unknown topology {self.topology!r}")
        if self.topology == LatticeConstants.CYLINDER:
            if self.k < 2 or not self.tau > 0:
                raise ConfigError(f"Instance {self.id}: cylinder needs k >= 2 and tau > 0")
            if self.style not in (LatticeConstants.STYLE_DD, LatticeConstants.STYLE_ND):
                raise ConfigError(f"Instance {self.id}: unknown style {self.style!r}")
        elif self.cols < 1 or self.rows < 1:
            raise ConfigError(f"Instance {self.id}: planar graphs need cols and rows >= 1")
        for size, count in self.random_tuples.items():
            if int(size) < 1 or int(count) < 0:
                raise ConfigError(f"Instance {self.id}: invalid random tuple request {size}: {count}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any], index: int = 0) -> "InstanceSpec":
        """Create an InstanceSpec from configuration data."""
        try:
            topology = data.get("topology", LatticeConstants.PLANAR_RECTANGLE)
            corrupt = data.get("corrupt_edge")
            return cls(
                id=str(data.get("id", f"instance-{index}")),
                topology=topology,
                cols=int(data.get("cols", data.get("width", 0))),
                rows=int(data.get("rows", data.get("height", 0))),
                holes=[list(map(int, h)) for h in data.get("holes", [])],
                k=int(data.get("k", 0)),
                tau=float(data.get("tau", AppConstants.DEFAULT_TAU)),
                style=str(data.get("style", LatticeConstants.STYLE_DD)),
                seam=int(data.get("seam", 0)),
                punctures=[_point(p, "puncture") for p in data.get("punctures", [])],
                kenyon_punctures=bool(data.get("kenyon_punctures", False)),
                monodromy=None if data.get("monodromy") is None else _complex(data["monodromy"], "monodromy"),
                corrupt_edge=None if corrupt is None else _edge(corrupt),
                corrupt_factor=_complex(data.get("corrupt_factor", -1.0), "corrupt_factor"),
                tuples=[[_edge(e) for e in t] for t in data.get("tuples", [])],
                random_tuples={int(s): int(c) for s, c in data.get("random_tuples", {}).items()},
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"Invalid instance #{index}: {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"id": self.id, "topology": self.topology}
        if self.topology == LatticeConstants.CYLINDER:
            data.update({"k": self.k, "tau": self.tau, "style": self.style, "seam": self.seam})
        else:
            data.update({"cols": self.cols, "rows": self.rows})
            if self.holes:
                data["holes"] = self.holes
        if self.punctures:
            data["punctures"] = [list(p) for p in self.punctures]
        if self.kenyon_punctures:
            data["kenyon_punctures"] = True
        return data


@dataclass
class ExperimentConfig:
    """Parameters of one suite run."""
    suite: str
    instances: List[InstanceSpec] = field(default_factory=list)
    k_values: List[int] = field(default_factory=list)
    tau: float = AppConstants.DEFAULT_TAU
    style: str = AppConstants.DEFAULT_U2_STYLE
    seed: int = 0
    tolerance: float = ToleranceConstants.KENYON_MOMENT
    out: Optional[str] = None
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Validate sweep parameters."""
        if any(b <= a for a, b in zip(self.k_values, self.k_values[1:])):
            raise ConfigError(f"k values must be strictly increasing, got {self.k_values}")
        if any(k < 2 for k in self.k_values):
            raise ConfigError(f"k values must be >= 2, got {self.k_values}")
        if not self.tau > 0 or math.isinf(self.tau):
            raise ConfigError(f"tau must be a positive number, got {self.tau}")
        if self.style not in (LatticeConstants.STYLE_DD, LatticeConstants.STYLE_ND, "both"):
            raise ConfigError(f"Unknown style {self.style!r}")
        if not self.tolerance > 0:
            raise ConfigError(f"Tolerance must be positive, got {self.tolerance}")
        for spec in self.instances:
            if spec.topology == LatticeConstants.CYLINDER and self.suite == AppConstants.SUITE_GAP \
                    and abs(spec.tau - self.tau) > 1e-12:
                raise ConfigError(f"Instance {spec.id}: tau {spec.tau} differs from the suite tau {self.tau}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        """Create an ExperimentConfig from configuration data."""
        if not isinstance(data, dict):
            raise ConfigError("Suite configuration must be a mapping")
        suite = data.get("suite")
        if suite not in (AppConstants.SUITE_KENYON, AppConstants.SUITE_GAP,
                         AppConstants.SUITE_U2, AppConstants.SUITE_CFF_LAW):
            raise ConfigError(f"Unknown suite {suite!r}")
        reserved = {"suite", "instances", "k_values", "tau", "style", "seed", "tolerance", "out"}
        try:
            return cls(
                suite=suite,
                instances=[InstanceSpec.from_dict(d, i) for i, d in enumerate(data.get("instances", []))],
                k_values=[int(k) for k in data.get("k_values", [])],
                tau=float(data.get("tau", AppConstants.DEFAULT_TAU)),
                style=str(data.get("style", "both" if suite == AppConstants.SUITE_GAP else AppConstants.DEFAULT_U2_STYLE)),
                seed=int(data.get("seed", 0)),
                tolerance=float(data.get("tolerance", ToleranceConstants.KENYON_MOMENT)),
                out=data.get("out"),
                params={k: v for k, v in data.items() if k not in reserved},
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"Invalid {suite} suite: {e}") from e


@dataclass
class ConvergenceRow:
    """Discrete vs continuum value of one observable at one k."""
    observable: str
    k: int
    discrete: float
    continuum: float

    @property
    def abs_error(self) -> float:
        return abs(self.discrete - self.continuum)

    @property
    def rel_error(self) -> float:
        return self.abs_error / abs(self.continuum) if self.continuum else math.inf

    def to_dict(self) -> Dict[str, Any]:
        return {
            "observable": self.observable,
            "k": self.k,
            "discrete": self.discrete,
            "continuum": self.continuum,
            "abs_error": self.abs_error,
            "rel_error": self.rel_error,
        }


@dataclass
class SuiteReport:
    """Rows of one suite run plus its verdict."""
    suite: str
    rows: List[Dict[str, Any]] = field(default_factory=list)
    passed: bool = True
    max_error: float = 0.0
    metadata: Dict[str, Any] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    def add_row(self, row: Dict[str, Any], error: Optional[float] = None, ok: bool = True) -> None:
        self.rows.append(row)
        if error is not None and not math.isnan(error):
            self.max_error = max(self.max_error, error)
        if not ok:
            self.passed = False

    def sort_rows(self, keys: Sequence[str]) -> None:
        """Order rows deterministically by the given columns."""
        def column(value: Any) -> Tuple[int, Any]:
            return (0, value) if isinstance(value, (int, float)) else (1, str(value))

        self.rows.sort(key=lambda r: tuple(column(r.get(k, "")) for k in keys))

    def to_summary(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "pass": self.passed,
            "max_error": self.max_error,
            "rows": self.rows,
            "metadata": self.metadata,
            "warnings": self.warnings,
        }
