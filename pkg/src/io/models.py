"""Data models shared across the certification pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from ..linalg.norms import Vector

STATUS_CERTIFIED = "certified"
STATUS_MISCLASSIFIED = "misclassified"

ORACLE_GRID_MIN = "grid-min"
ORACLE_ATTACK_UPPER = "attack-upper"
ORACLE_SAMPLE_CHECK = "sample-check"

REPORT_SCHEMA_VERSION = 1


@dataclass(slots=True)
class Certificate:
    """A certified lower bound on the minimum adversarial distortion.

    ``radius`` always equals ``bracket_safe``; ``bracket_unsafe`` is the
    smallest radius at which the method's predicate failed, if one was seen.
    Untargeted certificates keep their per-target certificates in ``targets``.
    """

    method: str
    p: str
    true_class: int
    target_class: Optional[int]
    radius: float
    iterations: int = 0
    bracket_unsafe: Optional[float] = None
    bracket_safe: float = 0.0
    wall_time_ms: float = 0.0
    status: str = STATUS_CERTIFIED
    targets: List["Certificate"] = field(default_factory=list)

    @property
    def misclassified(self) -> bool:
        return self.status == STATUS_MISCLASSIFIED


@dataclass(slots=True)
class OracleResult:
    """Outcome of an independent check.

    ``value`` is a radius for grid-min and attack-upper and a
    pass flag for sample-check. ``witness`` is a perturbation delta.
    """

    kind: str
    value: float | bool | None
    found: bool = True
    witness: Optional[Vector] = None
    samples: int = 0


@dataclass(slots=True)
class ComparisonRow:
    """One method-vs-oracle line of a compare run."""

    method: str
    target_class: Optional[int]
    certified: float
    attack_upper: Optional[float] = None
    grid_min: Optional[float] = None
    gap_attack: Optional[float] = None
    gap_grid: Optional[float] = None
    sample_check: Optional[bool] = None
    note: str = ""


@dataclass(slots=True)
class RunReport:
    """Machine-readable summary of one CLI invocation."""

    command: str
    model_path: Optional[str]
    input_path: Optional[str]
    methods: List[str]
    p: str
    mode: str
    true_class: Optional[int] = None
    certificates: List[Certificate] = field(default_factory=list)
    comparisons: List[ComparisonRow] = field(default_factory=list)
    timing_ms: Dict[str, float] = field(default_factory=dict)
    rows: List[Dict[str, Any]] = field(default_factory=list)
    schema_version: int = REPORT_SCHEMA_VERSION
