"""CVSS v3.1 exploitability and base-score arithmetic, Scope fixed to Unchanged."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

# Metric weight tables from the CVSS v3.1 standard.  PR holds the
# Scope:Unchanged column only; Scope:Changed is not modeled anywhere.
AV_WEIGHTS = {"N": 0.85, "A": 0.62, "L": 0.55, "P": 0.20}
AC_WEIGHTS = {"L": 0.77, "H": 0.44}
PR_WEIGHTS = {"N": 0.85, "L": 0.62, "H": 0.27}
UI_WEIGHTS = {"N": 0.85, "R": 0.62}

WEIGHTS = {"AV": AV_WEIGHTS, "AC": AC_WEIGHTS, "PR": PR_WEIGHTS, "UI": UI_WEIGHTS}

# Impact component levels usable as named constants in model files.
IMPACT_LEVELS = {"N": 0.00, "L": 0.22, "H": 0.56}

# Hardening ladders.  A defense may only move a metric rightward along
# its ladder; every step strictly lowers the exploitability weight.
HARDENING_ORDER = {
    "AV": ("N", "A", "L", "P"),
    "AC": ("L", "H"),
    "PR": ("N", "L", "H"),
    "UI": ("N", "R"),
}

METRICS = ("AV", "AC", "PR", "UI")

SEVERITY_BANDS = (
    (0.0, "None"),
    (3.9, "Low"),
    (6.9, "Medium"),
    (8.9, "High"),
    (10.0, "Critical"),
)


@dataclass(frozen=True)
class MetricVector:
    """One exploitability vector (AV/AC/PR/UI), Scope implicitly Unchanged."""

    av: str
    ac: str
    pr: str
    ui: str

    def __post_init__(self):
        for metric, value in (("AV", self.av), ("AC", self.ac), ("PR", self.pr), ("UI", self.ui)):
            if value not in WEIGHTS[metric]:
                raise ValueError(f"invalid {metric} value {value!r}")

    def get(self, metric: str) -> str:
        return {"AV": self.av, "AC": self.ac, "PR": self.pr, "UI": self.ui}[metric]

    def replace(self, metric: str, value: str) -> "MetricVector":
        parts = {"AV": self.av, "AC": self.ac, "PR": self.pr, "UI": self.ui}
        parts[metric] = value
        return MetricVector(parts["AV"], parts["AC"], parts["PR"], parts["UI"])

    def short_form(self) -> str:
        """Standard short display form, e.g. AV:N/AC:L/PR:N/UI:N."""
        return f"AV:{self.av}/AC:{self.ac}/PR:{self.pr}/UI:{self.ui}"

    @classmethod
    def from_short_form(cls, text: str) -> "MetricVector":
        """Parse the short display form back into a vector."""
        parts = {}
        for piece in text.strip().split("/"):
            metric, _, value = piece.partition(":")
            metric = metric.strip().upper()
            if metric in ("CVSS", "S"):
                continue
            if metric not in METRICS or not value:
                raise ValueError(f"bad vector fragment {piece!r}")
            parts[metric] = value.strip()
        missing = [m for m in METRICS if m not in parts]
        if missing:
            raise ValueError(f"vector missing {', '.join(missing)}")
        return cls(parts["AV"], parts["AC"], parts["PR"], parts["UI"])


@dataclass(frozen=True)
class ImpactTriple:
    """Goal-level impact components (confidentiality, integrity, availability)."""

    c: float
    i: float
    a: float

    def as_tuple(self) -> tuple:
        return (self.c, self.i, self.a)


class BaseScore(NamedTuple):
    score: float
    severity: str


def exploitability(v: MetricVector) -> float:
    """8.22 x AV x AC x PR x UI, carried unrounded; round only for display."""
    return 8.22 * AV_WEIGHTS[v.av] * AC_WEIGHTS[v.ac] * PR_WEIGHTS[v.pr] * UI_WEIGHTS[v.ui]


def isc_base(t: ImpactTriple) -> float:
    """1 - (1-C)(1-I)(1-A)."""
    for value in t.as_tuple():
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"impact component {value} outside [0, 1]")
    return 1.0 - (1.0 - t.c) * (1.0 - t.i) * (1.0 - t.a)


def impact_subscore(t: ImpactTriple) -> float:
    """6.42 x ISC, unrounded (3.5952 for a single High axis, displayed 3.60)."""
    return 6.42 * isc_base(t)


def roundup(x: float) -> float:
    """Smallest one-decimal value >= x, with a guard against float noise.

    Works on the fifth decimal: 7.4822 -> 7.5 but 5.70 stays 5.7 and a value
    like 8.6000000001 (noise) collapses back to 8.6.
    """
    i = int(round(x * 100000))
    if i % 10000 == 0:
        return i / 100000.0
    return (i // 10000 + 1) / 10.0


def severity(score: float) -> str:
    """Qualitative band for a base score."""
    if score == 0.0:
        return "None"
    if score <= 3.9:
        return "Low"
    if score <= 6.9:
        return "Medium"
    if score <= 8.9:
        return "High"
    return "Critical"


def base_score(e_path: float, t: ImpactTriple) -> BaseScore:
    """round_up(min(Impact + E_path, 10)), or 0.0 when the impact is all zero."""
    if isc_base(t) <= 0.0:
        return BaseScore(0.0, "None")
    score = roundup(min(impact_subscore(t) + e_path, 10.0))
    return BaseScore(score, severity(score))


def hardness(metric: str, value: str) -> int:
    """Position of a metric value on its hardening ladder (higher = harder)."""
    return HARDENING_ORDER[metric].index(value)
