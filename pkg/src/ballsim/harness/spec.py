"""Experiment descriptions and the histogram type, plus their serialization."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from ..processes.config import ProcessConfig


@dataclass(frozen=True)
class ExperimentSpec:
    command: str
    process: ProcessConfig | None = None
    n: int | None = None
    m: int | None = None
    m_unit: str = "balls"  # "balls": stop at the first round with W >= m; "rounds": exactly m rounds
    reps: int = 1
    seed: int = 0
    trace: str = "final"
    alpha: float = 0.7
    phi_alpha: float = 0.01
    alpha_tilde: float | None = None
    eps: str = "1/10"
    start: str = "empty"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("repetitions must be at least 1")
        if self.m_unit not in ("balls", "rounds"):
            raise ValueError("m_unit must be 'balls' or 'rounds'")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def to_json(self) -> dict:
        """Everything that determines the results (thread count and paths are excluded)."""
        out = asdict(self)
        out["process"] = None if self.process is None else self.process.to_dict()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentSpec":
        data = dict(data)
        if data.get("process") is not None:
            data["process"] = ProcessConfig.from_dict(data["process"])
        return cls(**data)


@dataclass(frozen=True)
class GapHistogram:
    counts: dict  # gap (Fraction) -> count
    repetitions: int
    n: int
    m: int
    process: str

    def __post_init__(self):
        if sum(self.counts.values()) != self.repetitions:
            raise ValueError("histogram counts must add up to the repetitions")

    @classmethod
    def from_gaps(cls, gaps, n: int, m: int, process: str) -> "GapHistogram":
        counts: dict = {}
        for g in gaps:
            counts[g] = counts.get(g, 0) + 1
        return cls(dict(sorted(counts.items())), len(gaps), n, m, process)

    @property
    def mean(self) -> Fraction:
        return sum((g * c for g, c in self.counts.items()), Fraction(0)) / self.repetitions

    def fraction_within(self, lo, hi) -> Fraction:
        return Fraction(sum(c for g, c in self.counts.items() if lo <= g <= hi), self.repetitions)

    def table(self) -> str:
        """Rows of ``gap : percent%`` in increasing gap order."""
        lines = []
        for g, c in self.counts.items():
            pct = 100 * Fraction(c, self.repetitions)
            pct_s = str(int(pct)) if pct.denominator == 1 else f"{float(pct):.1f}"
            lines.append(f"{format_number(g)} : {pct_s}%")
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {"process": self.process, "n": self.n, "m": self.m, "repetitions": self.repetitions,
                "counts": {format_number(g): c for g, c in self.counts.items()},
                "mean": format_number(self.mean)}


def format_number(v) -> str:
    """Integers plainly, other rationals as a/b, floats via repr."""
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def _default(o):
    if isinstance(o, Fraction):
        return format_number(o)
    if hasattr(o, "to_json"):
        return o.to_json()
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _clean(o):
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    return o


def dumps(obj) -> str:
    return json.dumps(_clean(json.loads(json.dumps(obj, default=_default))), sort_keys=True, indent=2) + "\n"
