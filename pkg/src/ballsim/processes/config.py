"""Tagged process descriptions."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction


class Kind(enum.IntEnum):
    # Integer codes are shared with the numba kernels.
    OneChoice = 0
    DChoice = 1
    OnePlusBeta = 2
    Caching = 3
    Packing = 4
    OverPacking = 5
    Twinning = 6
    Thinning = 7
    MeanThinning = 8
    OnePlusEtaMeanThinning = 9


_ALIASES = {
    "onechoice": "OneChoice",
    "dchoice": "DChoice",
    "twochoice": "TwoChoice",
    "oneplusbeta": "OnePlusBeta",
    "1+beta": "OnePlusBeta",
    "caching": "Caching",
    "memory": "Caching",
    "packing": "Packing",
    "overpacking": "OverPacking",
    "twinning": "Twinning",
    "thinning": "Thinning",
    "meanthinning": "MeanThinning",
    "oneplusetameanthinning": "OnePlusEtaMeanThinning",
    "1+eta": "OnePlusEtaMeanThinning",
}


def _as_fraction(value, name: str) -> Fraction:
    try:
        return Fraction(value)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{name} must be a rational number, got {value!r}") from exc


@dataclass(frozen=True)
class ProcessConfig:
    kind: Kind
    d: int | None = None
    beta: Fraction | None = None
    eta: Fraction | None = None
    f: Fraction | None = None

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        for name in ("beta", "eta", "f"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, _as_fraction(val, name))
        needs = {
            Kind.DChoice: {"d"},
            Kind.OnePlusBeta: {"beta"},
            Kind.Thinning: {"f"},
            Kind.OnePlusEtaMeanThinning: {"eta"},
        }.get(kind, set())
        present = {k for k in ("d", "beta", "eta", "f") if getattr(self, k) is not None}
        if present != needs:
            raise ValueError(f"{kind.name} takes parameters {sorted(needs) or 'none'}, got {sorted(present) or 'none'}")
        if self.d is not None and (int(self.d) != self.d or self.d < 1):
            raise ValueError("d must be a positive integer")
        for name in ("beta", "eta"):
            val = getattr(self, name)
            if val is not None and not (0 < val <= 1):
                raise ValueError(f"{name} must lie in (0, 1]")
        if self.f is not None and self.f < 0:
            raise ValueError("f must be non-negative")

    # Constructors -------------------------------------------------------
    @classmethod
    def one_choice(cls):
        return cls(Kind.OneChoice)

    @classmethod
    def d_choice(cls, d: int):
        return cls(Kind.DChoice, d=d)

    @classmethod
    def two_choice(cls):
        return cls(Kind.DChoice, d=2)

    @classmethod
    def one_plus_beta(cls, beta):
        return cls(Kind.OnePlusBeta, beta=beta)

    @classmethod
    def thinning(cls, f):
        return cls(Kind.Thinning, f=f)

    @classmethod
    def one_plus_eta(cls, eta):
        return cls(Kind.OnePlusEtaMeanThinning, eta=eta)

    @classmethod
    def simple(cls, name: str):
        return cls(Kind[name])

    # Derived properties -------------------------------------------------
    @property
    def label(self) -> str:
        k = self.kind
        if k is Kind.DChoice:
            return "TwoChoice" if self.d == 2 else f"DChoice(d={self.d})"
        if k is Kind.OnePlusBeta:
            return f"OnePlusBeta(beta={self.beta})"
        if k is Kind.Thinning:
            return f"Thinning(f={self.f})"
        if k is Kind.OnePlusEtaMeanThinning:
            return f"OnePlusEtaMeanThinning(eta={self.eta})"
        return k.name

    @property
    def single_ball(self) -> bool:
        return self.kind not in (Kind.Packing, Kind.OverPacking, Kind.Twinning)

    @property
    def weights(self) -> tuple[int, int] | None:
        """(w_+, w_-) for processes with constant branch weights."""
        if self.kind is Kind.Twinning:
            return (1, 2)
        if self.single_ball:
            return (1, 1)
        return None

    def to_dict(self) -> dict:
        out = {"kind": "TwoChoice" if (self.kind is Kind.DChoice and self.d == 2) else self.kind.name}
        if self.kind is Kind.DChoice and self.d != 2:
            out["d"] = self.d
        for name in ("beta", "eta", "f"):
            val = getattr(self, name)
            if val is not None:
                out[name] = str(val)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ProcessConfig":
        return parse_process(data["kind"], d=data.get("d"), beta=data.get("beta"),
                             eta=data.get("eta"), f=data.get("f"))


_CALL = re.compile(r"^\s*([A-Za-z0-9+]+)\s*(?:\((.*)\))?\s*$")


def parse_process(text: str, d=None, beta=None, eta=None, f=None) -> ProcessConfig:
    """Parse a name such as ``Thinning(f=3)`` or ``TwoChoice``; keyword args fill gaps."""
    m = _CALL.match(text)
    if not m:
        raise ValueError(f"cannot parse process {text!r}")
    key = _ALIASES.get(m.group(1).lower())
    if key is None:
        raise ValueError(f"unknown process {m.group(1)!r}")
    params = {"d": d, "beta": beta, "eta": eta, "f": f}
    if m.group(2):
        for part in m.group(2).split(","):
            if not part.strip():
                continue
            name, _, val = part.partition("=")
            name = name.strip()
            if name not in params:
                raise ValueError(f"unknown parameter {name!r}")
            params[name] = val.strip()
    if key == "TwoChoice":
        return ProcessConfig(Kind.DChoice, d=2)
    kind = Kind[key]
    wanted = {
        Kind.DChoice: ("d",),
        Kind.OnePlusBeta: ("beta",),
        Kind.Thinning: ("f",),
        Kind.OnePlusEtaMeanThinning: ("eta",),
    }.get(kind, ())
    kwargs = {}
    for name in wanted:
        if params[name] is None:
            raise ValueError(f"{kind.name} requires {name}")
        kwargs[name] = int(params[name]) if name == "d" else Fraction(str(params[name]))
    return ProcessConfig(kind, **kwargs)
