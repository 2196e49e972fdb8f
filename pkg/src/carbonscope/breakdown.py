"""Carbon result container shared by the embodied, deployment and platform models."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

EMBODIED_FIELDS = ("design", "manufacturing", "package", "test", "retire", "memory",
                   "eol_replacement")
COMPONENT_FIELDS = EMBODIED_FIELDS + ("operational", "reconfiguration")


@dataclass(frozen=True)
class CfpBreakdown:
    """Carbon footprint in kg CO2-eq split by lifecycle component.

    Components may be floats or numpy arrays (one entry per Monte Carlo
    sample); ``embodied`` and ``total`` are always derived from them.
    """

    design: float = 0.0
    manufacturing: float = 0.0
    package: float = 0.0
    test: float = 0.0
    retire: float = 0.0
    memory: float = 0.0
    eol_replacement: float = 0.0
    operational: float = 0.0
    reconfiguration: float = 0.0

    @property
    def embodied(self):
        return (self.design + self.manufacturing + self.package + self.test + self.retire
                + self.memory + self.eol_replacement)

    @property
    def total(self):
        return self.embodied + self.operational + self.reconfiguration

    def __add__(self, other: "CfpBreakdown") -> "CfpBreakdown":
        if not isinstance(other, CfpBreakdown):
            return NotImplemented
        return CfpBreakdown(**{f: getattr(self, f) + getattr(other, f) for f in COMPONENT_FIELDS})

    def scaled(self, factor) -> "CfpBreakdown":
        return CfpBreakdown(**{f: getattr(self, f) * factor for f in COMPONENT_FIELDS})

    def mean(self) -> "CfpBreakdown":
        return CfpBreakdown(**{f: float(np.mean(getattr(self, f))) for f in COMPONENT_FIELDS})

    def as_dict(self) -> dict:
        out = {f.name: _plain(getattr(self, f.name)) for f in fields(self)}
        out["embodied"] = _plain(self.embodied)
        out["total"] = _plain(self.total)
        return out


def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist() if value.ndim else float(value)
    return float(value)
