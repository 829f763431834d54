"""Result types shared by the invariant and anomaly machinery."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class DetValue:
    """A regularized determinant split into modulus and phase."""

    modulus: float
    phase: float = 0.0
    method: str = ""
    err: float = 0.0

    def __post_init__(self):
        if self.modulus <= 0:
            raise ValueError("determinant modulus must be positive")
        # keep the phase in (-pi, pi]
        p = math.fmod(self.phase, 2 * math.pi)
        if p <= -math.pi:
            p += 2 * math.pi
        elif p > math.pi:
            p -= 2 * math.pi
        self.phase = p

    @property
    def value(self) -> complex:
        return self.modulus * complex(math.cos(self.phase), math.sin(self.phase))

    def to_json(self) -> dict:
        return {"modulus": self.modulus, "phase": self.phase,
                "method": self.method, "err": self.err}


@dataclass
class AnomalyReport:
    """Outcome of a dual-path identity check."""

    identity: str
    lhs: complex
    rhs: complex
    tolerance: float
    inputs: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lhs = complex(self.lhs)
        self.rhs = complex(self.rhs)
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")

    @property
    def abs_discrepancy(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def passed(self) -> bool:
        if self.abs_discrepancy > self.tolerance:
            return False
        for check in self.details.get("extra_checks", []):
            if check["discrepancy"] > check["tolerance"]:
                return False
        return True

    def to_json(self) -> dict:
        return {
            "identity": self.identity,
            "inputs": self.inputs,
            "lhs": {"re": self.lhs.real, "im": self.lhs.imag},
            "rhs": {"re": self.rhs.real, "im": self.rhs.imag},
            "discrepancy": self.abs_discrepancy,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "details": self.details,
        }

    def __str__(self) -> str:
        flag = "pass" if self.passed else "FAIL"
        return (f"[{flag}] {self.identity}: lhs={self.lhs:.10g} rhs={self.rhs:.10g} "
                f"|diff|={self.abs_discrepancy:.3e} (tol {self.tolerance:.1e})")
