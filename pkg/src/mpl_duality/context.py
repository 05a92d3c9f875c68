"""
Evaluation contexts and results.

PrecisionContext  - binary precision, target tolerance, truncation caps.
QContext          - the q parameter (0 < q < 1) and the model selector ε ∈ {1, 2}.
EvalResult        - value + error estimate + truncation used + convergence flag.
ResidualReport    - lhs and rhs of an identity with residual and error budget.

Defaults resolution order (first one set wins):
  1. explicit keyword argument
  2. MPL_PREC_BITS / MPL_TARGET_TOL / MPL_MAX_TERMS environment variables
  3. hard-coded defaults (192 bits, 1e-12, 32768 terms)

Usage:
    from mpl_duality.context import PrecisionContext, QContext
    ctx = PrecisionContext.from_env(target_tol=1e-15)
    qctx = QContext(q="1/3", model=2)
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import mpmath
from pydantic import BaseModel, ConfigDict, Field, field_validator

from mpl_duality.errors import NotParseable

_DEFAULT_PREC_BITS = 192
_DEFAULT_TARGET_TOL = 1e-12


def parse_rational(value: Any) -> Fraction:
    """Parse a decimal string, a "p/r" string, an int, a float or a Fraction exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise NotParseable(f"not a real number: {value!r}")
    if isinstance(value, (int, float)):
        return Fraction(value)
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise NotParseable(f"cannot parse real number {value!r}: {exc}") from exc


def to_mpf(value: Any) -> mpmath.mpf:
    """Convert an exact or decimal value to an mpf at the current working precision."""
    if isinstance(value, mpmath.mpf):
        return value
    frac = parse_rational(value)
    return mpmath.mpf(frac.numerator) / frac.denominator


class PrecisionContext(BaseModel):
    model_config = ConfigDict(frozen=True)

    precision_bits: int = Field(default=_DEFAULT_PREC_BITS, ge=32, description="Binary working precision.")
    target_tol: float = Field(default=_DEFAULT_TARGET_TOL, gt=0, description="Absolute error target.")
    max_terms: int = Field(default=1 << 15, ge=1, description="Cap on any truncation M.")
    adaptive: bool = Field(default=True, description="Double the truncation until the tolerance is met.")
    extrapolate: bool = Field(default=True, description="Accelerate polynomially convergent sums.")
    extrapolation_order: int = Field(default=8, ge=1, description="Number of 1/M powers in the tail fit.")
    initial_terms: int = Field(default=256, ge=8, description="First truncation of the doubling schedule.")
    connected_terms: int = Field(default=200, ge=8, description="Outer truncation for connected sums.")

    @classmethod
    def from_env(cls, **overrides: Any) -> "PrecisionContext":
        values: dict[str, Any] = {}
        bits = os.environ.get("MPL_PREC_BITS", "").strip()
        tol = os.environ.get("MPL_TARGET_TOL", "").strip()
        terms = os.environ.get("MPL_MAX_TERMS", "").strip()
        if bits:
            values["precision_bits"] = int(bits)
        if tol:
            values["target_tol"] = float(tol)
        if terms:
            values["max_terms"] = int(terms)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @property
    def digits(self) -> int:
        """Decimal digits printed for values: floor(precision_bits * 0.3)."""
        return int(math.floor(self.precision_bits * 0.3))

    def with_tol(self, target_tol: float) -> "PrecisionContext":
        return self.model_copy(update={"target_tol": target_tol})

    def workprec(self):
        return mpmath.workprec(self.precision_bits)


class QContext(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    q: Fraction = Field(description="Deformation parameter, 0 < q < 1, stored exactly.")
    model: int = Field(default=1, description="Model selector ε: 1 or 2.")

    @field_validator("q", mode="before")
    @classmethod
    def _parse_q(cls, value: Any) -> Fraction:
        q = parse_rational(value)
        if not 0 < q < 1:
            raise ValueError(f"q must satisfy 0 < q < 1; got {q}")
        return q

    @field_validator("model")
    @classmethod
    def _check_model(cls, value: int) -> int:
        if value not in (1, 2):
            raise ValueError(f"model must be 1 or 2; got {value}")
        return value

    def q_mpf(self) -> mpmath.mpf:
        return to_mpf(self.q)


@dataclass(frozen=True)
class EvalResult:
    value: Any
    error_estimate: Any
    terms_used: int
    converged: bool

    def to_record(self, digits: int) -> dict:
        return {
            "value": mpmath.nstr(self.value, digits, strip_zeros=False),
            "error_estimate": mpmath.nstr(self.error_estimate, 5),
            "truncation": self.terms_used,
            "converged": self.converged,
        }

    @classmethod
    def exact(cls, value: Any) -> "EvalResult":
        return cls(mpmath.mpf(value), mpmath.mpf(0), 0, True)


@dataclass(frozen=True)
class ResidualReport:
    """Two evaluations of the same quantity and their agreement."""
    label: str
    lhs: EvalResult
    rhs: EvalResult
    inputs: dict = field(default_factory=dict)
    precision_bits: int = _DEFAULT_PREC_BITS
    tolerance: float | None = None

    @property
    def residual(self) -> mpmath.mpf:
        return abs(to_mpf(self.lhs.value) - to_mpf(self.rhs.value))

    @property
    def budget(self) -> mpmath.mpf:
        scale = max(mpmath.mpf(1), abs(to_mpf(self.lhs.value)))
        rounding = scale * mpmath.ldexp(1, 8 - self.precision_bits)
        errors = to_mpf(self.lhs.error_estimate) + to_mpf(self.rhs.error_estimate) + rounding
        if self.tolerance is not None:
            errors += to_mpf(self.tolerance)
        return errors

    @property
    def passed(self) -> bool:
        return self.lhs.converged and self.rhs.converged and self.residual <= self.budget

    def to_record(self, digits: int) -> dict:
        return {
            "case": self.label,
            "inputs": self.inputs,
            "lhs": mpmath.nstr(self.lhs.value, digits, strip_zeros=False),
            "rhs": mpmath.nstr(self.rhs.value, digits, strip_zeros=False),
            "residual": mpmath.nstr(self.residual, 5),
            "budget": mpmath.nstr(self.budget, 5),
            "truncation": max(self.lhs.terms_used, self.rhs.terms_used),
            "pass": self.passed,
        }
