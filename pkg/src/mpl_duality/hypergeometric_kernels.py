"""
Hypergeometric kernels: rising factorials, the Gauss series F, q-integers and
q-shifted factorials, the q-hypergeometric series φ_q, the connectors
C(m,n;z), C_q^{(1)}, C_q^{(2)}, and exact coefficient checks of the six
contiguous relations.

Numeric entry points take a PrecisionContext and return EvalResult. The
series are summed term by term; once the term ratio drops below
ρ = max(|z|, 0.9|z| + 0.1) the tail is bounded geometrically by t_N ρ/(1-ρ).

Exact entry points (coefficients, contiguous residuals) work on Fraction and
never touch floating values. Arithmetic helpers are generic: they accept
Fraction, int or mpmath reals and return the same kind.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Any, Callable, NamedTuple

import mpmath

from mpl_duality.context import EvalResult, PrecisionContext, to_mpf
from mpl_duality.errors import DivergentSeries, NoConvergence

logger = logging.getLogger(__name__)


class QPower(NamedTuple):
    """The parameter q**exponent, kept symbolic so (q^c;q)_n is formed as a product of 1 - q^(c+j)."""
    exponent: int


# ---------------------------------------------------------------------------
# Elementary factors
# ---------------------------------------------------------------------------

def rising_factorial(alpha: Any, n: int) -> Any:
    """(α)_n = α(α+1)...(α+n-1); (α)_0 = 1."""
    if n < 0:
        raise ValueError(f"n must be non-negative; got {n}")
    out = alpha * 0 + 1
    for j in range(n):
        out = out * (alpha + j)
    return out


def q_integer(m: int, q: Any) -> Any:
    """[m]_q = (1 - q^m)/(1 - q) = 1 + q + ... + q^(m-1)."""
    if m < 0:
        raise ValueError(f"m must be non-negative; got {m}")
    return (1 - q ** m) / (1 - q)


def q_factorial(m: int, q: Any) -> Any:
    """[m]! = [1][2]...[m]; [0]! = 1."""
    out = q * 0 + 1
    for j in range(1, m + 1):
        out = out * q_integer(j, q)
    return out


def q_pochhammer(alpha: Any, q: Any, n: int) -> Any:
    """(α;q)_n = (1-α)(1-qα)...(1-q^(n-1)α). α may be a QPower."""
    out = q * 0 + 1
    for j in range(n):
        if isinstance(alpha, QPower):
            out = out * (1 - q ** (alpha.exponent + j))
        else:
            out = out * (1 - q ** j * alpha)
    return out


# ---------------------------------------------------------------------------
# Series summation
# ---------------------------------------------------------------------------

def _sum_ratio_series(ratio: Callable[[int], Any], x: Any, tol: Any, max_terms: int, label: str) -> EvalResult:
    """Σ t_n with t_0 = 1, t_{n+1} = t_n·ratio(n)·x, stopped by the geometric tail bound."""
    ax = abs(x)
    rho = max(ax, ax * mpmath.mpf("0.9") + mpmath.mpf("0.1"))
    total = mpmath.mpf(1)
    term = mpmath.mpf(1)
    tail = mpmath.inf
    for n in range(max_terms):
        nxt = term * ratio(n) * x
        if not nxt:
            return EvalResult(total, mpmath.mpf(0), n + 1, True)
        total += nxt
        r = abs(nxt / term)
        term = nxt
        if r <= rho:
            tail = abs(term) * rho / (1 - rho)
            if tail <= tol:
                return EvalResult(total, tail, n + 2, True)
    partial = EvalResult(total, tail, max_terms, False)
    raise NoConvergence(f"{label}: no convergence within {max_terms} terms", partial=partial)


def _check_unit_disc(z: Any, label: str) -> None:
    if abs(z) >= 1:
        raise DivergentSeries(f"{label}: series requires |z| < 1; got z = {z}")


def gauss_2f1(alpha: Any, beta: Any, gamma: Any, z: Any, ctx: PrecisionContext) -> EvalResult:
    """F((α,β;γ);z) = Σ (α)_n(β)_n/((γ)_n n!) z^n for |z| < 1."""
    with ctx.workprec():
        a, b, c, x = to_mpf(alpha), to_mpf(beta), to_mpf(gamma), to_mpf(z)
        if c <= 0 and c == int(c):
            raise DivergentSeries(f"gauss_2f1: γ = {gamma} is a non-positive integer")
        _check_unit_disc(x, "gauss_2f1")
        return _sum_ratio_series(
            lambda n: (a + n) * (b + n) / ((c + n) * (n + 1)),
            x, mpmath.mpf(ctx.target_tol), ctx.max_terms, "gauss_2f1",
        )


def _binomial_reciprocal(m: int, n: int) -> Fraction:
    return Fraction(factorial(m) * factorial(n), factorial(m + n))


def connector_series(m: int, n: int, x: Any, tol: Any, max_terms: int) -> tuple[Any, Any, int]:
    """C(m,n;x) at the current working precision: (value, error, terms)."""
    if m == 0 or n == 0:
        return mpmath.mpf(1), mpmath.mpf(0), 1
    pre = to_mpf(_binomial_reciprocal(m, n))
    gamma = m + n + 1
    res = _sum_ratio_series(
        lambda j: mpmath.mpf((m + j) * (n + j)) / ((gamma + j) * (j + 1)),
        x, tol / pre, max_terms, f"connector C({m},{n})",
    )
    return pre * res.value, pre * res.error_estimate, res.terms_used


def connector_C(m: int, n: int, z: Any, ctx: PrecisionContext) -> EvalResult:
    """C(m,n;z) = m! n!/(m+n)! F((m,n;m+n+1);z), 0 <= z < 1."""
    if m < 0 or n < 0:
        raise ValueError(f"connector indices must be non-negative; got ({m},{n})")
    with ctx.workprec():
        x = to_mpf(z)
        if not 0 <= x < 1:
            raise DivergentSeries(f"connector_C requires 0 <= z < 1; got z = {z}")
        value, err, terms = connector_series(m, n, x, mpmath.mpf(ctx.target_tol), ctx.max_terms)
        return EvalResult(value, err, terms, True)


def connector_shift_sum(m: int, n: int, z: Any, ctx: PrecisionContext) -> EvalResult:
    """Closed form of Σ_{a>m} z^(a-m)/a·C(a,n;z) = z m! n!/(m+n+1)! F((m+1,n+1;m+n+2);z)."""
    with ctx.workprec():
        pre = to_mpf(Fraction(factorial(m) * factorial(n), factorial(m + n + 1)))
        f = gauss_2f1(m + 1, n + 1, m + n + 2, z, ctx)
        x = to_mpf(z)
        return EvalResult(x * pre * f.value, abs(x) * pre * f.error_estimate, f.terms_used, f.converged)


def connector_harmonic_sum(m: int, n: int, z: Any, ctx: PrecisionContext) -> EvalResult:
    """Closed form of Σ_{a>m} C(a,n;z)/a = m!(n-1)!/(m+n)! F((m+1,n;m+n+1);z), n >= 1."""
    if n < 1:
        raise ValueError("connector_harmonic_sum requires n >= 1")
    with ctx.workprec():
        pre = to_mpf(Fraction(factorial(m) * factorial(n - 1), factorial(m + n)))
        f = gauss_2f1(m + 1, n, m + n + 1, z, ctx)
        return EvalResult(pre * f.value, pre * f.error_estimate, f.terms_used, f.converged)


# ---------------------------------------------------------------------------
# q-series
# ---------------------------------------------------------------------------

def _check_q(q: Any) -> None:
    if not 0 < q < 1:
        raise DivergentSeries(f"q must satisfy 0 < q < 1; got q = {q}")


def _q_ratio(alpha: Any, beta: Any, gamma: Any, q: Any) -> Callable[[int], Any]:
    def factor(p: Any, n: int) -> Any:
        if isinstance(p, QPower):
            return 1 - q ** (p.exponent + n)
        return 1 - p * q ** n

    def ratio(n: int) -> Any:
        den = factor(gamma, n) * (1 - q ** (n + 1))
        if not den:
            raise DivergentSeries(f"q_phi: (γ;q)_{n + 1} vanishes")
        return factor(alpha, n) * factor(beta, n) / den

    return ratio


def q_phi_series(alpha: Any, beta: Any, gamma: Any, x: Any, q: Any, tol: Any, max_terms: int) -> EvalResult:
    """φ_q at the current working precision; parameters may be QPower."""
    _check_unit_disc(x, "q_phi")
    a, b, c = (p if isinstance(p, QPower) else to_mpf(p) for p in (alpha, beta, gamma))
    return _sum_ratio_series(_q_ratio(a, b, c, q), x, tol, max_terms, "q_phi")


def q_phi(alpha: Any, beta: Any, gamma: Any, z: Any, q: Any, ctx: PrecisionContext) -> EvalResult:
    """φ_q((α,β;γ);z) = Σ (α;q)_n(β;q)_n/((γ;q)_n(q;q)_n) z^n."""
    with ctx.workprec():
        qq = to_mpf(q)
        _check_q(qq)
        return q_phi_series(alpha, beta, gamma, to_mpf(z), qq, mpmath.mpf(ctx.target_tol), ctx.max_terms)


def _q_binomial_reciprocal(m: int, n: int, q: Any) -> Any:
    return q_factorial(m, q) * q_factorial(n, q) / q_factorial(m + n, q)


def connector_q_series(model: int, m: int, n: int, x: Any, q: Any, tol: Any, max_terms: int) -> tuple[Any, Any, int]:
    """C_q^{(ε)}(m,n;x) at the current working precision: (value, error, terms)."""
    if m == 0 or n == 0:
        return mpmath.mpf(1), mpmath.mpf(0), 1
    pre = _q_binomial_reciprocal(m, n, q)
    if model == 1:
        pre = pre * q ** (m * n)
        arg = x
    else:
        arg = q * x
    if not pre:
        return mpmath.mpf(0), mpmath.mpf(0), 0
    res = q_phi_series(QPower(m), QPower(n), QPower(m + n + 1), arg, q, tol / pre, max_terms)
    return pre * res.value, pre * res.error_estimate, res.terms_used


def connector_Cq(model: int, m: int, n: int, z: Any, q: Any, ctx: PrecisionContext) -> EvalResult:
    """C_q^{(1)}(m,n;z) = q^{mn}[m]![n]!/[m+n]! φ_q((q^m,q^n;q^{m+n+1});z),
    C_q^{(2)}(m,n;z) = [m]![n]!/[m+n]! φ_q((q^m,q^n;q^{m+n+1});qz)."""
    if model not in (1, 2):
        raise ValueError(f"model must be 1 or 2; got {model}")
    with ctx.workprec():
        qq, x = to_mpf(q), to_mpf(z)
        _check_q(qq)
        if not 0 <= x < 1:
            raise DivergentSeries(f"connector_Cq requires 0 <= z < 1; got z = {z}")
        value, err, terms = connector_q_series(model, m, n, x, qq, mpmath.mpf(ctx.target_tol), ctx.max_terms)
        return EvalResult(value, err, terms, True)


def connector_q_shift_sum(model: int, m: int, n: int, z: Any, q: Any, ctx: PrecisionContext) -> EvalResult:
    """Closed form of the y0-transport sum.

    ε=1: Σ_{a>m} q^m z^(a-m)/[a]·C_q^{(1)}(a,n;z) = z q^(mn+m+n)[m]![n]!/[m+n+1]! φ_q((q^(m+1),q^(n+1);q^(m+n+2));z)
    ε=2: Σ_{a>m} z^(a-m)/[a]·C_q^{(2)}(a,n;z)     = z [m]![n]!/[m+n+1]! φ_q((q^(m+1),q^(n+1);q^(m+n+2));z)
    """
    with ctx.workprec():
        qq, x = to_mpf(q), to_mpf(z)
        pre = q_factorial(m, qq) * q_factorial(n, qq) / q_factorial(m + n + 1, qq)
        if model == 1:
            pre = pre * qq ** (m * n + m + n)
        f = q_phi_series(QPower(m + 1), QPower(n + 1), QPower(m + n + 2), x, qq,
                         mpmath.mpf(ctx.target_tol), ctx.max_terms)
        return EvalResult(x * pre * f.value, abs(x) * pre * f.error_estimate, f.terms_used, f.converged)


def connector_q_harmonic_sum(model: int, m: int, n: int, z: Any, q: Any, ctx: PrecisionContext) -> EvalResult:
    """Closed form of the telescoped y1-transport sum.

    ε=1: Σ_{a>m} C_q^{(1)}(a,n;z)/[a]     = q^((m+1)n)[m]![n-1]!/[m+n]! φ_q((q^(m+1),q^n;q^(m+n+1));z)
    ε=2: Σ_{a>m} q^a C_q^{(2)}(a,n;z)/[a] = [m]![n-1]!/[m+n]! φ_q((q^(m+1),q^n;q^(m+n+1));z)
    """
    if n < 1:
        raise ValueError("connector_q_harmonic_sum requires n >= 1")
    with ctx.workprec():
        qq, x = to_mpf(q), to_mpf(z)
        pre = q_factorial(m, qq) * q_factorial(n - 1, qq) / q_factorial(m + n, qq)
        if model == 1:
            pre = pre * qq ** ((m + 1) * n)
        f = q_phi_series(QPower(m + 1), QPower(n), QPower(m + n + 1), x, qq,
                         mpmath.mpf(ctx.target_tol), ctx.max_terms)
        return EvalResult(pre * f.value, pre * f.error_estimate, f.terms_used, f.converged)


# ---------------------------------------------------------------------------
# Exact coefficients and contiguous relations
# ---------------------------------------------------------------------------

CONTIGUOUS_RELATIONS = ("HG1", "HG2", "Q1HG1", "Q1HG2", "Q2HG1", "Q2HG2")


def f_coefficient(alpha: Fraction, beta: Fraction, gamma: Fraction, n: int) -> Fraction:
    """Coefficient of z^n in F((α,β;γ);z); zero for n < 0."""
    if n < 0:
        return Fraction(0)
    return (rising_factorial(Fraction(alpha), n) * rising_factorial(Fraction(beta), n)
            / (rising_factorial(Fraction(gamma), n) * factorial(n)))


def phi_coefficient(alpha: Any, beta: Any, gamma: Any, q: Fraction, n: int) -> Fraction:
    """Coefficient of z^n in φ_q((α,β;γ);z); zero for n < 0."""
    if n < 0:
        return Fraction(0)
    return (q_pochhammer(alpha, q, n) * q_pochhammer(beta, q, n)
            / (q_pochhammer(gamma, q, n) * q_pochhammer(q, q, n)))


def _contiguous_residual(relation: str, a: Fraction, b: Fraction, c: Fraction, n: int, q: Fraction | None) -> Fraction:
    if relation == "HG1":
        return f_coefficient(a, b, c, n) - (
            f_coefficient(a, b + 1, c, n) - a / c * f_coefficient(a + 1, b + 1, c + 1, n - 1))
    if relation == "HG2":
        return (c - a) * f_coefficient(a, b, c + 1, n) - (
            c * f_coefficient(a, b, c, n) - a * f_coefficient(a + 1, b, c + 1, n))
    assert q is not None
    phi = lambda x, y, w, k: phi_coefficient(x, y, w, q, k)  # noqa: E731
    if relation == "Q1HG1":
        return phi(a, b, c, n) - (
            phi(a, q * b, c, n) - (1 - a) * b / (1 - c) * phi(q * a, q * b, q * c, n - 1))
    if relation == "Q1HG2":
        return (a - c) * phi(a, b, q * c, n) - (
            (1 - c) * a * phi(a, b, c, n) - (1 - a) * c * phi(q * a, b, q * c, n))
    if relation == "Q2HG1":
        return q ** n * phi(a, b, c, n) - (
            phi(a, q * b, c, n) - (1 - a) / (1 - c) * phi(q * a, q * b, q * c, n - 1))
    if relation == "Q2HG2":
        return (a - c) * q ** n * phi(a, b, q * c, n) - (
            (1 - c) * phi(a, b, c, n) - (1 - a) * phi(q * a, b, q * c, n))
    raise ValueError(f"unknown contiguous relation {relation!r}; expected one of {CONTIGUOUS_RELATIONS}")


@dataclass
class ContiguousReport:
    relation: str
    params: tuple[Fraction, Fraction, Fraction]
    q: Fraction | None
    residuals: list[Fraction] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r == 0 for r in self.residuals)

    def to_record(self) -> dict:
        return {
            "relation": self.relation,
            "params": [str(p) for p in self.params],
            "q": None if self.q is None else str(self.q),
            "n_max": len(self.residuals) - 1,
            "max_abs_residual": str(max((abs(r) for r in self.residuals), default=Fraction(0))),
            "passed": self.passed,
        }


def check_contiguous(relation: str, params: tuple[Any, Any, Any], n_max: int, q: Any = None) -> ContiguousReport:
    """Exact LHS - RHS coefficients of z^n, n = 0..n_max, for one contiguous relation.

    Classical relations take rational (α,β,γ); q-relations take rational α,β,γ
    (typically powers of q) and a rational q in (0,1)."""
    a, b, c = (Fraction(p) for p in params)
    qf = None
    if relation.startswith("Q"):
        if q is None:
            raise ValueError(f"{relation} needs a rational q")
        qf = Fraction(q)
        if not 0 < qf < 1:
            raise DivergentSeries(f"q must satisfy 0 < q < 1; got {qf}")
    report = ContiguousReport(relation, (a, b, c), qf)
    for n in range(n_max + 1):
        report.residuals.append(_contiguous_residual(relation, a, b, c, n, qf))
    logger.debug("contiguous %s params=%s q=%s passed=%s", relation, (a, b, c), qf, report.passed)
    return report
