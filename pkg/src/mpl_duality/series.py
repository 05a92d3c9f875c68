"""
Nested-sum engine shared by the classical and q-deformed evaluators.

Every series here has the shape

    Σ_{0<m1<...<mr} Π_i (μ_i·A(m_i) + (-1)^μ_i·B(m_{i-1})·z_i^(m_i - m_{i-1}))·W_{k_i}(m_i)

and is evaluated level by level in O(r·M):

    P_i(m)   = Σ_{m'<m} f_{i-1}(m')                     (prefix sums)
    R_i(m+1) = z_i·(R_i(m) + f_{i-1}(m)·B(m))           (never divides by z)
    f_i(m)   = (μ_i·A(m)·P_i(m) + (-1)^μ_i·R_i(m))·W_{k_i}(m),   f_0 = δ_0.

f_r is the end-weight vector; its prefix sums are the square truncations S(M').

    model 0  classical   W_k = 1/m^k,                 A = 1,    B = 1
    model 1  q-model 1   W_k = q^((k-1)m)/[m]^k,      A = 1,    B(m) = q^m
    model 2  q-model 2   W_k = 1/[m]^k,               A = q^m,  B = 1

Tables are generic over the number type: pass mpmath reals for numeric work or
Fraction for exact truncated sums.

Polynomially convergent sums are accelerated by a generalized Richardson fit of
S(M') on even M' in [M/4, M]; the error estimate is the distance to the fit on
[M/8, M/2]. Connected sums pick the fit order that minimises this distance.
Geometric sums are summed plainly with doubling.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import mpmath

from mpl_duality.context import EvalResult, PrecisionContext
from mpl_duality.errors import NoConvergence

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Level:
    k: int
    mu: int
    z: Any


class WeightTable:
    """W_k(m), A(m), B(m) tabulated for m = 0..M in one number type."""

    def __init__(self, M: int, one: Any, q: Any = None, model: int = 0):
        self.M = M
        self.one = one
        self.zero = one * 0
        self.model = model
        if model == 0:
            self.qpow = None
            self.inv = [self.zero] + [one / m for m in range(1, M + 1)]
        else:
            qpow = [one]
            for _ in range(M):
                qpow.append(qpow[-1] * q)
            self.qpow = qpow
            self.inv = [self.zero] + [(one - q) / (one - qpow[m]) for m in range(1, M + 1)]
        self._weights: dict[int, list] = {}

    def weight(self, k: int) -> list:
        w = self._weights.get(k)
        if w is None:
            w = [x ** k for x in self.inv]
            if self.model == 1 and k > 1:
                w = [wm * self.qpow[m] ** (k - 1) for m, wm in enumerate(w)]
            self._weights[k] = w
        return w

    def a(self, m: int) -> Any:
        return self.qpow[m] if self.model == 2 else self.one

    def b(self, m: int) -> Any:
        return self.qpow[m] if self.model == 1 else self.one


def end_weight_vector(levels: Sequence[Level], table: WeightTable) -> list:
    """f_r(0..M) for the given levels; the empty chain gives δ_0."""
    M, zero = table.M, table.zero
    f = [table.one] + [zero] * M
    for lvl in levels:
        w = table.weight(lvl.k)
        nxt = [zero] * (M + 1)
        prefix = zero
        ring = zero
        for m in range(1, M + 1):
            prev = f[m - 1]
            prefix += prev
            ring = lvl.z * (ring + prev * table.b(m - 1))
            val = -ring if lvl.mu else ring
            if lvl.mu:
                val += table.a(m) * prefix
            nxt[m] = val * w[m]
        f = nxt
    return f


def prefix_sums(f: Sequence[Any]) -> list:
    out = []
    acc = f[0] * 0
    for v in f:
        acc += v
        out.append(acc)
    return out


# ---------------------------------------------------------------------------
# Extrapolation
# ---------------------------------------------------------------------------

def richardson_limit(partials: Sequence[Any], hi: int, order: int, log_power: int) -> Any:
    """Fit S(n) = S + Σ_j Σ_l c_jl (log n)^l / n^j on even n in [hi/4, hi]; return S."""
    lo = max(2, hi // 4)
    evens = list(range(lo + lo % 2, hi + 1, 2))
    order = min(order, (len(evens) - 1) // (log_power + 1))
    if order < 1:
        return partials[hi]
    unknowns = 1 + order * (log_power + 1)
    step = (len(evens) - 1) / (unknowns - 1)
    points = [evens[round(i * step)] for i in range(unknowns)]
    with mpmath.extraprec(32):
        log_hi = mpmath.log(hi)
        rows = []
        for n in points:
            u = mpmath.mpf(hi) / n
            lg = mpmath.log(n) / log_hi
            row = [mpmath.mpf(1)]
            for j in range(1, order + 1):
                for l in range(log_power + 1):
                    row.append(u ** j * lg ** l)
            rows.append(row)
        sol = mpmath.lu_solve(mpmath.matrix(rows), mpmath.matrix([partials[n] for n in points]))
        return +sol[0]


def extrapolate_partials(partials: Sequence[Any], M: int, ctx: PrecisionContext, log_power: int,
                         select_order: bool = False) -> tuple[Any, Any]:
    """(limit estimate, error estimate) from partial sums S(0..M).

    With select_order every fit order up to ctx.extrapolation_order is tried and
    the one whose fits on [M/4, M] and [M/8, M/2] agree best is kept."""
    orders = range(1, ctx.extrapolation_order + 1) if select_order else (ctx.extrapolation_order,)
    best_order, value, err = 0, partials[M], mpmath.inf
    for order in orders:
        fine = richardson_limit(partials, M, order, log_power)
        gap = abs(fine - richardson_limit(partials, M // 2, order, log_power))
        if gap < err:
            best_order, value, err = order, fine, gap
    logger.debug("extrapolation M=%d log_power=%d order=%d estimate=%s err=%s",
                 M, log_power, best_order, mpmath.nstr(value, 15), mpmath.nstr(err, 3))
    return value, err


def adaptive_truncation(
    step: Callable[[int], tuple[Any, Any]],
    ctx: PrecisionContext,
    *,
    start: int,
    label: str,
) -> EvalResult:
    """Run step(M) -> (value, error) for M = start, 2·start, ... until error <= target_tol/4.

    With ctx.adaptive off, step runs once at M = max_terms and the result is
    returned whether or not it meets the tolerance."""
    tol = mpmath.mpf(ctx.target_tol)
    M = min(start if ctx.adaptive else ctx.max_terms, ctx.max_terms)
    while True:
        value, err = step(M)
        logger.debug("%s: M=%d err=%s", label, M, mpmath.nstr(err, 3))
        if err <= tol / 4 or not ctx.adaptive:
            return EvalResult(value, err, M, err <= tol)
        if M >= ctx.max_terms:
            raise NoConvergence(
                f"{label}: error {mpmath.nstr(err, 3)} above {ctx.target_tol} at max_terms={ctx.max_terms}",
                partial=EvalResult(value, err, M, False),
            )
        M = min(2 * M, ctx.max_terms)


def estimate_limit(
    partials: Sequence[Any],
    ctx: PrecisionContext,
    *,
    geometric: bool,
    log_power: int = 0,
    select_order: bool = False,
) -> tuple[Any, Any]:
    """(value, error) from partial sums S(0..M): plain for geometric sums, else extrapolated."""
    M = len(partials) - 1
    if geometric or not ctx.extrapolate:
        return partials[M], abs(partials[M] - partials[M // 2])
    return extrapolate_partials(partials, M, ctx, log_power, select_order)


def sum_end_weights(
    build: Callable[[int], list],
    ctx: PrecisionContext,
    *,
    geometric: bool,
    log_power: int = 0,
    tail_bound: Callable[[list, int], Any] | None = None,
    label: str = "series",
) -> EvalResult:
    """Sum an end-weight vector with adaptive doubling of the truncation M.

    build(M) must return f(0..M) at the current working precision.
    """
    def step(M: int) -> tuple[Any, Any]:
        f = build(M)
        value, err = estimate_limit(prefix_sums(f), ctx, geometric=geometric, log_power=log_power)
        if (geometric or not ctx.extrapolate) and tail_bound is not None:
            err += tail_bound(f, M)
        return value, err

    return adaptive_truncation(step, ctx, start=ctx.initial_terms, label=label)
