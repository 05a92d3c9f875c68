"""
The two q-analogues of 𝐿̃i and their connected sums.

    ε=1:  Π q^((k_i-1)m_i)(μ_i + (-1)^μ_i q^(m_(i-1)) z^(m_i-m_(i-1))) / [m_i]^k_i,   connector C_q^(1)
    ε=2:  Π (μ_i q^(m_i) + (-1)^μ_i z^(m_i-m_(i-1))) / [m_i]^k_i,                  connector C_q^(2)

All q-series here converge geometrically, so truncation is plain summation
with joint doubling of M (inner (1,1) factors of model 1 do not decay on their
own). At z = 0 the series reduce to the Bradley-Zhao model (ε=1) and the
(1,...,1)-model (ε=2); exact truncated sums are available for rational q.
"""

from __future__ import annotations

import functools
import itertools
import logging
from fractions import Fraction
from typing import Any, Callable, Sequence

import mpmath

from mpl_duality.algebra_words import (
    X,
    Y0,
    Y1,
    AugmentedIndex,
    NCWord,
    dual_index,
    enumerate_admissible,
    index_of_word,
)
from mpl_duality.connected_sums import (
    CheckBundle,
    ConnectorTable,
    ExactCheck,
    append_letter,
    check_finite,
    shared_table,
    sum_connected,
)
from mpl_duality.context import EvalResult, PrecisionContext, QContext, ResidualReport, parse_rational, to_mpf
from mpl_duality.errors import DivergentSeries, EmptyRightSide
from mpl_duality.hypergeometric_kernels import (
    connector_C,
    connector_q_harmonic_sum,
    connector_q_series,
    connector_q_shift_sum,
    connector_Cq,
    q_integer,
)
from mpl_duality.mpl_evaluator import tilde_li
from mpl_duality.series import Level, WeightTable, end_weight_vector, sum_end_weights

logger = logging.getLogger(__name__)


def _check_z(z: Any) -> None:
    if not 0 <= z < 1:
        raise DivergentSeries(f"q-series need 0 <= z < 1; got z = {z}")


def _levels(index: AugmentedIndex, z: Any) -> list[Level]:
    return [Level(k, mu, z) for k, mu in index]


def q_end_weights(index: AugmentedIndex, z: Any, q: Any, model: int, M: int) -> list:
    """End-weight vector of 𝐿̃i_q^(ε)(k̃; z) at truncation M, in the number type of z and q."""
    one = q * 0 + 1
    return end_weight_vector(_levels(index, z), WeightTable(M, one, q, model))


def tilde_li_q(index: AugmentedIndex, z: Any, qctx: QContext, ctx: PrecisionContext) -> EvalResult:
    index.require_admissible()
    if index.is_empty:
        return EvalResult.exact(1)
    with ctx.workprec():
        x, q = to_mpf(z), qctx.q_mpf()
        _check_z(x)
        rho = max(q, x)
        return sum_end_weights(
            lambda M: q_end_weights(index, x, q, qctx.model, M), ctx,
            geometric=True,
            tail_bound=lambda f, M: abs(f[M]) * rho / (1 - rho),
            label=f"tilde_li_q{qctx.model}({index})",
        )


def tilde_li_q_exact(index: AugmentedIndex, z: Any, q: Any, model: int, M: int) -> Fraction:
    """Truncated sum over 0 < m_1 < ... < m_r <= M in rational arithmetic."""
    index.require_admissible()
    zf, qf = parse_rational(z), parse_rational(q)
    if not 0 < qf < 1:
        raise DivergentSeries(f"q must satisfy 0 < q < 1; got {qf}")
    return sum(q_end_weights(index, zf, qf, model, M), Fraction(0))


# ---------------------------------------------------------------------------
# z = 0 specializations, coded directly
# ---------------------------------------------------------------------------

def zeta_q_bz(k: Sequence[int], q: Any, M: int) -> Any:
    """Bradley-Zhao Σ_{0<m1<...<mr<=M} Π q^((k_i-1)m_i)/[m_i]^k_i."""
    total = q * 0
    for ms in itertools.combinations(range(1, M + 1), len(k)):
        term = q * 0 + 1
        for ki, m in zip(k, ms):
            term *= q ** ((ki - 1) * m) / q_integer(m, q) ** ki
        total += term
    return total


def zeta_q_11(k: Sequence[int], q: Any, M: int) -> Any:
    """(1,...,1)-model Σ_{0<m1<...<mr<=M} Π q^(m_i)/[m_i]^k_i."""
    total = q * 0
    for ms in itertools.combinations(range(1, M + 1), len(k)):
        term = q * 0 + 1
        for ki, m in zip(k, ms):
            term *= q ** m / q_integer(m, q) ** ki
        total += term
    return total


def specialization_check(k: Sequence[int], model: int, q: Any, M: int = 50) -> ExactCheck:
    """𝐿̃i_q^(ε)(((k_1,1),...,(k_r,1)); 0) against its z = 0 model, both truncated at M, exactly."""
    qf = parse_rational(q)
    lhs = tilde_li_q_exact(AugmentedIndex.all_ones(k), 0, qf, model, M)
    rhs = zeta_q_bz(k, qf, M) if model == 1 else zeta_q_11(k, qf, M)
    return ExactCheck(f"specialization-q{model}", lhs, rhs, {"k": list(k), "q": str(qf), "M": M})


# ---------------------------------------------------------------------------
# Connected sums
# ---------------------------------------------------------------------------

def q_table(z: Any, qctx: QContext, ctx: PrecisionContext) -> ConnectorTable:
    """C_q^(ε)(m,n;z) with per-value tolerance target_tol/(4·connected_terms)^2."""
    x, q = to_mpf(z), qctx.q_mpf()
    tol = mpmath.mpf(ctx.target_tol) / (4 * ctx.connected_terms) ** 2
    model, max_terms = qctx.model, ctx.max_terms

    def compute(m: int, n: int) -> tuple[Any, Any]:
        value, err, _ = connector_q_series(model, m, n, x, q, tol, max_terms)
        return value, err

    key = ("Cq", model, str(qctx.q), str(parse_rational(z)), ctx.precision_bits, float(tol))
    return shared_table(key, lambda: ConnectorTable(compute))


def _as_index(side: AugmentedIndex | NCWord) -> AugmentedIndex:
    return index_of_word(side) if isinstance(side, NCWord) else side


def connected_tilde_li_q(left: AugmentedIndex | NCWord, right: AugmentedIndex | NCWord, z: Any,
                         qctx: QContext, ctx: PrecisionContext) -> EvalResult:
    k, l = _as_index(left), _as_index(right)
    check_finite(k, l)
    with ctx.workprec():
        x, q = to_mpf(z), qctx.q_mpf()
        _check_z(x)
        # C_q(m,0;z) = 1 termwise
        if l.is_empty:
            return tilde_li_q(k, x, qctx, ctx)
        if k.is_empty:
            return tilde_li_q(l, x, qctx, ctx)
        return sum_connected(
            lambda M: q_end_weights(k, x, q, qctx.model, M),
            lambda M: q_end_weights(l, x, q, qctx.model, M),
            q_table(z, qctx, ctx), ctx,
            geometric=True, log_power=0,
            label=f"connected_q{qctx.model}({k}; {l})",
        )


def verify_q_symmetry(left: AugmentedIndex, right: AugmentedIndex, z: Any, qctx: QContext,
                      ctx: PrecisionContext) -> ResidualReport:
    return ResidualReport(
        f"q{qctx.model}-symmetry",
        connected_tilde_li_q(left, right, z, qctx, ctx),
        connected_tilde_li_q(right, left, z, qctx, ctx),
        {"k": str(left), "l": str(right), "z": str(z), "q": str(qctx.q)},
        ctx.precision_bits,
    )


def q_chain_evaluator(z: Any, qctx: QContext, ctx: PrecisionContext) -> Callable[[NCWord, NCWord], EvalResult]:
    """Connected-sum evaluator for verify_chain_numeric in model ε."""
    def evaluate(left: NCWord, right: NCWord) -> EvalResult:
        return connected_tilde_li_q(left, right, z, qctx, ctx)
    return evaluate


# ---------------------------------------------------------------------------
# Connector identities and transport
# ---------------------------------------------------------------------------

def _geometric_sum(terms: list, rho: Any) -> EvalResult:
    tail = abs(terms[-1]) * rho / (1 - rho) if terms else mpmath.mpf(0)
    return EvalResult(mpmath.fsum(terms), tail, len(terms), True)


def q_connector_checks(z: Any, qctx: QContext, ctx: PrecisionContext, grid: int = 3,
                       outer: int = 200) -> list[ResidualReport]:
    return list(_q_connector_checks(str(parse_rational(z)), qctx, ctx, grid, outer))


@functools.lru_cache(maxsize=32)
def _q_connector_checks(z: str, qctx: QContext, ctx: PrecisionContext, grid: int,
                        outer: int) -> tuple[ResidualReport, ...]:
    """The four summation identities behind q-transport for 0 <= m <= grid (n >= 1 where needed).

    ε=1: Σ q^m z^(a-m)/[a]·C(a,n)      = z q^(mn+m+n)[m]![n]!/[m+n+1]! φ(...;z), symmetric in m, n
         Σ C(a,n)/[a]                  = q^((m+1)n)[m]![n-1]!/[m+n]! φ(...;z)
         Σ (1 - q^m z^(a-m))/[a]·C(a,n) = q^n/[n]·C(m,n)
    ε=2: Σ z^(a-m)/[a]·C(a,n)          = z [m]![n]!/[m+n+1]! φ(...;z)
         Σ q^a C(a,n)/[a]              = [m]![n-1]!/[m+n]! φ(...;z)
         Σ (q^a - z^(a-m))/[a]·C(a,n)   = C(m,n)/[n]
    """
    out: list[ResidualReport] = []
    model = qctx.model
    with ctx.workprec():
        x, q = to_mpf(z), qctx.q_mpf()
        rho = max(q, x)
        table = q_table(z, qctx, ctx)
        prec = ctx.precision_bits

        def shift_terms(m: int, n: int) -> list:
            lead = q ** m if model == 1 else mpmath.mpf(1)
            return [lead * x ** (a - m) / q_integer(a, q) * table.value(a, n)
                    for a in range(m + 1, m + outer + 1)]

        for m in range(grid + 1):
            for n in range(grid + 1):
                inputs = {"m": m, "n": n, "z": z, "q": str(qctx.q), "model": model}
                lhs = _geometric_sum(shift_terms(m, n), rho)
                out.append(ResidualReport(f"q{model}-connector-y0", lhs, _geometric_sum(shift_terms(n, m), rho),
                                          inputs, prec))
                out.append(ResidualReport(f"q{model}-connector-y0-closed-form", lhs,
                                          connector_q_shift_sum(model, m, n, x, q, ctx), inputs, prec))
                if n == 0:
                    continue
                plain = _geometric_sum([
                    (q ** a if model == 2 else 1) / q_integer(a, q) * table.value(a, n)
                    for a in range(m + 1, m + outer + 1)
                ], rho)
                out.append(ResidualReport(f"q{model}-connector-harmonic", plain,
                                          connector_q_harmonic_sum(model, m, n, x, q, ctx), inputs, prec))
                c = connector_Cq(model, m, n, x, q, ctx)
                scale = (q ** n if model == 1 else 1) / q_integer(n, q)
                rhs = EvalResult(scale * c.value, scale * c.error_estimate, c.terms_used, c.converged)
                lhs_y1 = EvalResult(plain.value - lhs.value, plain.error_estimate + lhs.error_estimate,
                                    outer, True)
                out.append(ResidualReport(f"q{model}-connector-y1", lhs_y1, rhs, inputs, prec))
    return tuple(out)


def verify_q_transport(move: str, left: AugmentedIndex, right: AugmentedIndex, z: Any, qctx: QContext,
                       ctx: PrecisionContext, *, connector_grid: int = 3) -> CheckBundle:
    """Both sides of the y0- or y1-transport relation in model ε, plus the connector identities."""
    if move not in ("y0", "y1"):
        raise ValueError(f"move must be 'y0' or 'y1'; got {move!r}")
    if move == "y1" and right.is_empty:
        raise EmptyRightSide(f"the y1-move needs a non-empty right index; got ({left}; ∅)")
    moved, received = (Y0, Y0) if move == "y0" else (Y1, X)
    inputs = {"k": str(left), "l": str(right), "z": str(z), "q": str(qctx.q), "model": qctx.model}
    bundle = CheckBundle(f"q{qctx.model}-transport-{move}")
    bundle.checks.append(ResidualReport(
        f"q{qctx.model}-transport-{move}",
        connected_tilde_li_q(append_letter(left, moved), right, z, qctx, ctx),
        connected_tilde_li_q(left, append_letter(right, received), z, qctx, ctx),
        inputs, ctx.precision_bits,
    ))
    if connector_grid >= 0:
        bundle.checks.extend(q_connector_checks(z, qctx, ctx, connector_grid))
    return bundle


def verify_q_duality(max_weight: int, z: Any, qctx: QContext, ctx: PrecisionContext) -> list[ResidualReport]:
    """𝐿̃i_q^(ε)(k̃; z) against 𝐿̃i_q^(ε)(k̃†; z) for every admissible index up to max_weight."""
    out = []
    for index in enumerate_admissible(max_weight):
        dual = dual_index(index)
        out.append(ResidualReport(
            f"q{qctx.model}-duality",
            tilde_li_q(index, z, qctx, ctx),
            tilde_li_q(dual, z, qctx, ctx),
            {"k": str(index), "dual": str(dual), "z": str(z), "q": str(qctx.q), "model": qctx.model},
            ctx.precision_bits,
        ))
    return out


def q_limit_check(index: AugmentedIndex, z: Any, model: int, ctx: PrecisionContext,
                  q: Any = Fraction(999, 1000), tolerance: float = 0.05) -> ResidualReport:
    """Heuristic q -> 1 degeneration: 𝐿̃i_q^(ε)(k̃; z) near 𝐿̃i(k̃; z)."""
    qctx = QContext(q=q, model=model)
    loose = ctx.with_tol(min(ctx.target_tol * 1e8, tolerance / 100))
    return ResidualReport(
        f"q{model}-limit",
        tilde_li_q(index, z, qctx, loose),
        tilde_li(index, z, loose),
        {"k": str(index), "z": str(z), "q": str(qctx.q), "model": model},
        ctx.precision_bits,
        tolerance=tolerance,
    )


def q_connector_limit_checks(z: Any, model: int, ctx: PrecisionContext, grid: int = 4,
                             q: Any = Fraction(999, 1000), tolerance: float = 0.05) -> list[ResidualReport]:
    """Heuristic q -> 1 degeneration of the connectors: C_q^(ε)(m,n;z) near C(m,n;z) for 0 <= m, n <= grid."""
    qf = parse_rational(q)
    out = []
    for m in range(grid + 1):
        for n in range(grid + 1):
            out.append(ResidualReport(
                f"q{model}-connector-limit",
                connector_Cq(model, m, n, z, qf, ctx),
                connector_C(m, n, z, ctx),
                {"m": m, "n": n, "z": str(z), "q": str(qf), "model": model},
                ctx.precision_bits,
                tolerance=tolerance,
            ))
    return out
