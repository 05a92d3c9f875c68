"""
Connected sums 𝐿̃i(k̃; l̃; z) and the transport relations behind the duality.

    𝐿̃i(k̃; l̃; z) = Σ_{m,n} F(m)·G(n)·C(m,n;z)

with F, G the end-weight vectors of k̃ and l̃. Properties checked here:

    symmetry     𝐿̃i(k̃; l̃) = 𝐿̃i(l̃; k̃)
    boundary     𝐿̃i(k̃; ∅) = 𝐿̃i(k̃)
    transport    𝐿̃i(w(k̃)y0; w(l̃)) = 𝐿̃i(w(k̃); w(l̃)y0)
                 𝐿̃i(w(k̃)y1; w(l̃)) = 𝐿̃i(w(k̃); w(l̃)x)      (l̃ non-empty)

and the connector identities that make transport work:

    Σ_{a>m} z^(a-m)/a·C(a,n)      = z m!n!/(m+n+1)! F((m+1,n+1;m+n+2);z)   (symmetric in m, n)
    Σ_{a>m} (1-z^(a-m))/a·C(a,n)  = C(m,n)/n                                (n > 0)

A transport chain moves the letters of w(k̃) one at a time from the left word
to the right word as their τ-images; every state has the same value.
"""

from __future__ import annotations

import functools
import logging
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

import mpmath

from mpl_duality.algebra_words import (
    X,
    Y0,
    Y1,
    AugmentedIndex,
    NCWord,
    index_of_word,
    tau,
    word_of_index,
)
from mpl_duality.context import EvalResult, PrecisionContext, ResidualReport, parse_rational, to_mpf
from mpl_duality.errors import DivergentSeries, EmptyRightSide, NotAdmissible
from mpl_duality.hypergeometric_kernels import (
    connector_C,
    connector_harmonic_sum,
    connector_shift_sum,
)
from mpl_duality.mpl_evaluator import tilde_li, tilde_li_end_weights
from mpl_duality.series import adaptive_truncation, estimate_limit

logger = logging.getLogger(__name__)

RULE_START = "start"
RULE_Y0 = "Y0-move"
RULE_Y1 = "Y1-move"
RULE_X = "X-move-via-symmetry"


# ---------------------------------------------------------------------------
# Connector tables
# ---------------------------------------------------------------------------

MAX_TABLES = 8
MAX_TABLE_ENTRIES = 1 << 21

_ZERO = mpmath.mpf(0)


class ConnectorTable:
    """Memo of connector values keyed by (max(m,n), min(m,n)).

    compute(m, n) returns (value, error) at the current working precision.
    Concurrent writers store identical values, so inserts are idempotent. The
    memo is dropped whole once it holds max_entries values.

    contraction, when set, is a c in (0, 1] with
    C(m,n) <= m!n!/(m+n)!·c^-min(m,n); square_partials uses it to cut rows short."""

    contraction: Any = None

    def __init__(self, compute: Callable[[int, int], tuple[Any, Any]], max_entries: int = MAX_TABLE_ENTRIES):
        self._compute = compute
        self.max_entries = max_entries
        self._values: dict[tuple[int, int], tuple[Any, Any]] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._values)

    def get(self, m: int, n: int) -> tuple[Any, Any]:
        key = (m, n) if m >= n else (n, m)
        hit = self._values.get(key)
        if hit is None:
            hit = self._compute(*key)
            with self._lock:
                if len(self._values) >= self.max_entries:
                    logger.debug("connector memo full at %d values; dropping it", len(self._values))
                    self._values.clear()
                hit = self._values.setdefault(key, hit)
        return hit

    def value(self, m: int, n: int) -> Any:
        return self.get(m, n)[0]


class RowRecurrenceTable(ConnectorTable):
    """C(m,n;z) stored by rows of fixed n = min(m,n).

    A row is filled downwards from two mpmath.hyp2f1 values at its end by

        C(m-1,n) = (1 + z + (1-z)·n/m)·C(m,n) - z·C(m+1,n)

    which is stable in that direction for the decaying solution C(m,n) ~ m^-n.
    Rows grow by doubling, so each entry costs a handful of multiplications."""

    def __init__(self, x: Any, max_entries: int = MAX_TABLE_ENTRIES):
        super().__init__(lambda m, n: (self._anchor(m, n), _ZERO), max_entries)
        self.x = x
        self.contraction = min(mpmath.mpf(1), 1 - x)
        self._rows: dict[int, list] = {}
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def _anchor(self, m: int, n: int) -> Any:
        return mpmath.hyp2f1(m, n, m + n + 1, self.x) / math.comb(m + n, n)

    def get(self, m: int, n: int) -> tuple[Any, Any]:
        a, b = (m, n) if m >= n else (n, m)
        if b == 0:
            return mpmath.mpf(1), _ZERO
        row = self._rows.get(b)
        if row is None or a - b >= len(row):
            row = self._extend(b, a)
        return row[a - b], _ZERO

    def _extend(self, n: int, m: int) -> list:
        with self._lock:
            row = self._rows.get(n, [])
            start = n + len(row)
            if m < start:
                return row
            if self._size >= self.max_entries:
                logger.debug("connector rows full at %d values; dropping them", self._size)
                self._rows.clear()
                self._size = 0
                row, start = [], n
            top = max(m, 2 * start, 64)
            x = self.x
            after, cur = self._anchor(top + 1, n), self._anchor(top, n)
            seg = [cur]
            for k in range(top, start, -1):
                after, cur = cur, (1 + x + (1 - x) * n / k) * cur - x * after
                seg.append(cur)
            seg.reverse()
            row = row + seg
            self._rows[n] = row
            self._size += len(seg)
            return row


_TABLES: OrderedDict[tuple, ConnectorTable] = OrderedDict()
_TABLES_LOCK = threading.Lock()


def shared_table(key: tuple, factory: Callable[[], ConnectorTable]) -> ConnectorTable:
    """The table for key, built by factory on a miss; the least recently used
    table is released once more than MAX_TABLES are held."""
    with _TABLES_LOCK:
        table = _TABLES.get(key)
        if table is not None:
            _TABLES.move_to_end(key)
            return table
        table = _TABLES[key] = factory()
        logger.debug("new connector table %s", key)
        while len(_TABLES) > MAX_TABLES:
            old, _ = _TABLES.popitem(last=False)
            logger.debug("released connector table %s", old)
        return table


def cached_tables() -> int:
    with _TABLES_LOCK:
        return len(_TABLES)


def clear_tables() -> None:
    with _TABLES_LOCK:
        _TABLES.clear()


def classical_table(z: Any, ctx: PrecisionContext) -> ConnectorTable:
    """C(m,n;z) at ctx precision, filled row by row from the three-term recurrence."""
    x = to_mpf(z)
    return shared_table(("C", str(parse_rational(z)), ctx.precision_bits), lambda: RowRecurrenceTable(x))


# ---------------------------------------------------------------------------
# Pairing
# ---------------------------------------------------------------------------

def check_finite(left: AugmentedIndex, right: AugmentedIndex) -> None:
    """The connected sum diverges iff one side is empty and the other is not admissible."""
    if (left.is_empty and not right.admissible) or (right.is_empty and not left.admissible):
        raise DivergentSeries(f"connected sum ({left}; {right}) diverges: one side empty, the other not admissible")


def _suffix_sup(v: list) -> list:
    out = [_ZERO] * (len(v) + 1)
    for j in range(len(v) - 1, -1, -1):
        out[j] = max(out[j + 1], abs(v[j]))
    return out


def _pair_row(terms: list, lead: Any, other: list, other_sup: list, t: int, stop: int,
              table: ConnectorTable, cutoff: Any) -> Any:
    """Cells (t, b), b < stop, weighted lead·other[b]; returns the error dropped.

    With a contraction c the connector bound B(b) = t!b!/(t+b)!·c^-b is
    log-convex in b, so the rest of the row is bounded by its larger end."""
    dropped = _ZERO
    c = table.contraction
    if c is not None:
        lead_abs = abs(lead)
        edge = 1 / (mpmath.binomial(2 * t, t) * c ** t)
        bound = mpmath.mpf(1)
    for b in range(stop):
        if c is not None:
            rest = (stop - b) * lead_abs * other_sup[b] * min(1, max(bound, edge))
            if rest <= cutoff:
                dropped += rest
                break
            bound = bound * (b + 1) / ((t + b + 1) * c)
        w = lead * other[b]
        if not w:
            continue
        if abs(w) <= cutoff:
            dropped += abs(w)
            continue
        value, err = table.get(t, b)
        terms.append(w * value)
        if err:
            dropped += abs(w) * err
    return dropped


def square_partials(F: list, G: list, table: ConnectorTable, cutoff: Any) -> tuple[list, Any]:
    """S(t) = Σ_{m,n <= t} F(m)G(n)C(m,n) for t = 0..M, and the error carried in.

    Products |F(m)G(n)| <= cutoff are dropped and their size added to the error
    (connectors lie in (0, 1]); so is the rest of a row once its bound is below cutoff."""
    M = len(F) - 1
    F_sup, G_sup = _suffix_sup(F), _suffix_sup(G)
    s = _ZERO
    carried = _ZERO
    partials = []
    for t in range(M + 1):
        terms: list = []
        if F[t]:
            carried += _pair_row(terms, F[t], G, G_sup, t, t + 1, table, cutoff)
        if G[t]:
            carried += _pair_row(terms, G[t], F, F_sup, t, t, table, cutoff)
        s += mpmath.fsum(terms)
        partials.append(s)
    return partials, carried


def sum_connected(
    build_left: Callable[[int], list],
    build_right: Callable[[int], list],
    table: ConnectorTable,
    ctx: PrecisionContext,
    *,
    geometric: bool,
    log_power: int,
    label: str,
) -> EvalResult:
    """Square-truncated pairing with adaptive doubling of the outer truncation M."""
    tol = mpmath.mpf(ctx.target_tol)

    def step(M: int) -> tuple[Any, Any]:
        F, G = build_left(M), build_right(M)
        partials, carried = square_partials(F, G, table, tol / (16 * (M + 1) ** 2))
        value, err = estimate_limit(partials, ctx, geometric=geometric, log_power=log_power, select_order=True)
        return value, err + carried

    res = adaptive_truncation(step, ctx, start=ctx.connected_terms, label=label)
    logger.debug("%s: connector table holds %d values", label, len(table))
    return res


def _as_index(side: AugmentedIndex | NCWord) -> AugmentedIndex:
    return index_of_word(side) if isinstance(side, NCWord) else side


def connected_tilde_li(left: AugmentedIndex | NCWord, right: AugmentedIndex | NCWord, z: Any,
                       ctx: PrecisionContext) -> EvalResult:
    k, l = _as_index(left), _as_index(right)
    check_finite(k, l)
    with ctx.workprec():
        x = to_mpf(z)
        if not 0 <= x < 1:
            raise DivergentSeries(f"connected sums need 0 <= z < 1; got z = {z}")
        # C(m,0;z) = 1 termwise
        if l.is_empty:
            return tilde_li(k, x, ctx)
        if k.is_empty:
            return tilde_li(l, x, ctx)
        table = classical_table(z, ctx)
        return sum_connected(
            lambda M: list(tilde_li_end_weights(k, x, M, ctx, require_admissible=False).values),
            lambda M: list(tilde_li_end_weights(l, x, M, ctx, require_admissible=False).values),
            table, ctx,
            geometric=k.count_mu(1) == 0 and l.count_mu(1) == 0,
            log_power=k.harmonic_count + l.harmonic_count + 1,
            label=f"connected({k}; {l})",
        )


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExactCheck:
    """An identity checked in rational arithmetic."""
    label: str
    lhs: Fraction
    rhs: Fraction
    inputs: dict = field(default_factory=dict)

    @property
    def residual(self) -> Fraction:
        return abs(self.lhs - self.rhs)

    @property
    def passed(self) -> bool:
        return self.lhs == self.rhs

    def to_record(self, digits: int) -> dict:
        return {
            "case": self.label,
            "inputs": self.inputs,
            "lhs": str(self.lhs),
            "rhs": str(self.rhs),
            "residual": str(self.residual),
            "budget": "0",
            "pass": self.passed,
        }


@dataclass
class CheckBundle:
    name: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_records(self, digits: int) -> list[dict]:
        return [c.to_record(digits) for c in self.checks]


def append_letter(index: AugmentedIndex, letter: str) -> AugmentedIndex:
    return index_of_word(word_of_index(index) * NCWord((letter,)))


def verify_symmetry(left: AugmentedIndex, right: AugmentedIndex, z: Any, ctx: PrecisionContext) -> ResidualReport:
    return ResidualReport(
        "symmetry",
        connected_tilde_li(left, right, z, ctx),
        connected_tilde_li(right, left, z, ctx),
        {"k": str(left), "l": str(right), "z": str(z)},
        ctx.precision_bits,
    )


# ---------------------------------------------------------------------------
# Connector identities
# ---------------------------------------------------------------------------

def _shift_sum(m: int, n: int, x: Any, table: ConnectorTable, outer: int, swap: bool = False) -> EvalResult:
    """Σ_{a=m+1}^{m+outer} x^(a-m)/a·C(a,n;x) (C(m,a) when swap), with a geometric tail bound."""
    terms = []
    power = mpmath.mpf(1)
    for a in range(m + 1, m + outer + 1):
        power *= x
        c = table.value(n, a) if swap else table.value(a, n)
        terms.append(power / a * c)
    tail = abs(terms[-1]) * x / (1 - x) if terms else mpmath.mpf(0)
    return EvalResult(mpmath.fsum(terms), tail, outer, True)


def connector_shift_checks(z: Any, ctx: PrecisionContext, grid: int = 5, outer: int = 400) -> list[ResidualReport]:
    """Both sides of the y0 connector identity and its closed form for 0 <= m, n <= grid."""
    return list(_connector_shift_checks(str(parse_rational(z)), ctx, grid, outer))


@functools.lru_cache(maxsize=32)
def _connector_shift_checks(z: str, ctx: PrecisionContext, grid: int, outer: int) -> tuple[ResidualReport, ...]:
    out = []
    with ctx.workprec():
        x = to_mpf(z)
        table = classical_table(z, ctx)
        for m in range(grid + 1):
            for n in range(grid + 1):
                inputs = {"m": m, "n": n, "z": z}
                lhs = _shift_sum(m, n, x, table, outer)
                rhs = _shift_sum(n, m, x, table, outer, swap=True)
                out.append(ResidualReport("connector-y0", lhs, rhs, inputs, ctx.precision_bits))
                out.append(ResidualReport("connector-y0-closed-form", lhs, connector_shift_sum(m, n, z, ctx),
                                          inputs, ctx.precision_bits))
    return tuple(out)


def connector_harmonic_checks(z: Any, ctx: PrecisionContext, m_max: int = 4, n_max: int = 4,
                              outer: int = 400) -> list[ResidualReport]:
    """Σ_{a>m} (1-z^(a-m))/a·C(a,n) against C(m,n)/n for 0 <= m <= m_max, 1 <= n <= n_max.

    The outer sum runs over `outer` terms; the z-free part beyond them is the
    telescoped remainder A!(n-1)!/(A+n)! F((A+1,n;A+n+1);z)."""
    return list(_connector_harmonic_checks(str(parse_rational(z)), ctx, m_max, n_max, outer))


@functools.lru_cache(maxsize=32)
def _connector_harmonic_checks(z: str, ctx: PrecisionContext, m_max: int, n_max: int,
                               outer: int) -> tuple[ResidualReport, ...]:
    out = []
    with ctx.workprec():
        x = to_mpf(z)
        table = classical_table(z, ctx)
        for m in range(m_max + 1):
            for n in range(1, n_max + 1):
                geo = _shift_sum(m, n, x, table, outer)
                plain = mpmath.fsum(table.value(a, n) / a for a in range(m + 1, m + outer + 1))
                rest = connector_harmonic_sum(m + outer, n, z, ctx)
                lhs = EvalResult(plain + rest.value - geo.value, rest.error_estimate + geo.error_estimate,
                                 outer, rest.converged)
                c = connector_C(m, n, z, ctx)
                rhs = EvalResult(c.value / n, c.error_estimate / n, c.terms_used, c.converged)
                out.append(ResidualReport("connector-y1", lhs, rhs, {"m": m, "n": n, "z": z}, ctx.precision_bits))
    return tuple(out)


def exact_connector_z0(m: int, n: int, upto: int | None = None) -> ExactCheck:
    """At z = 0: Σ_{a=m+1}^{A} C(a,n;0)/a + A!(n-1)!/(A+n)! = C(m,n;0)/n in rationals."""
    if n < 1:
        raise ValueError("the y1 connector identity needs n >= 1")
    upto = m + 50 if upto is None else upto

    def c0(a: int, b: int) -> Fraction:
        return Fraction(math.factorial(a) * math.factorial(b), math.factorial(a + b))

    lhs = sum((c0(a, n) / a for a in range(m + 1, upto + 1)), Fraction(0))
    lhs += Fraction(math.factorial(upto) * math.factorial(n - 1), math.factorial(upto + n))
    return ExactCheck("connector-y1-exact-z0", lhs, c0(m, n) / n, {"m": m, "n": n, "upto": upto})


# ---------------------------------------------------------------------------
# Transport
# ---------------------------------------------------------------------------

def verify_transport_y0(left: AugmentedIndex, right: AugmentedIndex, z: Any, ctx: PrecisionContext,
                        *, connector_grid: int = 5) -> CheckBundle:
    inputs = {"k": str(left), "l": str(right), "z": str(z)}
    bundle = CheckBundle("transport-y0")
    bundle.checks.append(ResidualReport(
        "transport-y0",
        connected_tilde_li(append_letter(left, Y0), right, z, ctx),
        connected_tilde_li(left, append_letter(right, Y0), z, ctx),
        inputs, ctx.precision_bits,
    ))
    if connector_grid >= 0:
        bundle.checks.extend(connector_shift_checks(z, ctx, connector_grid))
    return bundle


def verify_transport_y1(left: AugmentedIndex, right: AugmentedIndex, z: Any, ctx: PrecisionContext,
                        *, connector_grid: int = 4) -> CheckBundle:
    if right.is_empty:
        raise EmptyRightSide(f"the y1-move needs a non-empty right index; got ({left}; ∅)")
    inputs = {"k": str(left), "l": str(right), "z": str(z)}
    bundle = CheckBundle("transport-y1")
    bundle.checks.append(ResidualReport(
        "transport-y1",
        connected_tilde_li(append_letter(left, Y1), right, z, ctx),
        connected_tilde_li(left, append_letter(right, X), z, ctx),
        inputs, ctx.precision_bits,
    ))
    if connector_grid >= 1:
        bundle.checks.extend(connector_harmonic_checks(z, ctx, connector_grid, connector_grid))
        if parse_rational(z) == 0:
            bundle.checks.extend(exact_connector_z0(m, n)
                                 for m in range(connector_grid + 1) for n in range(1, connector_grid + 1))
    return bundle


# ---------------------------------------------------------------------------
# Transport chains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChainState:
    left: NCWord
    right: NCWord
    rule: str


@dataclass(frozen=True)
class TransportChain:
    index: AugmentedIndex
    states: tuple[ChainState, ...]

    @property
    def dual(self) -> AugmentedIndex:
        return index_of_word(self.states[-1].right)

    def to_record(self) -> dict:
        return {
            "index": str(self.index),
            "dual": str(self.dual),
            "states": [{"left": str(s.left), "right": str(s.right), "rule": s.rule} for s in self.states],
        }


def transport_chain(index: AugmentedIndex) -> TransportChain:
    """Move w(k̃) letter by letter to the right side: (w(k̃), 1) -> ... -> (1, τ(w(k̃)))."""
    if not index.admissible:
        raise NotAdmissible(f"transport chains need an admissible index; got {index}")
    left = list(word_of_index(index).letters)
    right: list[str] = []
    states = [ChainState(NCWord(tuple(left)), NCWord(()), RULE_START)]
    while left:
        u = left.pop()
        if u == Y0:
            rule = RULE_Y0
        elif u == Y1:
            if not right:
                raise EmptyRightSide(f"y1-move with empty right word while transporting {index}")
            rule = RULE_Y1
        else:
            # symmetry, then the y1-move read backwards; needs a non-empty left remainder
            if not left:
                raise EmptyRightSide(f"x-move with empty left word while transporting {index}")
            rule = RULE_X
        right.extend(tau(NCWord((u,))).letters)
        states.append(ChainState(NCWord(tuple(left)), NCWord(tuple(right)), rule))
    return TransportChain(index, tuple(states))


@dataclass
class ChainReport:
    chain: TransportChain
    z: str
    values: list[EvalResult]
    precision_bits: int

    @property
    def max_deviation(self) -> Any:
        vals = [v.value for v in self.values]
        return max(vals) - min(vals) if vals else mpmath.mpf(0)

    @property
    def budget(self) -> Any:
        """The two largest error estimates plus rounding at the largest value."""
        errs = sorted((v.error_estimate for v in self.values), reverse=True)
        scale = max([mpmath.mpf(1)] + [abs(v.value) for v in self.values])
        return mpmath.fsum(errs[:2]) + mpmath.ldexp(1, 8 - self.precision_bits) * scale

    @property
    def passed(self) -> bool:
        return all(v.converged for v in self.values) and self.max_deviation <= self.budget

    def trace(self, digits: int) -> list[dict]:
        """One record per state: left word, right word, rule, value, error budget."""
        return [
            {
                "left": str(s.left),
                "right": str(s.right),
                "rule": s.rule,
                "value": mpmath.nstr(v.value, digits, strip_zeros=False),
                "error_budget": mpmath.nstr(v.error_estimate, 5),
            }
            for s, v in zip(self.chain.states, self.values)
        ]

    def to_record(self, digits: int) -> dict:
        return {
            "case": "chain",
            "inputs": {"index": str(self.chain.index), "z": self.z},
            "dual": str(self.chain.dual),
            "lhs": mpmath.nstr(self.values[0].value, digits, strip_zeros=False),
            "rhs": mpmath.nstr(self.values[-1].value, digits, strip_zeros=False),
            "residual": mpmath.nstr(self.max_deviation, 5),
            "budget": mpmath.nstr(self.budget, 5),
            "truncation": max((v.terms_used for v in self.values), default=0),
            "pass": self.passed,
            "states": self.trace(digits),
        }


def verify_chain_numeric(
    chain: TransportChain,
    z: Any,
    ctx: PrecisionContext,
    *,
    evaluate: Callable[[NCWord, NCWord], EvalResult] | None = None,
) -> ChainReport:
    """Evaluate the connected sum at every state of the chain.

    evaluate(left, right) defaults to the classical connected sum at z."""
    if evaluate is None:
        def evaluate(left: NCWord, right: NCWord) -> EvalResult:
            return connected_tilde_li(left, right, z, ctx)
    values = [evaluate(s.left, s.right) for s in chain.states]
    return ChainReport(chain, str(z), values, ctx.precision_bits)
