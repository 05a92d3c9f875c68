"""
Multiple polylogarithms to high precision.

    multiple_polylog(k, zs)    Li_k(z1,...,zr) = Σ z1^m1 z2^(m2-m1)...zr^(mr-m(r-1)) / (m1^k1...mr^kr)
    one_var_mpl(k, I, z)       Li^I_k(z): z_i = z for i in I, 1 otherwise
    tilde_li(k̃, z)             Σ Π (μ_i + (-1)^μ_i z^(m_i - m_(i-1))) / m_i^k_i,  𝐿̃i(∅; z) = 1
    L_map(p, z)                the linear map L on A0, through the basis expansion or monomials

Domain: real z with |z| < 1; z = -1 is admitted for tilde_li when k_r >= 2
(level-two values). z = 1 is rejected.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import mpmath

from mpl_duality.algebra_words import (
    E0,
    E1,
    EZ,
    AugmentedIndex,
    NCPoly,
    NCWord,
    expand_in_basis,
    index_of_word,
    is_in_A0,
)
from mpl_duality.context import EvalResult, PrecisionContext, ResidualReport, to_mpf
from mpl_duality.errors import DivergentSeries, InvalidIndex, NotInA0
from mpl_duality.series import Level, WeightTable, end_weight_vector, sum_end_weights

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EndWeightVector:
    """F(m), m = 0..M: the truncated series binned by its last summation variable."""
    values: tuple
    M: int

    def total(self) -> Any:
        return mpmath.fsum(self.values)


def _tail_bound(k_last: int, ratio: Any, f: list, M: int) -> Any:
    """Bound for Σ_{m>M} f(m) from the last term: geometric when |ratio| < 1, else ∫_M^∞ x^-k."""
    last = abs(f[M])
    if abs(ratio) < 1:
        return last * abs(ratio) / (1 - abs(ratio))
    if k_last >= 2:
        return last * M / (k_last - 1)
    return mpmath.inf


# ---------------------------------------------------------------------------
# Li_k(z1, ..., zr)
# ---------------------------------------------------------------------------

def multiple_polylog(k: Sequence[int], zs: Sequence[Any], ctx: PrecisionContext) -> EvalResult:
    if len(k) != len(zs):
        raise InvalidIndex(f"index {tuple(k)} and arguments {tuple(zs)} differ in length")
    if any(ki < 1 for ki in k):
        raise InvalidIndex(f"index entries must be positive; got {tuple(k)}")
    if not k:
        return EvalResult.exact(1)
    with ctx.workprec():
        args = [to_mpf(z) for z in zs]
        if any(abs(z) > 1 for z in args):
            raise DivergentSeries(f"multiple_polylog requires |z_i| <= 1; got {tuple(zs)}")
        if abs(args[-1]) == 1 and k[-1] == 1:
            raise DivergentSeries(f"Li_{tuple(k)} diverges: k_r = 1 with |z_r| = 1")
        levels = [Level(ki, 0, z) for ki, z in zip(k, args)]
        geometric = all(abs(z) < 1 for z in args)
        log_power = sum(1 for ki, z in zip(k[:-1], args[:-1]) if ki == 1 and z == 1)

        def build(M: int) -> list:
            return end_weight_vector(levels, WeightTable(M, mpmath.mpf(1)))

        return sum_end_weights(
            build, ctx, geometric=geometric, log_power=log_power,
            tail_bound=lambda f, M: _tail_bound(k[-1], args[-1], f, M),
            label=f"Li_{tuple(k)}",
        )


def one_var_mpl(k: Sequence[int], I: Iterable[int], z: Any, ctx: PrecisionContext) -> EvalResult:
    """Li^I_k(z) with I a set of 1-based positions."""
    k = tuple(k)
    I = frozenset(I)
    r = len(k)
    if any(i < 1 or i > r for i in I):
        raise InvalidIndex(f"positions {sorted(I)} out of range for depth {r}")
    if r and k[-1] == 1 and r not in I:
        raise InvalidIndex(f"Li^I_{k} needs k_r != 1 or r in I")
    with ctx.workprec():
        if abs(to_mpf(z)) >= 1:
            raise DivergentSeries(f"one_var_mpl requires |z| < 1; got z = {z}")
    return multiple_polylog(k, [z if i in I else 1 for i in range(1, r + 1)], ctx)


# ---------------------------------------------------------------------------
# 𝐿̃i(k̃; z)
# ---------------------------------------------------------------------------

def _check_tilde_domain(index: AugmentedIndex, z: Any) -> None:
    if abs(z) < 1 or index.is_empty:
        return
    if z == -1 and index.components[-1][0] >= 2:
        return
    raise DivergentSeries(f"𝐿̃i({index}; z) needs |z| < 1, or z = -1 with k_r >= 2; got z = {z}")


def _end_weights(index: AugmentedIndex, z: Any, M: int) -> list:
    levels = [Level(k, mu, z) for k, mu in index]
    return end_weight_vector(levels, WeightTable(M, mpmath.mpf(1)))


def tilde_li(index: AugmentedIndex, z: Any, ctx: PrecisionContext) -> EvalResult:
    index.require_admissible()
    if index.is_empty:
        return EvalResult.exact(1)
    with ctx.workprec():
        x = to_mpf(z)
        _check_tilde_domain(index, x)
        k_last, mu_last = index.components[-1]
        return sum_end_weights(
            lambda M: _end_weights(index, x, M), ctx,
            geometric=index.count_mu(1) == 0 and abs(x) < 1,
            log_power=index.harmonic_count,
            tail_bound=lambda f, M: _tail_bound(k_last, x if mu_last == 0 else 1, f, M),
            label=f"tilde_li({index})",
        )


def tilde_li_end_weights(index: AugmentedIndex, z: Any, M: int, ctx: PrecisionContext,
                         *, require_admissible: bool = True) -> EndWeightVector:
    """End-weight vector of 𝐿̃i(k̃; z) at fixed truncation M.

    Inadmissible indices are allowed with require_admissible=False: their
    vectors are finite even though the full sum diverges."""
    if require_admissible:
        index.require_admissible()
    with ctx.workprec():
        x = to_mpf(z)
        if abs(x) > 1:
            raise DivergentSeries(f"end weights need |z| <= 1; got z = {z}")
        return EndWeightVector(tuple(_end_weights(index, x, M)), M)


# ---------------------------------------------------------------------------
# The map L
# ---------------------------------------------------------------------------

def _monomial_blocks(word: NCWord) -> tuple[tuple[int, ...], frozenset[int]]:
    """e_{z1} e0^(k1-1) ... e_{zr} e0^(kr-1) -> (k, I) with I = positions whose letter is ez."""
    if word.letters and word.letters[0] == E0:
        raise NotInA0(f"monomial [{word}] starts with e0")
    k: list[int] = []
    I: set[int] = set()
    for letter in word.letters:
        if letter == E0:
            k[-1] += 1
        else:
            k.append(1)
            if letter == EZ:
                I.add(len(k))
    return tuple(k), frozenset(I)


def _combine(terms: list[tuple[Any, EvalResult]]) -> EvalResult:
    value = mpmath.fsum(to_mpf(c) * res.value for c, res in terms)
    err = mpmath.fsum(abs(to_mpf(c)) * res.error_estimate for c, res in terms)
    return EvalResult(value, err, max((res.terms_used for _, res in terms), default=0),
                      all(res.converged for _, res in terms))


def L_map(p: NCPoly | NCWord, z: Any, ctx: PrecisionContext, *, method: str = "basis") -> EvalResult:
    """L(p) for p in A0.

    method="basis":    expand in the basis and sum coeff·𝐿̃i(index; z).
    method="monomial": sum coeff·(-1)^r Li^I_k(z) over input-alphabet monomials.
    """
    if isinstance(p, NCWord):
        p = NCPoly.of(p)
    if not is_in_A0(p):
        raise NotInA0(f"{p} is not in A0")
    with ctx.workprec():
        if abs(to_mpf(z)) >= 1:
            raise DivergentSeries(f"L requires |z| < 1; got z = {z}")
        terms: list[tuple[Any, EvalResult]] = []
        if method == "basis":
            for word, coeff in expand_in_basis(p).items():
                terms.append((coeff, tilde_li(index_of_word(word), z, ctx)))
        elif method == "monomial":
            for word, coeff in p.items():
                if word.alphabet not in ("input", "empty"):
                    raise NotInA0(f"monomial evaluation needs input-alphabet words; got [{word}]")
                if not word.letters:
                    terms.append((coeff, EvalResult.exact(1)))
                    continue
                k, I = _monomial_blocks(word)
                sign = -1 if len(k) % 2 else 1
                terms.append((sign * coeff, one_var_mpl(k, I, z, ctx)))
        else:
            raise ValueError(f"unknown method {method!r}; expected 'basis' or 'monomial'")
        return _combine(terms)


# ---------------------------------------------------------------------------
# Convenience values
# ---------------------------------------------------------------------------

def _require_tail(k: Sequence[int]) -> AugmentedIndex:
    if not k or k[-1] < 2 or any(ki < 1 for ki in k):
        raise InvalidIndex(f"index {tuple(k)} needs positive entries and k_r >= 2")
    return AugmentedIndex.all_ones(k)


def mzv(k: Sequence[int], ctx: PrecisionContext) -> EvalResult:
    """ζ(k) = 𝐿̃i(((k1,1),...,(kr,1)); 0)."""
    return tilde_li(_require_tail(k), 0, ctx)


def t_value(k: Sequence[int], ctx: PrecisionContext) -> EvalResult:
    """Level-two value T(k) = 𝐿̃i(((k1,1),...,(kr,1)); -1)."""
    return tilde_li(_require_tail(k), -1, ctx)


def nine_term_relation(z: Any, ctx: PrecisionContext) -> ResidualReport:
    """ζ(3) against the combination of Li_{1,1,1} and Li_{1,2} values that L(e1 e0^2) = L(τ(e1 e0^2)) expands to."""
    signed = [
        (1, (1, 1, 1), (z, z, z)),
        (-1, (1, 1, 1), (z, 1, z)),
        (-1, (1, 1, 1), (1, z, z)),
        (1, (1, 1, 1), (1, 1, z)),
        (1, (1, 2), (z, z)),
        (-1, (1, 2), (z, 1)),
        (-1, (1, 2), (1, z)),
        (1, (1, 2), (1, 1)),
    ]
    rhs = _combine([(c, multiple_polylog(k, zs, ctx)) for c, k, zs in signed])
    lhs = mzv((3,), ctx)
    return ResidualReport("nine-term", lhs, rhs, {"z": str(z)}, ctx.precision_bits)
