#!/usr/bin/env python3
"""
Identity test suite for mpl-duality.

Tests every layer the CLI and the MCP server use: the exact word algebra,
the hypergeometric kernels, the evaluators against independent mpmath
oracles, connected sums and transport chains, both q-analogues, the
verification harness, the result cache, the CLI exit codes and the guidance
blocks. A passing run means `mpl-duality verify ...` and the tool server
compute what they claim.

Usage:
    # Everything (a few minutes: connected sums and q -> 1 limits are slow):
    python3 test_identities.py

    # Skip connected-sum transport, numeric chains and the q -> 1 limit:
    python3 test_identities.py --quick

    # Fewer randomized algebra cases:
    python3 test_identities.py --random 200

Also collected by pytest (MPL_TEST_QUICK=1 for the quick subset).
"""

from __future__ import annotations

import argparse
import asyncio
import contextlib
import io
import json
import os
import random
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

# ── make the package importable regardless of cwd ───────────────────────────
ROOT = Path(__file__).parent.resolve()
sys.path.insert(0, str(ROOT / "src"))

import mpmath

from mpl_duality import cli
from mpl_duality.algebra_words import (
    AugmentedIndex,
    NCPoly,
    NCWord,
    classical_dual,
    dual_index,
    enumerate_admissible,
    expand_in_basis,
    index_of_word,
    is_in_A0,
    tau,
    word_of_index,
)
from mpl_duality.cache import CacheKey, ResultCache
from mpl_duality.connected_sums import (
    MAX_TABLES,
    ConnectorTable,
    RowRecurrenceTable,
    cached_tables,
    classical_table,
    clear_tables,
    connected_tilde_li,
    connector_harmonic_checks,
    connector_shift_checks,
    exact_connector_z0,
    transport_chain,
    verify_chain_numeric,
    verify_symmetry,
    verify_transport_y0,
    verify_transport_y1,
)
from mpl_duality.context import PrecisionContext, QContext, ResidualReport, parse_rational, to_mpf
from mpl_duality.engine import DualityEngine
from mpl_duality.errors import (
    DivergentSeries,
    EmptyRightSide,
    MPLError,
    NoConvergence,
    NotAdmissible,
    NotInA0,
    NotParseable,
)
from mpl_duality.guidance import build_guidance
from mpl_duality.harness import SuiteGrid, VerificationReport, build_cases, relation_table, run_suite
from mpl_duality.hypergeometric_kernels import (
    check_contiguous,
    connector_C,
    connector_Cq,
    connector_shift_sum,
    gauss_2f1,
    q_factorial,
    q_integer,
    q_phi,
    q_pochhammer,
    rising_factorial,
)
from mpl_duality.mpl_evaluator import (
    L_map,
    mzv,
    multiple_polylog,
    nine_term_relation,
    one_var_mpl,
    t_value,
    tilde_li,
    tilde_li_end_weights,
)
from mpl_duality.q_analogues import (
    connected_tilde_li_q,
    q_connector_checks,
    q_connector_limit_checks,
    q_limit_check,
    specialization_check,
    tilde_li_q,
    verify_q_duality,
    verify_q_symmetry,
    verify_q_transport,
)

# ── config ───────────────────────────────────────────────────────────────────
QUICK = os.environ.get("MPL_TEST_QUICK", "") not in ("", "0")
N_RANDOM = 1000
SEED = 20240601
CTX = PrecisionContext()   # 192 bits, tol 1e-12
TOL = 1e-10                # agreement with oracles

# ── terminal colours ─────────────────────────────────────────────────────────
GREEN  = "\033[92m"
RED    = "\033[91m"
YELLOW = "\033[93m"
CYAN   = "\033[96m"
BOLD   = "\033[1m"
RESET  = "\033[0m"

def ok(msg):   print(f"  {GREEN}✓{RESET} {msg}")
def fail(msg): print(f"  {RED}✗{RESET} {msg}")
def info(msg): print(f"  {YELLOW}→{RESET} {msg}")
def head(msg): print(f"\n{BOLD}{CYAN}{'─'*62}{RESET}\n{BOLD}{msg}{RESET}")

# ── test harness ─────────────────────────────────────────────────────────────
_passed = _failed = 0

def check(label: str, condition: bool, detail: str = ""):
    global _passed, _failed
    if condition:
        _passed += 1
        ok(label)
    else:
        _failed += 1
        fail(label + (f"  [{detail}]" if detail else ""))
        if os.environ.get("PYTEST_CURRENT_TEST"):
            raise AssertionError(label + (f" [{detail}]" if detail else ""))

def close(a, b, tol: float = TOL) -> bool:
    return abs(mpmath.mpf(a) - mpmath.mpf(b)) <= tol

def raises(exc_type, fn, *args, **kwargs) -> bool:
    try:
        fn(*args, **kwargs)
    except exc_type:
        return True
    except Exception:
        return False
    return False

def assert_guidance(data: dict, ctx: str):
    """Verify every _guidance block is structurally valid."""
    g = data.get("_guidance", {})
    check(f"[{ctx}] _guidance.summary is str",     isinstance(g.get("summary"), str) and bool(g["summary"]))
    check(f"[{ctx}] _guidance.next_steps is list", isinstance(g.get("next_steps"), list))
    for i, step in enumerate(g.get("next_steps", [])):
        check(f"[{ctx}] next_steps[{i}] has tool/params/note",
              {"tool", "params", "note"} <= set(step), str(step))

def run_cli(*argv: str) -> tuple[int, str]:
    out = io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(io.StringIO()):
        code = cli.main(list(argv))
    return code, out.getvalue()

def w(text: str) -> NCWord:
    return NCWord.parse(text)

def idx(text: str) -> AugmentedIndex:
    return AugmentedIndex.parse(text)

# ── random generators ────────────────────────────────────────────────────────

def random_admissible(rng: random.Random, max_len: int = 8) -> AugmentedIndex:
    while True:
        n = rng.randint(1, max_len)
        letters = [rng.choice(("y0", "y1"))] + [rng.choice(("x", "y0", "y1")) for _ in range(n - 1)]
        k = index_of_word(NCWord(tuple(letters)))
        if k.admissible:
            return k

def random_input_word(rng: random.Random, max_len: int = 4) -> NCWord:
    return NCWord(tuple(rng.choice(("e0", "e1", "ez")) for _ in range(rng.randint(0, max_len))))

def random_poly(rng: random.Random) -> NCPoly:
    p = NCPoly()
    for _ in range(rng.randint(1, 3)):
        p = p + NCPoly.of(random_input_word(rng, 3), Fraction(rng.randint(-3, 3), rng.randint(1, 3)))
    return p

def random_A0_word(rng: random.Random) -> NCWord:
    n = rng.randint(1, 4)
    if n == 1:
        return NCWord(("ez",))
    middle = [rng.choice(("e0", "e1", "ez")) for _ in range(n - 2)]
    return NCWord((rng.choice(("e1", "ez")), *middle, rng.choice(("e0", "ez"))))


# ═══════════════════════════════════════════════════════════════════════════
# §1 Word algebra (exact)
# ═══════════════════════════════════════════════════════════════════════════

def test_word_algebra_examples():
    head("§1 · Word algebra: documented examples")

    check("w(empty) is the empty word",        word_of_index(idx("empty")) == NCWord(()))
    check("w(2:1) = y1 x",                     word_of_index(idx("2:1")) == w("y1 x"))
    check("w(2:0,1:1,3:1) = y0 x y1 y1 x x",  word_of_index(idx("2:0,1:1,3:1")) == w("y0 x y1 y1 x x"))
    check("parse(y1 x) = 2:1",                 index_of_word(w("y1 x")) == idx("2:1"))
    check("parse(y1 y1 x x y1 y0) = 1:1,3:1,1:1,1:0",
          index_of_word(w("y1 y1 x x y1 y0")) == idx("1:1,3:1,1:1,1:0"))
    check("parse(x y1) raises NotParseable",   raises(MPLError, index_of_word, w("x y1")))

    ez_minus_e1 = NCPoly({NCWord(("ez",)): 1, NCWord(("e1",)): -1})
    check("τ(e0) = ez - e1",                   tau(w("0")) == ez_minus_e1)
    check("τ(τ(e1 e0 e0)) = e1 e0 e0",         tau(tau(NCPoly.of(w("100")))) == NCPoly.of(w("100")))
    check("τ(y1 x) = y1 x",                    tau(w("y1 x")) == w("y1 x"))

    check("dual(2:1) = 2:1",                   dual_index(idx("2:1")) == idx("2:1"))
    check("dual(3:1) = 1:1,2:1",               dual_index(idx("3:1")) == idx("1:1,2:1"))
    check("dual(2:0,1:1,3:1) = 1:1,3:1,1:1,1:0",
          dual_index(idx("2:0,1:1,3:1")) == idx("1:1,3:1,1:1,1:0"))
    check("dual(2:0) = 1:1,1:0",               dual_index(idx("2:0")) == idx("1:1,1:0"))
    check("dual(1:1) raises NotAdmissible",    raises(NotAdmissible, dual_index, idx("1:1")))

    check("expand(e1) = -y0 - y1",
          expand_in_basis(w("1")) == NCPoly({w("y0"): -1, w("y1"): -1}))
    check("expand(e1 e0 e0) = -[y0 x x] - [y1 x x]",
          expand_in_basis(w("100")) == NCPoly({w("y0 x x"): -1, w("y1 x x"): -1}))
    check("expand(ez) = -y0",                  expand_in_basis(w("z")) == NCPoly({w("y0"): -1}))
    check("expand is idempotent on basis words", expand_in_basis(w("y1 x y0")) == NCPoly.of(w("y1 x y0")))

    check("1 ∈ A0",                            is_in_A0(NCPoly.one()))
    check("e0 ∉ A0",                           not is_in_A0(w("0")))
    check("e1 e0 e0 ∈ A0",                     is_in_A0(w("100")))

    check("enumerate_admissible(1) = [1:0]",   enumerate_admissible(1) == [idx("1:0")])
    check("2:1 is enumerated at weight 2",     idx("2:1") in enumerate_admissible(2))
    counts = [sum(1 for k in enumerate_admissible(4) if k.weight == n) for n in (1, 2, 3, 4)]
    check("counts by weight are 1, 4, 12, 36", counts == [1, 4, 12, 36], str(counts))
    table = enumerate_admissible(5)
    check("weight ≤ 5 enumeration is closed under dual",
          set(table) == {dual_index(k) for k in table})
    check("enumeration has no duplicates",     len(set(table)) == len(table))

    usual = [k for k in enumerate_admissible(6) if k.count_mu(0) == 0]
    agree = all(
        classical_dual(k.usual_index) == dual_index(k).usual_index and dual_index(k).count_mu(0) == 0
        for k in usual
    )
    check(f"block-rule dual agrees on {len(usual)} usual indices up to weight 6", agree)
    check("classical_dual((1,2)) = (3,)",       classical_dual((1, 2)) == (3,))


def test_word_algebra_random():
    head(f"§1 · Word algebra: {N_RANDOM} randomized cases per property")
    rng = random.Random(SEED)

    bad = {"involution": 0, "weight": 0, "mu0": 0, "depth": 0, "tau-word": 0, "tau-poly": 0}
    for _ in range(N_RANDOM):
        k = random_admissible(rng)
        d = dual_index(k)
        bad["involution"] += dual_index(d) != k
        bad["weight"] += d.weight != k.weight
        bad["mu0"] += d.count_mu(0) != k.count_mu(0)
        bad["depth"] += d.depth != k.weight - k.count_mu(1)
        bad["tau-word"] += tau(word_of_index(k)) != word_of_index(d)
        bad["tau-poly"] += expand_in_basis(tau(NCPoly.of(word_of_index(k)))) != NCPoly.of(word_of_index(d))
    for prop, n in bad.items():
        check(f"dual {prop}: 0 failures", n == 0, f"{n} failures")

    anti = invol = mult = 0
    for _ in range(N_RANDOM):
        u, v = random_input_word(rng), random_input_word(rng)
        anti += tau(NCPoly.of(u * v)) != tau(NCPoly.of(v)) * tau(NCPoly.of(u))
        p, q = random_poly(rng), random_poly(rng)
        invol += tau(tau(p)) != p
        mult += expand_in_basis(p * q) != expand_in_basis(p) * expand_in_basis(q)
    check("τ(uv) = τ(v)τ(u): 0 failures", anti == 0, f"{anti} failures")
    check("τ∘τ = id: 0 failures", invol == 0, f"{invol} failures")
    check("expand(pq) = expand(p)expand(q): 0 failures", mult == 0, f"{mult} failures")

    # A0 = Q + Q ez + {e1,ez} A {e0,ez}
    member = 0
    for _ in range(N_RANDOM):
        word = random_input_word(rng, 5)
        letters = word.letters
        expected = (
            not letters
            or letters == ("ez",)
            or (len(letters) >= 2 and letters[0] in ("e1", "ez") and letters[-1] in ("e0", "ez"))
        )
        member += is_in_A0(word) != expected
    check("A0 membership matches the word shape: 0 failures", member == 0, f"{member} failures")


# ═══════════════════════════════════════════════════════════════════════════
# §2 Hypergeometric kernels
# ═══════════════════════════════════════════════════════════════════════════

def _phi_oracle(a, b, c, z, q, terms: int = 400):
    total, term = mpmath.mpf(0), mpmath.mpf(1)
    for n in range(terms):
        total += term
        term *= (1 - a * q ** n) * (1 - b * q ** n) / ((1 - c * q ** n) * (1 - q ** (n + 1))) * z
    return total


def _f_partial(a, b, c, z, n_terms: int):
    """F truncated at n_terms series steps, with the tail bound of that truncation."""
    try:
        return gauss_2f1(a, b, c, z, PrecisionContext(target_tol=1e-300, max_terms=n_terms))
    except NoConvergence as exc:
        return exc.partial


def test_kernels():
    head("§2 · Hypergeometric kernels")

    check("(α)_0 = 1",                         rising_factorial(Fraction(7, 3), 0) == 1)
    check("(1)_5 = 5!",                        rising_factorial(1, 5) == 120)
    check("(3)_4 = 360",                       rising_factorial(3, 4) == 360)

    half = Fraction(1, 2)
    check("[3]_{1/2} = 7/4",                   q_integer(3, half) == Fraction(7, 4))
    check("[0]_{1/2} = 0",                     q_integer(0, half) == 0)
    check("[0]! = 1",                          q_factorial(0, half) == 1)
    check("[3]!_{1/2} = 21/8",                 q_factorial(3, half) == Fraction(21, 8))
    check("(α;q)_0 = 1",                       q_pochhammer(Fraction(2, 7), half, 0) == 1)
    check("(1;q)_2 = 0",                       q_pochhammer(Fraction(1), half, 2) == 0)
    check("(1/2;1/2)_2 = 3/8",                 q_pochhammer(half, half, 2) == Fraction(3, 8))

    check("F(α,0;γ;z) = 1",                    gauss_2f1(3, 0, 2, "1/2", CTX).value == 1)
    check("F(α,β;γ;0) = 1",                    gauss_2f1(3, 2, 2, 0, CTX).value == 1)
    f = gauss_2f1(1, 1, 3, "1/2", CTX)
    check("F(1,1;3;1/2) = 4(1 - ln 2)",        close(f.value, 4 * (1 - mpmath.log(2))), mpmath.nstr(f.value, 15))
    for a, b, c, z in [(2, 3, 5, "0.3"), (Fraction(1, 3), 2, Fraction(7, 2), "0.9"), (4, 4, 9, "-0.5")]:
        f = gauss_2f1(a, b, c, z, CTX)
        check(f"F({a},{b};{c};{z}) matches mpmath.hyp2f1",
              close(f.value, mpmath.hyp2f1(to_mpf(a), to_mpf(b), to_mpf(c), mpmath.mpf(z))) and f.converged)
    check("F with |z| ≥ 1 raises DivergentSeries", raises(DivergentSeries, gauss_2f1, 1, 1, 2, 1, CTX))

    for a, b, c, z in [(1, 1, 3, "1/2"), (2, 3, 5, "0.3"), (Fraction(1, 3), 2, Fraction(7, 2), "0.9"), (4, 4, 9, "1/2")]:
        partials = [_f_partial(a, b, c, z, n).value for n in range(1, 41)]
        check(f"F({a},{b};{c};{z}) partial sums increase", all(x <= y for x, y in zip(partials, partials[1:])))
        pairs = [(_f_partial(a, b, c, z, n), _f_partial(a, b, c, z, 2 * n)) for n in (8, 16, 32)]
        check(f"F({a},{b};{c};{z}) error estimate covers the N → 2N change",
              all(abs(long.value - short.value) <= short.error_estimate for short, long in pairs))


    check("C(m,0;z) = 1",                      connector_C(5, 0, "0.7", CTX).value == 1)
    check("C(0,0;z) = 1",                      connector_C(0, 0, "0.7", CTX).value == 1)
    c11 = connector_C(1, 1, "1/2", CTX)
    check("C(1,1;1/2) = 2 - 2 ln 2",           close(c11.value, 2 - 2 * mpmath.log(2)), mpmath.nstr(c11.value, 15))
    check("C(2,3;z) = C(3,2;z)",
          close(connector_C(2, 3, "0.6", CTX).value, connector_C(3, 2, "0.6", CTX).value, 1e-30))
    check("0 < C(4,6;0.9) <= 1",               0 < connector_C(4, 6, "0.9", CTX).value <= 1)

    below = [(m, n) for m in range(9) for n in range(m + 1, 9)]
    asym = max(abs(connector_C(m, n, "0.6", CTX).value - connector_C(n, m, "0.6", CTX).value) for m, n in below)
    check("C(m,n;0.6) = C(n,m;0.6) for m, n ≤ 8", asym <= 1e-30, mpmath.nstr(asym, 3))
    for model in (1, 2):
        asym = max(abs(connector_Cq(model, m, n, "0.4", "1/3", CTX).value
                       - connector_Cq(model, n, m, "0.4", "1/3", CTX).value) for m, n in below)
        check(f"C_q^({model})(m,n) = C_q^({model})(n,m) for m, n ≤ 8", asym <= 1e-30, mpmath.nstr(asym, 3))

    tight = PrecisionContext(target_tol=1e-40)
    for z in ("1/2", "9/10"):
        with CTX.workprec():
            table = RowRecurrenceTable(to_mpf(z))
            table.value(600, 3)
            drift = max(abs(table.value(m, n) - connector_C(m, n, z, tight).value)
                        for m in range(9) for n in range(9))
            deep = abs(table.value(40, 3) - connector_C(40, 3, z, tight).value)
            c = table.contraction
            bounded = all(table.value(m, n) <= 1 / (mpmath.binomial(m + n, n) * c ** min(m, n))
                          for m in range(0, 60, 7) for n in range(0, 60, 5))
        check(f"recurrence table matches the series at z={z}, m, n ≤ 8", drift <= 1e-35, mpmath.nstr(drift, 3))
        check(f"recurrence run from m = 600 down to 40 keeps C(40,3;{z})", deep <= 1e-35, mpmath.nstr(deep, 3))
        check(f"C(m,n;{z}) ≤ m!n!/(m+n)!·(1-z)^-min(m,n)", bounded)
    with CTX.workprec():
        flat = RowRecurrenceTable(mpmath.mpf(0))
        check("recurrence table at z = 0 is m!n!/(m+n)!",
              abs(flat.value(7, 3) - mpmath.mpf(1) / 120) <= 1e-50 and flat.value(9, 0) == 1)

    q = mpmath.mpf(1) / 2
    oracle = _phi_oracle(q, q, q ** 3, q, q)
    phi = q_phi(half, half, Fraction(1, 8), half, half, CTX)
    check("φ_{1/2}(q,q;q³;1/2) matches direct sum", close(phi.value, oracle), mpmath.nstr(phi.value, 15))
    check("φ_q(α,β;γ;0) = 1",                  q_phi(half, half, Fraction(1, 8), 0, half, CTX).value == 1)
    check("φ_q(1,β;γ;z) = 1",                  q_phi(1, half, Fraction(1, 8), half, half, CTX).value == 1)
    cq = connector_Cq(1, 1, 1, half, half, CTX)
    check("C_q^(1)(1,1;1/2) = (1/3)·φ(q,q;q³;1/2)", close(cq.value, oracle / 3), mpmath.nstr(cq.value, 15))
    for model in (1, 2):
        check(f"C_q^({model})(m,0) = 1",       connector_Cq(model, 4, 0, half, half, CTX).value == 1)
        check(f"C_q^({model}) is symmetric",
              close(connector_Cq(model, 2, 3, "0.4", "1/3", CTX).value,
                    connector_Cq(model, 3, 2, "0.4", "1/3", CTX).value, 1e-30))

    check("HG1 at (2,3,5), n ≤ 12: residuals 0",  check_contiguous("HG1", (2, 3, 5), 12).passed)
    check("HG2 at (1,1,2), n ≤ 12: residuals 0",  check_contiguous("HG2", (1, 1, 2), 12).passed)
    q3 = Fraction(1, 3)
    check("Q2HG2 at q=1/3, (q²,q,q³), n ≤ 10: residuals 0",
          check_contiguous("Q2HG2", (q3 ** 2, q3, q3 ** 3), 10, q3).passed)
    for rel in ("Q1HG1", "Q1HG2", "Q2HG1"):
        check(f"{rel} at q=1/3, (q,q²,q⁴): residuals 0",
              check_contiguous(rel, (q3, q3 ** 2, q3 ** 4), 10, q3).passed)
    broken = check_contiguous("HG1", (2, 3, 5), 3)
    check("contiguous report records n_max", broken.to_record()["n_max"] == 3)


# ═══════════════════════════════════════════════════════════════════════════
# §3 Evaluators against oracles
# ═══════════════════════════════════════════════════════════════════════════

def test_known_constants():
    head("§3 · Known constants")
    zeta2 = mzv((2,), CTX)
    check("ζ(2) = π²/6",                       close(zeta2.value, mpmath.pi ** 2 / 6), mpmath.nstr(zeta2.value, 15))
    z12, z3 = mzv((1, 2), CTX), mzv((3,), CTX)
    check("ζ(1,2) = ζ(3)",                     close(z12.value, z3.value))
    check("ζ(3) matches mpmath.zeta(3)",       close(z3.value, mpmath.zeta(3)))
    li2 = tilde_li(idx("2:0"), "1/2", CTX)
    check("𝐿̃i(2:0; 1/2) = Li₂(1/2) ≈ 0.5822405265",
          close(li2.value, mpmath.polylog(2, 0.5)), mpmath.nstr(li2.value, 12))
    t2 = t_value((2,), CTX)
    check("T(2) = π²/4 ≈ 2.4674011003",        close(t2.value, mpmath.pi ** 2 / 4), mpmath.nstr(t2.value, 12))
    check("Li_2(1) = π²/6",                    close(multiple_polylog((2,), (1,), CTX).value, mpmath.pi ** 2 / 6))
    check("Li_1(1/2) = ln 2",                  close(multiple_polylog((1,), ("1/2",), CTX).value, mpmath.log(2)))
    check("Li^∅_(1,2)(z) = ζ(1,2)",            close(one_var_mpl((1, 2), set(), "0.3", CTX).value, mpmath.zeta(3)))
    check("Li^{1}_(2)(1/2) = Li₂(1/2)",        close(one_var_mpl((2,), {1}, "1/2", CTX).value, mpmath.polylog(2, 0.5)))
    check("Li^I with k_r = 1, r ∉ I raises",   raises(MPLError, one_var_mpl, (2, 1), {1}, "1/2", CTX))
    check("𝐿̃i(empty; 0.9) = 1",                tilde_li(idx("empty"), "0.9", CTX).value == 1)
    check("𝐿̃i at z = 1 raises DivergentSeries", raises(DivergentSeries, tilde_li, idx("2:1"), 1, CTX))
    check("𝐿̃i(1:0; -1) raises DivergentSeries", raises(DivergentSeries, tilde_li, idx("1:0"), -1, CTX))
    check("mzv((2,1)) raises (needs k_r ≥ 2)", raises(MPLError, mzv, (2, 1), CTX))

    F = tilde_li_end_weights(idx("1:0"), "1/2", 10, CTX)
    half = mpmath.mpf(1) / 2
    check("end weights of 1:0 are z^m/m",
          all(close(F.values[m], half ** m / m, 1e-40) for m in range(1, 11)) and F.values[0] == 0)
    F = tilde_li_end_weights(idx("2:1"), "1/2", 10, CTX)
    check("end weights of 2:1 are (1 - z^m)/m²",
          all(close(F.values[m], (1 - half ** m) / m ** 2, 1e-40) for m in range(1, 11)))
    F = tilde_li_end_weights(idx("empty"), "1/2", 10, CTX)
    check("end weights of empty are δ_0",      F.values[0] == 1 and not any(F.values[1:]))


def test_L_map():
    head("§3 · The map L")
    check("L(1) = 1",                          L_map(NCPoly.one(), "1/2", CTX).value == 1)
    for z in ("0", "1/2", "-0.7"):
        v = L_map(w("100"), z, CTX)
        check(f"L(e1 e0 e0) at z={z} is -ζ(3)", close(v.value, -mpmath.zeta(3)), mpmath.nstr(v.value, 12))
    v = L_map(w("z"), "0.4", CTX)
    check("L(ez) at 0.4 is ln(0.6)",           close(v.value, mpmath.log(mpmath.mpf("0.6"))))
    check("L(e0) raises NotInA0",              raises(NotInA0, L_map, w("0"), "1/2", CTX))

    rng = random.Random(SEED + 1)
    n = 10 if QUICK else 40
    bad = 0
    for _ in range(n):
        word = random_A0_word(rng)
        a = L_map(word, "1/2", CTX, method="monomial")
        b = L_map(word, "1/2", CTX)
        bad += not ResidualReport("L", a, b, {}, CTX.precision_bits).passed
    check(f"L via monomials = L via basis on {n} random A0 words", bad == 0, f"{bad} failures")

    worst = 0
    for k in enumerate_admissible(3 if QUICK else 4):
        word = word_of_index(k)
        r = ResidualReport("L-tau", L_map(word, "1/2", CTX), L_map(tau(word), "1/2", CTX), {}, CTX.precision_bits)
        worst += not r.passed
    check("L(w) = L(τ(w)) for every basis word of an admissible index", worst == 0, f"{worst} failures")

    report = nine_term_relation("1/2", CTX)
    check("nine-term combination equals ζ(3) at z = 1/2",
          report.passed and report.residual <= 1e-12, mpmath.nstr(report.residual, 3))
    image = tau(NCPoly.of(w("100")))
    check("L(e1 e0²) = L((ez-e1)²(ez-e0)) at z = 1/2",
          close(L_map(w("100"), "1/2", CTX).value, L_map(image, "1/2", CTX).value, 1e-12))


def test_duality():
    head("§3 · Duality 𝐿̃i(k̃; z) = 𝐿̃i(k̃†; z)")
    max_weight = 3 if QUICK else 4
    for z in ("0", "1/2", "9/10"):
        failures, worst = 0, mpmath.mpf(0)
        for k in enumerate_admissible(max_weight):
            r = ResidualReport("duality", tilde_li(k, z, CTX), tilde_li(dual_index(k), z, CTX), {}, CTX.precision_bits)
            failures += not r.passed or r.residual > 1e-12
            worst = max(worst, r.residual)
        check(f"weight ≤ {max_weight}, z = {z}: all pass", failures == 0,
              f"{failures} failures, worst {mpmath.nstr(worst, 3)}")
    a, b = tilde_li(idx("3:1"), "-1", CTX), tilde_li(idx("1:1,2:1"), "-1", CTX)
    check("level-two duality at z = -1: 3:1 vs 1:1,2:1", close(a.value, b.value, 1e-12))


# ═══════════════════════════════════════════════════════════════════════════
# §4 Connected sums, connectors, transport chains
# ═══════════════════════════════════════════════════════════════════════════

def test_connected_sums():
    head("§4 · Connected sums and connector identities")
    v = connected_tilde_li(idx("3:1"), idx("empty"), "1/2", CTX)
    check("boundary: 𝐿̃i(3:1; ∅) is exactly 𝐿̃i(3:1)", v.value == tilde_li(idx("3:1"), "1/2", CTX).value)
    check("𝐿̃i(∅; ∅) = 1",                     connected_tilde_li(idx("empty"), idx("empty"), "0.3", CTX).value == 1)
    check("(∅; 1:1) raises DivergentSeries",
          raises(DivergentSeries, connected_tilde_li, idx("empty"), idx("1:1"), "1/2", CTX))
    check("connected sums reject z < 0",
          raises(DivergentSeries, connected_tilde_li, idx("2:1"), idx("1:0"), "-0.5", CTX))
    check("symmetry (∅, ∅) has zero residual", verify_symmetry(idx("empty"), idx("empty"), "1/2", CTX).residual == 0)

    half = mpmath.mpf(1) / 2
    shift = [r for r in connector_shift_checks("1/2", CTX, grid=2) if r.inputs["m"] == 1 and r.inputs["n"] == 2]
    oracle = mpmath.fsum(
        half ** (a - 1) / a * mpmath.hyp2f1(a, 2, a + 3, half) * 2 / ((a + 1) * (a + 2))
        for a in range(2, 402)
    )
    check("y0 connector sum at (1,2), z=1/2 matches direct summation", close(shift[0].lhs.value, oracle, 1e-12))
    closed = connector_shift_sum(1, 2, "1/2", CTX)
    check("y0 connector closed form at (1,2)", close(closed.value, oracle, 1e-12))
    base = [r for r in connector_shift_checks("1/2", CTX, grid=2) if r.inputs["m"] == 0 and r.inputs["n"] == 0]
    check("y0 connector sum at (0,0) is ln 2", close(base[0].lhs.value, mpmath.log(2), 1e-12))

    for z in ("3/10", "1/2", "9/10"):
        reports = connector_shift_checks(z, CTX) + connector_harmonic_checks(z, CTX)
        worst = max(r.residual for r in reports)
        check(f"connector identities at z={z}: {len(reports)} checks within 1e-10",
              all(r.passed for r in reports) and worst <= 1e-10, mpmath.nstr(worst, 3))
    one = [r for r in connector_harmonic_checks("1/2", CTX) if r.inputs["m"] == 0 and r.inputs["n"] == 1][0]
    check("y1 connector identity at (0,1): both sides 1", close(one.rhs.value, 1, 1e-30) and one.passed)
    check("y1 connector identity at (2,3), z=0 holds exactly", exact_connector_z0(2, 3).passed)
    check("exact z=0 check over m ≤ 4, n ≤ 4",
          all(exact_connector_z0(m, n).passed for m in range(5) for n in range(1, 5)))

    clear_tables()
    with CTX.workprec():
        for j in range(MAX_TABLES + 3):
            classical_table(Fraction(1, j + 2), CTX)
    check(f"at most {MAX_TABLES} connector tables are held", cached_tables() == MAX_TABLES, str(cached_tables()))
    memo = ConnectorTable(lambda m, n: (mpmath.mpf(m + n), mpmath.mpf(0)), max_entries=4)
    for m in range(10):
        memo.get(m, 1)
    check("a full connector memo is dropped instead of growing", len(memo) <= 4, str(len(memo)))
    with CTX.workprec():
        rows = RowRecurrenceTable(mpmath.mpf(1) / 2, max_entries=100)
        rows.value(300, 1)
        full = len(rows)
        rows.value(10, 2)
    check("recurrence rows are dropped once they pass max_entries", full == 300 and len(rows) < full,
          f"{full} then {len(rows)}")


    if QUICK:
        info("transport and symmetry of non-empty pairs skipped (--quick)")
        return
    s = verify_symmetry(idx("2:1"), idx("1:0"), "1/2", CTX)
    check("symmetry (2:1; 1:0) at 1/2",      s.passed, mpmath.nstr(s.residual, 3))
    s = verify_symmetry(idx("2:1"), idx("2:1"), "1/2", CTX)
    check("(2:1; 2:1) equals its swap",       s.residual == 0)
    b = verify_transport_y0(idx("empty"), idx("empty"), "1/2", CTX, connector_grid=-1)
    check("y0-transport (∅; ∅) both sides ln 2",
          b.passed and close(b.checks[0].lhs.value, mpmath.log(2), 1e-12))
    b = verify_transport_y0(idx("2:1"), idx("1:0"), "1/2", CTX, connector_grid=-1)
    check("y0-transport (2:1; 1:0) at 1/2",  b.passed, mpmath.nstr(b.checks[0].residual, 3))
    b = verify_transport_y1(idx("empty"), idx("2:1"), "1/2", CTX, connector_grid=-1)
    check("y1-transport (∅; 2:1) at 1/2",    b.passed, mpmath.nstr(b.checks[0].residual, 3))
    b = verify_transport_y1(idx("1:0"), idx("1:0"), "0", CTX, connector_grid=-1)
    check("y1-transport (1:0; 1:0) at 0",    b.passed, mpmath.nstr(b.checks[0].residual, 3))
    check("y1-transport with empty right raises EmptyRightSide",
          raises(EmptyRightSide, verify_transport_y1, idx("2:1"), idx("empty"), "1/2", CTX))


def test_transport_chains():
    head("§4 · Transport chains")

    def trace(text: str) -> list[tuple[str, str]]:
        return [(str(s.left), str(s.right)) for s in transport_chain(idx(text)).states]

    check("chain of 2:1: (y1 x, 1) → (y1, y1) → (1, y1 x)",
          trace("2:1") == [("y1 x", "1"), ("y1", "y1"), ("1", "y1 x")], str(trace("2:1")))
    check("chain of 1:0: (y0, 1) → (1, y0)",  trace("1:0") == [("y0", "1"), ("1", "y0")])
    chain = transport_chain(idx("3:1"))
    check("chain of 3:1 has 3 moves and ends at (1, y1 y1 x)",
          len(chain.states) == 4 and str(chain.states[-1].right) == "y1 y1 x")
    check("chain of 3:1 ends at its dual",    chain.dual == idx("1:1,2:1"))
    check("chain rules name the moves",
          [s.rule for s in transport_chain(idx("2:1")).states] == ["start", "X-move-via-symmetry", "Y1-move"])
    check("chain of empty has a single state", len(transport_chain(idx("empty")).states) == 1)
    check("chain of 1:1 raises NotAdmissible", raises(NotAdmissible, transport_chain, idx("1:1")))
    mismatched = [k for k in enumerate_admissible(6) if transport_chain(k).dual != dual_index(k)]
    check("every chain up to weight 6 ends at the dual", not mismatched, str(mismatched[:3]))

    report = verify_chain_numeric(transport_chain(idx("1:0")), "0", CTX)
    check("numeric chain of 1:0 at z = 0",   report.passed)
    report = verify_chain_numeric(transport_chain(idx("empty")), "1/2", CTX)
    check("numeric chain of empty has deviation 0", report.max_deviation == 0 and report.passed)
    record = report.to_record(CTX.digits)
    check("chain record carries the budget columns", {"residual", "budget", "truncation", "pass", "states"} <= set(record))

    if QUICK:
        info("numeric chains of non-trivial indices skipped (--quick)")
        return
    report = verify_chain_numeric(transport_chain(idx("2:1")), "1/2", CTX)
    check("numeric chain of 2:1 at 1/2: all three states agree", report.passed and len(report.values) == 3,
          f"deviation {mpmath.nstr(report.max_deviation, 3)} budget {mpmath.nstr(report.budget, 3)}")
    report = verify_chain_numeric(transport_chain(idx("3:1")), "1/2", CTX)
    check("numeric chain of 3:1 at 1/2",      report.passed, mpmath.nstr(report.max_deviation, 3))
    lines = report.trace(CTX.digits)
    check("chain trace has left/right/rule/value/error_budget",
          all({"left", "right", "rule", "value", "error_budget"} <= set(s) for s in lines))
    admissible = enumerate_admissible(4)
    for z in ("0", "1/2"):
        report = run_suite("chain", SuiteGrid(z=(z,)), CTX)
        check(f"chain suite at z = {z}: all {len(admissible)} indices of weight ≤ 4 agree along their chains",
              report.passed and len(report.cases) == len(admissible),
              f"{report.failures} failures, max residual {mpmath.nstr(report.max_residual, 3)}")
        check(f"chain suite at z = {z}: every chain ends at the dual",
              all(c.get("dual") == str(dual_index(idx(c["inputs"]["index"]))) for c in report.cases))


# ═══════════════════════════════════════════════════════════════════════════
# §5 q-analogues
# ═══════════════════════════════════════════════════════════════════════════

def test_q_analogues():
    head("§5 · q-analogues")
    half = mpmath.mpf(1) / 2
    bz2 = mpmath.fsum(half ** m / ((1 - half ** m) / (1 - half)) ** 2 for m in range(1, 400))
    for model in (1, 2):
        qctx = QContext(q="1/2", model=model)
        check(f"ε={model}: 𝐿̃i_q(empty) = 1", tilde_li_q(idx("empty"), "1/2", qctx, CTX).value == 1)
        v = tilde_li_q(idx("2:1"), 0, qctx, CTX)
        check(f"ε={model}: 𝐿̃i_q(2:1; 0) = Σ q^m/[m]² at q = 1/2", close(v.value, bz2), mpmath.nstr(v.value, 12))
        c = connected_tilde_li_q(idx("2:1"), idx("empty"), "1/2", qctx, CTX)
        check(f"ε={model}: boundary 𝐿̃i_q(2:1; ∅)",
              c.value == tilde_li_q(idx("2:1"), "1/2", qctx, CTX).value)
        check(f"ε={model}: 𝐿̃i_q(∅; ∅) = 1",
              connected_tilde_li_q(idx("empty"), idx("empty"), "1/2", qctx, CTX).value == 1)

    qctx = QContext(q="1/2", model=1)
    a = tilde_li_q(idx("3:1"), "1/2", qctx, CTX)
    b = tilde_li_q(idx("1:1,2:1"), "1/2", qctx, CTX)
    check("ε=1: 3:1 and 1:1,2:1 agree at q = z = 1/2", close(a.value, b.value, 1e-12))
    check("QContext rejects q = 1",           raises(Exception, QContext, q="1", model=1))
    check("QContext rejects model 3",         raises(Exception, QContext, q="1/2", model=3))
    check("q-series reject z < 0",            raises(DivergentSeries, tilde_li_q, idx("2:1"), "-0.5", qctx, CTX))

    for model in (1, 2):
        for q in ("1/3", "2/3"):
            for z in ("0", "1/2"):
                reports = verify_q_duality(2 if QUICK else 3, z, QContext(q=q, model=model), CTX)
                check(f"q-duality ε={model} q={q} z={z}: {len(reports)} indices",
                      all(r.passed and r.residual <= 1e-12 for r in reports))

    w_max = 2 if QUICK else 3
    for model in (1, 2):
        usual = [k.usual_index for k in enumerate_admissible(w_max) if k.count_mu(0) == 0]
        checks = [specialization_check(k, model, "1/2", 50) for k in usual]
        check(f"ε={model}: z = 0 specializations exact for {len(usual)} indices (M = 50)",
              all(c.passed for c in checks))

    for model in (1, 2):
        reports = q_connector_checks("1/2", QContext(q="1/2", model=model), CTX, grid=2)
        check(f"ε={model}: q connector identities ({len(reports)} checks)",
              all(r.passed for r in reports), mpmath.nstr(max(r.residual for r in reports), 3))
    y0 = [r for r in q_connector_checks("1/2", QContext(q="1/2", model=1), CTX, grid=2)
          if r.label == "q1-connector-y0-closed-form" and r.inputs["m"] == 0 and r.inputs["n"] == 0][0]
    closed = half * _phi_oracle(half, half, half ** 2, half, half)
    check("ε=1: y0 closed form at (0,0) is z·φ(q,q;q²;z)", close(y0.rhs.value, closed, 1e-12))

    for model in (1, 2):
        for z in ("3/10", "1/2"):
            reports = q_connector_limit_checks(z, model, CTX)
            worst = max(r.residual for r in reports)
            check(f"ε={model} z={z}: C_q within 0.05 of C at q = 0.999 for m, n ≤ 4 ({len(reports)} pairs)",
                  len(reports) == 25 and all(r.passed for r in reports) and worst <= 0.05, mpmath.nstr(worst, 3))

    if QUICK:
        info("q-transport, q-symmetry and the q → 1 limit skipped (--quick)")
        return
    b = verify_q_transport("y0", idx("empty"), idx("empty"), "1/2", QContext(q="1/3", model=2), CTX, connector_grid=-1)
    check("ε=2: y0-transport (∅; ∅) at q = 1/3", b.passed)
    b = verify_q_transport("y1", idx("empty"), idx("2:1"), "1/2", QContext(q="1/2", model=1), CTX, connector_grid=-1)
    check("ε=1: y1-transport (∅; 2:1) at q = 1/2", b.passed, mpmath.nstr(b.checks[0].residual, 3))
    s = verify_q_symmetry(idx("2:1"), idx("1:0"), "1/2", QContext(q="1/2", model=1), CTX)
    check("ε=1: q-symmetry (2:1; 1:0)",       s.passed, mpmath.nstr(s.residual, 3))
    check("y1-move with empty right raises",
          raises(EmptyRightSide, verify_q_transport, "y1", idx("2:1"), idx("empty"), "1/2", qctx, CTX))
    for model in (1, 2):
        r = q_limit_check(idx("2:1"), "1/2", model, CTX)
        check(f"ε={model}: q = 0.999 is within 0.05 of the classical value", r.passed, mpmath.nstr(r.residual, 3))


# ═══════════════════════════════════════════════════════════════════════════
# §6 Harness, cache, CLI, guidance, tool server
# ═══════════════════════════════════════════════════════════════════════════

def test_harness():
    head("§6 · Verification harness")
    rows = relation_table(1)
    check("weight-1 table: single self-dual row 1:0",
          len(rows) == 1 and str(rows[0].index) == "1:0" and rows[0].self_dual)
    rows = relation_table(4)
    check("every row's dual is some row's index", {r.dual for r in rows} == {r.index for r in rows})
    check("table rows follow enumeration order", [r.index for r in rows] == enumerate_admissible(4))
    check("table above weight 12 raises MPLError", raises(MPLError, relation_table, 13))

    duality_cases = build_cases("duality", SuiteGrid())
    check("duality grid: 53 indices × 3 arguments plus 7 usual-index dual checks",
          len(duality_cases) == 166 and sum(1 for kind, _ in duality_cases if kind == "classical-dual") == 7)
    check("specializations grid carries the q → 1 connector check",
          "q-connector-limit" in {kind for kind, _ in build_cases("specializations", SuiteGrid())})
    check("unknown suite raises MPLError",    raises(MPLError, build_cases, "nope", SuiteGrid()))
    chain_cases = build_cases("chain", SuiteGrid(index="2:1", z=("1/2",)))
    check("chain grid with --index has one case", chain_cases == [("chain", {"index": "2:1", "z": "1/2"})])

    report = run_suite("contiguous", SuiteGrid(), CTX)
    check(f"contiguous suite on the default grid: {len(report.cases)} records pass",
          report.passed and len(report.cases) == 960, f"{report.failures} failures")
    report = run_suite("duality", SuiteGrid(max_weight=2, z=("1/2",)), CTX)
    check("duality suite weight ≤ 2 passes",  report.passed and len(report.cases) == 6)
    block = [c for c in report.cases if c["case"] == "classical-dual"]
    check("2:1 word dual matches the block rule",
          len(block) == 1 and block[0]["pass"] and block[0]["lhs"] == block[0]["rhs"] == "2:1", str(block))
    again = run_suite("duality", SuiteGrid(max_weight=2, z=("1/2",)), CTX)
    check("reports are deterministic",        again.to_record() == report.to_record())
    rows = report.csv_rows()
    check("CSV rows carry the report columns",
          list(rows[0]) == ["case", "inputs", "lhs", "rhs", "residual", "budget", "truncation", "pass"])
    check("environment records precision and z",
          report.environment["precision_bits"] == 192 and report.environment["z"] == ["1/2"])
    report = run_suite("nine-term", SuiteGrid(), CTX)
    check("nine-term suite passes",           report.passed and len(report.cases) == 3)
    report = run_suite("chain", SuiteGrid(index="1:0", z=("0",)), CTX)
    check("chain suite on 1:0 passes",        report.passed)

    failing = VerificationReport("x", [{"case": "a", "residual": "1e-3", "pass": False},
                                       {"case": "b", "residual": "1e-20", "pass": True}])
    check("a failing record fails the report", not failing.passed and failing.failures == 1)
    check("max residual is read from records", close(failing.max_residual, 1e-3, 1e-12))

    progress = []
    run_suite("nine-term", SuiteGrid(z=("1/2", "1/3")), CTX, progress=lambda i, n: progress.append((i, n)))
    check("progress is reported per case",    progress == [(1, 2), (2, 2)], str(progress))


def test_cache():
    head("§6 · Result cache")
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "cache.jsonl"
        plain = DualityEngine().evaluate(index="3:1", z="1/2", ctx=CTX)
        engine = DualityEngine(ResultCache(path))
        first = engine.evaluate(index="3:1", z="1/2", ctx=CTX)
        second = engine.evaluate(index="3:1", z="1/2", ctx=CTX)
        check("cached and uncached values are identical strings", first["value"] == plain["value"] == second["value"])
        check("one cache line written",       len(path.read_text().splitlines()) == 1)
        with path.open("a") as fh:
            fh.write("{not json\n")
        reloaded = ResultCache(path)
        check("reload skips unreadable lines", len(reloaded) == 1)
        key = CacheKey.for_eval("tilde_li", "3:1", "1/2", CTX)
        check("reloaded entry keeps the decimal string", reloaded.get(key).value == plain["value"])
        other = CacheKey.for_eval("tilde_li", "3:1", "1/2", CTX.with_tol(1e-8))
        check("a different tolerance is a different key", reloaded.get(other) is None)
        decimal = CacheKey.for_eval("tilde_li", "3:1", "0.5", CTX)
        check("z = 0.5 and z = 1/2 share a cache key", decimal == key and reloaded.get(decimal) is not None)
        engine.evaluate(index="3:1", z="0.5", ctx=CTX)
        check("evaluating at 0.5 reuses the 1/2 entry", len(path.read_text().splitlines()) == 2)


def test_cli():
    head("§6 · Command line")
    for arg, expected in [("3:1", "1:1,2:1"), ("1:0", "1:0"), ("2:0,1:1,3:1", "1:1,3:1,1:1,1:0")]:
        code, out = run_cli("dual", arg)
        check(f"dual {arg} → {expected}",     code == 0 and out.strip() == expected, out.strip())
    code, out = run_cli("dual", "1:1,2:1")
    code2, out2 = run_cli("dual", out.strip())
    check("dual applied twice is the identity", out2.strip() == "1:1,2:1")
    code, _ = run_cli("dual", "1:1")
    check("dual of an inadmissible index exits 2", code == 2)
    code, _ = run_cli("dual", "3")
    check("unparseable index exits 2",        code == 2)

    code, out = run_cli("eval", "--index", "2:0", "--z", "0.5")
    data = json.loads(out)
    check("eval 2:0 at 0.5 ≈ 0.5822405265",   code == 0 and close(data["value"], mpmath.polylog(2, 0.5)))
    check("eval record fields",               {"value", "error_estimate", "truncation", "converged"} <= set(data))
    code, out = run_cli("eval", "--index", "empty", "--z", "0.9")
    check("eval empty → 1",                   code == 0 and close(json.loads(out)["value"], 1, 0))
    code, out = run_cli("eval", "--index", "2:1", "--z", "-1")
    check("eval 2:1 at -1 ≈ 2.4674011003",    code == 0 and close(json.loads(out)["value"], mpmath.pi ** 2 / 4))
    code, _ = run_cli("eval", "--index", "2:1", "--z", "1.5")
    check("eval outside the domain exits 2",  code == 2)
    code, _ = run_cli("eval", "--index", "2:1", "--z", "0.5", "--max-terms", "16")
    check("eval capped at 16 terms exits 3",  code == 3)
    code, _ = run_cli("eval", "--index", "2:1", "--z", "0.5", "--q", "3/2")
    check("q outside (0,1) exits 2",          code == 2)
    check("parse_rational rejects text with NotParseable", raises(NotParseable, parse_rational, "abc"))
    check("NotParseable is an MPLError",      issubclass(NotParseable, MPLError))
    code, _ = run_cli("eval", "--index", "2:1", "--z", "abc")
    check("unparseable z exits 2",            code == 2)
    saved = os.environ.get("MPL_MAX_TERMS")
    os.environ["MPL_MAX_TERMS"] = "1024"
    try:
        check("MPL_MAX_TERMS sets the term cap", PrecisionContext.from_env().max_terms == 1024)
        check("an explicit max_terms overrides MPL_MAX_TERMS",
              PrecisionContext.from_env(max_terms=64).max_terms == 64)
    finally:
        if saved is None:
            os.environ.pop("MPL_MAX_TERMS", None)
        else:
            os.environ["MPL_MAX_TERMS"] = saved
    code, out = run_cli("eval", "--word", "100", "--z", "1/2")
    check("eval --word 100 is -ζ(3)",         code == 0 and close(json.loads(out)["value"], -mpmath.zeta(3)))

    code, out = run_cli("expand", "100")
    data = json.loads(out)
    check("expand 100 is in A0 with two basis words", data["in_A0"] and len(data["basis"]) == 2)
    code, out = run_cli("table", "--max-weight", "2", "--format", "csv")
    lines = out.strip().splitlines()
    check("table csv has header + 5 rows",    code == 0 and lines[0] == "index,dual,weight,depth,self_dual"
          and len(lines) == 6, lines[0] if lines else "")
    code, out = run_cli("verify", "contiguous", "--max-param", "2", "--n-max", "4")
    check("verify contiguous exits 0",        code == 0 and json.loads(out)["summary"]["failures"] == 0)
    code, out = run_cli("chain", "--index", "2:1", "--format", "json")
    check("chain 2:1 lists three states",     code == 0 and len(json.loads(out)["states"]) == 3)


def test_guidance_and_server():
    head("§6 · Guidance blocks and tool server")
    g = build_guidance("no_such_tool", {})
    check("unknown tool → empty next_steps",  g["next_steps"] == [])
    g = build_guidance("dual_index", {})
    check("malformed data never crashes guidance", isinstance(g["summary"], str))

    data = {"index": "3:1", "dual": "1:1,2:1", "weight": 3, "dual_depth": 2, "self_dual": False}
    data["_guidance"] = build_guidance("dual_index", data)
    assert_guidance(data, "dual_index")
    check("dual_index suggests evaluating the dual",
          any(s["params"].get("index") == "1:1,2:1" for s in data["_guidance"]["next_steps"]))

    data = {"word": "0", "input": "[0]", "basis": [], "in_A0": False}
    data["_guidance"] = build_guidance("expand_word", data)
    assert_guidance(data, "expand_word")
    check("word outside A0 → no next steps",  data["_guidance"]["next_steps"] == [])

    data = DualityEngine().evaluate(index="2:1", z="1/2", ctx=CTX)
    data["_guidance"] = build_guidance("evaluate", data)
    assert_guidance(data, "evaluate")
    check("evaluate suggests dual_index",     data["_guidance"]["next_steps"][0]["tool"] == "dual_index")

    report = run_suite("nine-term", SuiteGrid(), CTX).to_record()
    report["_guidance"] = build_guidance("verify_suite", report)
    assert_guidance(report, "verify_suite")
    bad = {"suite": "duality", "summary": {"cases": 1, "failures": 1},
           "cases": [{"case": "duality", "inputs": {"k": "2:1", "z": "1/2"}, "pass": False}]}
    g = build_guidance("verify_suite", bad)
    check("failed duality case → re-evaluate it", g["next_steps"][0]["params"]["index"] == "2:1")

    record, _ = DualityEngine().chain(index="3:1")
    record["_guidance"] = build_guidance("transport_chain", record)
    assert_guidance(record, "transport_chain")

    try:
        from mpl_duality import server
    except ImportError as exc:
        info(f"tool server not importable ({exc}); skipped")
        return
    names = {t.name for t in asyncio.run(server.server.list_tools())}
    expected = {"dual_index", "expand_word", "relation_table", "evaluate", "connected_sum",
                "verify_suite", "transport_chain"}
    check("server registers all seven tools", names == expected, str(sorted(names)))
    prompts = {p.name for p in asyncio.run(server.server.list_prompts())}
    check("server registers the workflow prompts", {"check_duality", "verify_weight"} <= prompts, str(prompts))


# ═══════════════════════════════════════════════════════════════════════════
# Main
# ═══════════════════════════════════════════════════════════════════════════

def _summary():
    total = _passed + _failed
    bar   = f"{GREEN}{'█' * min(_passed, 120)}{RED}{'█' * _failed}{RESET}"
    print(f"\n{BOLD}{'─'*62}{RESET}")
    print(f"{BOLD}Results: {GREEN}{_passed} passed{RESET}  {RED}{_failed} failed{RESET}  / {total} total")
    print(bar)
    if _failed == 0:
        print(f"{GREEN}{BOLD}All tests passed.{RESET}")
    else:
        print(f"{RED}{BOLD}{_failed} test(s) failed - review output above.{RESET}")
    print()
    sys.exit(0 if _failed == 0 else 1)


def main():
    global QUICK, N_RANDOM
    parser = argparse.ArgumentParser(description="Identity tests for mpl-duality")
    parser.add_argument("--quick", action="store_true",
                        help="Skip connected-sum transport, numeric chains and the q → 1 limit")
    parser.add_argument("--random", type=int, default=None,
                        help="Randomized cases per algebra property (default 1000, 200 with --quick)")
    args = parser.parse_args()
    QUICK = QUICK or args.quick
    N_RANDOM = args.random or (200 if QUICK else 1000)

    print(f"\n{BOLD}mpl-duality - Identity Tests{RESET}")
    print(f"Precision: {CTX.precision_bits} bits, tolerance {CTX.target_tol:g}")
    print(f"Mode: {'QUICK' if QUICK else 'FULL'}, {N_RANDOM} randomized cases, seed {SEED}")

    # §1–2 exact, fast
    test_word_algebra_examples()
    test_word_algebra_random()
    test_kernels()

    # §3 evaluators
    test_known_constants()
    test_L_map()
    test_duality()

    # §4 connected sums
    test_connected_sums()
    test_transport_chains()

    # §5 q-analogues
    test_q_analogues()

    # §6 outer layers
    test_harness()
    test_cache()
    test_cli()
    test_guidance_and_server()

    _summary()


if __name__ == "__main__":
    main()
