"""
Verification suites, relation tables and report assembly.

Suites:
  duality               𝐿̃i(k̃; z) = 𝐿̃i(k̃†; z) for every admissible k̃ up to a weight, and the
                        word dual of every usual MZV index against the block rule
  q-duality             the same for both q-analogues
  transport             y0- and y1-transport of connected sums over pairs of indices
  q-transport           the same in model 1 or 2, with the q connector identities
  contiguous            coefficient-level contiguous relations in exact rationals
  chain                 every state of a transport chain has the same value
  nine-term             ζ(3) against its Li_{1,1,1} / Li_{1,2} expansion, and L(w) = L(τ(w))
  connector-identities  the two connector summation identities, plus the exact z = 0 case
  specializations       z = 0 q-series against direct q-MZV sums, and the q -> 1 limit of
                        𝐿̃i_q and of the q connectors

A suite expands its grid into cases, runs them serially or on a process pool,
and sorts the records before building the report, so the output does not depend
on scheduling.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

import mpmath
from pydantic import BaseModel, ConfigDict, Field

from mpl_duality.algebra_words import (
    AugmentedIndex,
    NCPoly,
    classical_dual,
    dual_index,
    enumerate_admissible,
    tau,
)
from mpl_duality.connected_sums import (
    connector_harmonic_checks,
    connector_shift_checks,
    exact_connector_z0,
    verify_transport_y0,
    verify_transport_y1,
)
from mpl_duality.context import PrecisionContext, QContext, ResidualReport, parse_rational
from mpl_duality.engine import DualityEngine
from mpl_duality.errors import MPLError, NoConvergence
from mpl_duality.hypergeometric_kernels import check_contiguous
from mpl_duality.mpl_evaluator import L_map, nine_term_relation, tilde_li
from mpl_duality.q_analogues import (
    q_connector_checks,
    q_connector_limit_checks,
    q_limit_check,
    specialization_check,
    verify_q_duality,
    verify_q_transport,
)

logger = logging.getLogger(__name__)

SUITES = (
    "duality",
    "q-duality",
    "transport",
    "q-transport",
    "contiguous",
    "chain",
    "nine-term",
    "connector-identities",
    "specializations",
)

MAX_TABLE_WEIGHT = 12

CSV_COLUMNS = ("case", "inputs", "lhs", "rhs", "residual", "budget", "truncation", "pass")


class SuiteGrid(BaseModel):
    """Grid flags of `verify`; unset fields take the suite's default."""
    model_config = ConfigDict(frozen=True)

    max_weight: int | None = Field(default=None, ge=0, description="Largest index weight.")
    z: tuple[str, ...] | None = Field(default=None, description="Arguments z, decimal or p/r.")
    q: tuple[str, ...] | None = Field(default=None, description="Deformation parameters q.")
    models: tuple[int, ...] | None = Field(default=None, description="q-models to run (1, 2).")
    index: str | None = Field(default=None, description="Single index for the chain suite.")
    max_param: int = Field(default=6, ge=1, description="Largest integer α, β of the contiguous grid.")
    n_max: int | None = Field(default=None, ge=0, description="Largest coefficient n of the contiguous grid.")


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def _as_mpf(text: str) -> mpmath.mpf:
    try:
        return mpmath.mpf(text)
    except (TypeError, ValueError):
        return mpmath.mpf(parse_rational(text).numerator) / parse_rational(text).denominator


def _sort_key(record: dict) -> tuple[str, str]:
    return record["case"], json.dumps(record.get("inputs", {}), sort_keys=True, default=str)


@dataclass
class VerificationReport:
    suite: str
    cases: list[dict]
    environment: dict = field(default_factory=dict)

    @property
    def failures(self) -> int:
        return sum(1 for c in self.cases if not c["pass"])

    @property
    def passed(self) -> bool:
        return self.failures == 0

    @property
    def max_residual(self) -> mpmath.mpf:
        return max((_as_mpf(c["residual"]) for c in self.cases), default=mpmath.mpf(0))

    def summary(self) -> dict:
        return {
            "cases": len(self.cases),
            "failures": self.failures,
            "max_residual": mpmath.nstr(self.max_residual, 5),
            "pass": self.passed,
        }

    def to_record(self) -> dict:
        return {
            "suite": self.suite,
            "summary": self.summary(),
            "environment": self.environment,
            "cases": self.cases,
        }

    def csv_rows(self) -> list[dict]:
        rows = []
        for c in self.cases:
            row = {col: c.get(col, "") for col in CSV_COLUMNS}
            row["inputs"] = json.dumps(c.get("inputs", {}), sort_keys=True, default=str)
            rows.append(row)
        return rows


def _failed_record(kind: str, params: dict, exc: NoConvergence) -> dict:
    return {
        "case": kind,
        "inputs": params,
        "lhs": "",
        "rhs": "",
        "residual": "inf",
        "budget": "0",
        "truncation": getattr(exc.partial, "terms_used", 0),
        "pass": False,
        "error": str(exc),
    }


# ---------------------------------------------------------------------------
# Case runners: (params, ctx) -> records
# ---------------------------------------------------------------------------

def _q(params: dict) -> QContext:
    return QContext(q=params["q"], model=params["model"])


def _run_classical_dual(params: dict, ctx: PrecisionContext) -> list[dict]:
    """Word dual of a usual MZV index (every μ = 1) against the block rule."""
    index = AugmentedIndex.parse(params["index"])
    dual = dual_index(index)
    expected = AugmentedIndex.all_ones(classical_dual(index.usual_index))
    return [{
        "case": "classical-dual",
        "inputs": {"k": str(index)},
        "lhs": str(dual),
        "rhs": str(expected),
        "residual": "0" if dual == expected else "1",
        "budget": "0",
        "truncation": 0,
        "pass": dual == expected,
    }]


def _run_duality(params: dict, ctx: PrecisionContext) -> list[dict]:
    index = AugmentedIndex.parse(params["index"])
    dual = dual_index(index)
    report = ResidualReport(
        "duality", tilde_li(index, params["z"], ctx), tilde_li(dual, params["z"], ctx),
        {"k": str(index), "dual": str(dual), "z": params["z"]}, ctx.precision_bits,
    )
    return [report.to_record(ctx.digits)]


def _run_q_duality(params: dict, ctx: PrecisionContext) -> list[dict]:
    reports = verify_q_duality(params["max_weight"], params["z"], _q(params), ctx)
    return [r.to_record(ctx.digits) for r in reports]


def _run_transport(params: dict, ctx: PrecisionContext) -> list[dict]:
    left, right = AugmentedIndex.parse(params["k"]), AugmentedIndex.parse(params["l"])
    verify = verify_transport_y0 if params["move"] == "y0" else verify_transport_y1
    return verify(left, right, params["z"], ctx, connector_grid=-1).to_records(ctx.digits)


def _run_connectors(params: dict, ctx: PrecisionContext) -> list[dict]:
    z = params["z"]
    reports: list[Any] = []
    if parse_rational(z) != 0:
        reports += connector_shift_checks(z, ctx, params["grid"])
        reports += connector_harmonic_checks(z, ctx, params["grid"] - 1, params["grid"] - 1)
    else:
        reports += [exact_connector_z0(m, n) for m in range(params["grid"]) for n in range(1, params["grid"])]
    return [r.to_record(ctx.digits) for r in reports]


def _run_q_transport(params: dict, ctx: PrecisionContext) -> list[dict]:
    left, right = AugmentedIndex.parse(params["k"]), AugmentedIndex.parse(params["l"])
    bundle = verify_q_transport(params["move"], left, right, params["z"], _q(params), ctx, connector_grid=-1)
    return bundle.to_records(ctx.digits)


def _run_q_connectors(params: dict, ctx: PrecisionContext) -> list[dict]:
    return [r.to_record(ctx.digits) for r in q_connector_checks(params["z"], _q(params), ctx, params["grid"])]


def _run_contiguous(params: dict, ctx: PrecisionContext) -> list[dict]:
    q = Fraction(params["q"]) if params.get("q") else None
    out = []
    for triple in params["params"]:
        if q is not None:
            triple = tuple(q ** e for e in triple)
        report = check_contiguous(params["relation"], triple, params["n_max"], q)
        rec = report.to_record()
        out.append({
            "case": f"contiguous-{report.relation}",
            "inputs": {"params": rec["params"], "q": rec["q"], "n_max": rec["n_max"]},
            "lhs": rec["max_abs_residual"],
            "rhs": "0",
            "residual": rec["max_abs_residual"],
            "budget": "0",
            "truncation": rec["n_max"],
            "pass": rec["passed"],
        })
    return out


def _run_chain(params: dict, ctx: PrecisionContext) -> list[dict]:
    record, _ = DualityEngine().chain(index=params["index"], z=params["z"], q=params.get("q"),
                                      model=params.get("model"), ctx=ctx)
    return [record]


def _run_nine_term(params: dict, ctx: PrecisionContext) -> list[dict]:
    z = params["z"]
    word = NCPoly.of("100")
    image = tau(word)
    reports = [
        nine_term_relation(z, ctx),
        ResidualReport("L-tau-invariance", L_map(word, z, ctx), L_map(image, z, ctx),
                       {"w": str(word), "tau(w)": str(image), "z": z}, ctx.precision_bits),
        ResidualReport("L-monomial-vs-basis", L_map(image, z, ctx, method="monomial"), L_map(image, z, ctx),
                       {"w": str(image), "z": z}, ctx.precision_bits),
    ]
    return [r.to_record(ctx.digits) for r in reports]


def _run_specialization(params: dict, ctx: PrecisionContext) -> list[dict]:
    check = specialization_check(tuple(params["k"]), params["model"], params["q"], params["M"])
    return [check.to_record(ctx.digits)]


def _run_q_limit(params: dict, ctx: PrecisionContext) -> list[dict]:
    report = q_limit_check(AugmentedIndex.parse(params["index"]), params["z"], params["model"], ctx)
    return [report.to_record(ctx.digits)]


def _run_q_connector_limit(params: dict, ctx: PrecisionContext) -> list[dict]:
    return [r.to_record(ctx.digits) for r in q_connector_limit_checks(params["z"], params["model"], ctx)]


_RUNNERS: dict[str, Callable[[dict, PrecisionContext], list[dict]]] = {
    "duality": _run_duality,
    "classical-dual": _run_classical_dual,
    "q-duality": _run_q_duality,
    "transport": _run_transport,
    "connectors": _run_connectors,
    "q-transport": _run_q_transport,
    "q-connectors": _run_q_connectors,
    "contiguous": _run_contiguous,
    "chain": _run_chain,
    "nine-term": _run_nine_term,
    "specialization": _run_specialization,
    "q-limit": _run_q_limit,
    "q-connector-limit": _run_q_connector_limit,
}


def run_case(case: tuple[str, dict], ctx: PrecisionContext) -> list[dict]:
    """Run one case; non-convergence marks it failed instead of aborting the suite."""
    kind, params = case
    try:
        return _RUNNERS[kind](params, ctx)
    except NoConvergence as exc:
        logger.warning("case %s %s did not converge: %s", kind, params, exc)
        return [_failed_record(kind, params, exc)]


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------

def _pairs(max_weight: int, *, right_non_empty: bool) -> list[tuple[str, str]]:
    sides = [AugmentedIndex(())] + enumerate_admissible(max_weight)
    return [(str(k), str(l)) for k in sides for l in sides if not (right_non_empty and l.is_empty)]


def _contiguous_cases(grid: SuiteGrid) -> list[tuple[str, dict]]:
    p = grid.max_param
    n_max = 12 if grid.n_max is None else grid.n_max
    classical = [(a, b, c) for a in range(1, p + 1) for b in range(1, p + 1) for c in range(1, p + 3)]
    cases = [("contiguous", {"relation": rel, "params": classical, "n_max": n_max}) for rel in ("HG1", "HG2")]
    exps = [(a, b, c) for a in range(1, min(4, p) + 1) for b in range(1, min(4, p) + 1)
            for c in range(1, min(6, p) + 1)]
    q_n_max = 10 if grid.n_max is None else grid.n_max
    for q in grid.q or ("1/3",):
        q = str(parse_rational(q))
        for rel in ("Q1HG1", "Q1HG2", "Q2HG1", "Q2HG2"):
            cases.append(("contiguous", {"relation": rel, "params": exps, "n_max": q_n_max, "q": q}))
    return cases


def build_cases(suite: str, grid: SuiteGrid) -> list[tuple[str, dict]]:
    """Expand a suite's grid into (runner, params) cases."""
    if suite not in SUITES:
        raise MPLError(f"unknown suite {suite!r}; expected one of {', '.join(SUITES)}")
    zs = grid.z
    qs = grid.q or ("1/3",)
    models = grid.models or (1, 2)

    if suite == "duality":
        indices = enumerate_admissible(4 if grid.max_weight is None else grid.max_weight)
        cases = [("duality", {"index": str(k), "z": z}) for z in zs or ("0", "1/2", "9/10") for k in indices]
        return cases + [("classical-dual", {"index": str(k)}) for k in indices if not k.count_mu(0)]
    if suite == "q-duality":
        return [("q-duality", {"max_weight": 3 if grid.max_weight is None else grid.max_weight,
                               "z": z, "q": q, "model": model})
                for model in models for q in grid.q or ("1/3", "2/3") for z in zs or ("0", "1/2")]
    if suite == "transport":
        w = 2 if grid.max_weight is None else grid.max_weight
        cases = []
        for z in zs or ("0", "1/2"):
            cases += [("transport", {"move": "y0", "k": k, "l": l, "z": z})
                      for k, l in _pairs(w, right_non_empty=False)]
            cases += [("transport", {"move": "y1", "k": k, "l": l, "z": z})
                      for k, l in _pairs(w, right_non_empty=True)]
        return cases
    if suite == "q-transport":
        w = 2 if grid.max_weight is None else grid.max_weight
        cases = []
        for model in models:
            for q in qs:
                for z in zs or ("1/2",):
                    base = {"z": z, "q": q, "model": model}
                    cases.append(("q-connectors", {**base, "grid": 3}))
                    cases += [("q-transport", {**base, "move": "y0", "k": k, "l": l})
                              for k, l in _pairs(w, right_non_empty=False)]
                    cases += [("q-transport", {**base, "move": "y1", "k": k, "l": l})
                              for k, l in _pairs(w, right_non_empty=True)]
        return cases
    if suite == "contiguous":
        return _contiguous_cases(grid)
    if suite == "chain":
        if grid.index is not None:
            indices = [str(AugmentedIndex.parse(grid.index).require_admissible())]
        else:
            indices = [str(k) for k in enumerate_admissible(4 if grid.max_weight is None else grid.max_weight)]
        if grid.models:
            return [("chain", {"index": k, "z": z, "q": q, "model": model})
                    for model in grid.models for q in qs for z in zs or ("1/2",) for k in indices]
        return [("chain", {"index": k, "z": z}) for z in zs or ("1/2",) for k in indices]
    if suite == "nine-term":
        return [("nine-term", {"z": z}) for z in zs or ("1/2",)]
    if suite == "connector-identities":
        return [("connectors", {"z": z, "grid": 5}) for z in ("0",) + (zs or ("3/10", "1/2", "9/10"))]
    # specializations
    w = 3 if grid.max_weight is None else grid.max_weight
    usual = [k.usual_index for k in enumerate_admissible(w) if k.count_mu(0) == 0]
    cases = [("specialization", {"k": list(k), "model": model, "q": q, "M": 50})
             for model in models for q in grid.q or ("1/2",) for k in usual]
    cases += [("q-limit", {"index": str(k), "z": z, "model": model})
              for model in models for z in zs or ("1/2",) for k in enumerate_admissible(min(w, 2))]
    cases += [("q-connector-limit", {"z": z, "model": model}) for model in models for z in zs or ("3/10", "1/2")]
    return cases


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------

def _run_all(cases: list[tuple[str, dict]], ctx: PrecisionContext, jobs: int,
             progress: Callable[[int, int], None] | None) -> list[dict]:
    records: list[dict] = []
    total = len(cases)
    if jobs <= 1:
        for i, case in enumerate(cases, 1):
            records += run_case(case, ctx)
            if progress:
                progress(i, total)
        return records
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for i, batch in enumerate(pool.map(run_case, cases, [ctx] * total), 1):
            records += batch
            if progress:
                progress(i, total)
    return records


def run_suite(
    suite: str,
    grid: SuiteGrid | None = None,
    ctx: PrecisionContext | None = None,
    *,
    jobs: int = 1,
    progress: Callable[[int, int], None] | None = None,
) -> VerificationReport:
    """Run one suite; progress(done, total) is called after every case."""
    grid = grid or SuiteGrid()
    ctx = ctx or PrecisionContext.from_env()
    cases = build_cases(suite, grid)
    logger.info("suite %s: %d cases, %d bits, tol %g, jobs %d",
                suite, len(cases), ctx.precision_bits, ctx.target_tol, jobs)
    # evaluations aim at half the tolerance so the two-sided budget stays within it
    records = sorted(_run_all(cases, ctx.with_tol(ctx.target_tol / 2), jobs, progress), key=_sort_key)
    environment = {
        "precision_bits": ctx.precision_bits,
        "target_tol": ctx.target_tol,
        "max_terms": ctx.max_terms,
        "truncations": sorted({r.get("truncation", 0) for r in records}),
        "z": sorted({str(p["z"]) for _, p in cases if "z" in p}),
        "q": sorted({str(p["q"]) for _, p in cases if p.get("q")}),
    }
    report = VerificationReport(suite, records, environment)
    logger.info("suite %s finished: %d records, %d failures, max residual %s",
                suite, len(records), report.failures, mpmath.nstr(report.max_residual, 3))
    return report


# ---------------------------------------------------------------------------
# Relation table
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RelationRow:
    index: AugmentedIndex
    dual: AugmentedIndex

    @property
    def self_dual(self) -> bool:
        return self.index == self.dual

    def to_record(self) -> dict:
        return {
            "index": str(self.index),
            "dual": str(self.dual),
            "weight": self.index.weight,
            "depth": self.index.depth,
            "self_dual": self.self_dual,
        }


def relation_table(max_weight: int) -> list[RelationRow]:
    """(k̃, k̃†) for every admissible index up to max_weight, in enumeration order."""
    if max_weight > MAX_TABLE_WEIGHT:
        raise MPLError(f"relation tables are capped at weight {MAX_TABLE_WEIGHT}; got {max_weight}")
    return [RelationRow(k, dual_index(k)) for k in enumerate_admissible(max_weight)]
