"""
mpl-duality command line.

    mpl-duality dual 2:0,1:1,3:1
    mpl-duality expand 100 --tau
    mpl-duality eval --index 2:1 --z -1
    mpl-duality eval --index 3:1 --z 1/2 --q 1/3 --model 2
    mpl-duality eval --word 100 --z 1/2
    mpl-duality connected --left 2:1 --right 1:0 --z 1/2
    mpl-duality verify duality --max-weight 3 --z 1/2
    mpl-duality verify chain --index 2:1 --z 1/2 --model 1 --q 1/3
    mpl-duality table --max-weight 4 --format csv
    mpl-duality chain --index 3:1 --z 1/2

Exit status: 0 success, 1 verification failure, 2 usage or domain error,
3 non-convergence. Logs go to stderr; MPL_LOG_LEVEL sets the level
(default WARNING), --verbose forces DEBUG.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from typing import Any, Sequence

from pydantic import ValidationError

from mpl_duality.algebra_words import (
    AugmentedIndex,
    NCPoly,
    NCWord,
    dual_index,
    expand_in_basis,
    is_in_A0,
    tau,
)
from mpl_duality.context import PrecisionContext
from mpl_duality.engine import get_engine
from mpl_duality.errors import MPLError
from mpl_duality.harness import SUITES, SuiteGrid, relation_table, run_suite

# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--prec-bits", type=int, default=None, help="Binary working precision (env MPL_PREC_BITS, default 192).")
    common.add_argument("--tol", type=float, default=None, help="Target absolute error (env MPL_TARGET_TOL, default 1e-12).")
    common.add_argument("--max-terms", type=int, default=None, help="Cap on any truncation M (env MPL_MAX_TERMS, default 32768).")
    common.add_argument("--cache", default=None, help="JSON-lines result cache (env MPL_CACHE).")
    common.add_argument("--format", choices=("json", "csv", "text"), default=None, help="Output format.")
    common.add_argument("--jobs", type=int, default=1, help="Worker processes for verify suites.")
    common.add_argument("--verbose", action="store_true", help="DEBUG logging on stderr.")
    return common


def _q_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--q", default=None, help="Deformation parameter 0 < q < 1, decimal or p/r.")
    p.add_argument("--model", type=int, choices=(1, 2), default=None, help="q-model ε (needs --q; default 1).")


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="mpl-duality",
        description="Duality of one-variable multiple polylogarithms: evaluation and verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dual", parents=[common], help="Print the dual of an augmented index.")
    p.add_argument("index", help="k:μ,k:μ,... or empty")

    p = sub.add_parser("expand", parents=[common], help="Expand a word over {0,1,z} in the basis x, y0, y1.")
    p.add_argument("word", help="Word over 0, 1, z (e.g. 100) or basis letters (e.g. 'y1 x').")
    p.add_argument("--tau", action="store_true", help="Apply τ before expanding.")

    p = sub.add_parser("eval", parents=[common], help="Evaluate 𝐿̃i(k̃; z), its q-analogue, or L(w).")
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--index", help="Augmented index k:μ,... or empty.")
    target.add_argument("--word", help="Word in A0 over 0, 1, z; evaluates L(w).")
    p.add_argument("--z", required=True, help="Real argument, decimal or p/r.")
    _q_flags(p)

    p = sub.add_parser("connected", parents=[common], help="Evaluate the connected sum 𝐿̃i(k̃; l̃; z).")
    p.add_argument("--left", required=True, help="Left index k̃.")
    p.add_argument("--right", required=True, help="Right index l̃.")
    p.add_argument("--z", required=True, help="Real argument 0 <= z < 1.")
    _q_flags(p)

    p = sub.add_parser("verify", parents=[common], help="Run a verification suite.")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--max-weight", type=int, default=None, help="Largest index weight.")
    p.add_argument("--z", nargs="+", default=None, help="Arguments z.")
    p.add_argument("--q", nargs="+", default=None, help="Deformation parameters q.")
    p.add_argument("--model", type=int, choices=(1, 2), action="append", default=None,
                   help="q-model (repeatable); for chain, re-evaluates with the q connected sum.")
    p.add_argument("--index", default=None, help="Single index for the chain suite.")
    p.add_argument("--max-param", type=int, default=6, help="Contiguous grid: largest α, β.")
    p.add_argument("--n-max", type=int, default=None, help="Contiguous grid: largest coefficient n.")

    p = sub.add_parser("table", parents=[common], help="Relation table (k̃, k̃†) up to a weight.")
    p.add_argument("--max-weight", type=int, required=True)

    p = sub.add_parser("chain", parents=[common], help="Transport chain of an index, with values per state.")
    p.add_argument("--index", required=True)
    p.add_argument("--z", default=None, help="Evaluate every state at z (0 <= z < 1).")
    _q_flags(p)
    return parser


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _emit(data: Any, fmt: str, rows: list[dict] | None = None, text: str | None = None) -> None:
    if fmt == "text" and text is not None:
        print(text)
    elif fmt == "csv" and rows is not None:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else [], lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        sys.stdout.write(buf.getvalue())
    else:
        print(json.dumps(data, indent=2, default=str))


def _configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else os.environ.get("MPL_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def _context(args: argparse.Namespace) -> PrecisionContext:
    return PrecisionContext.from_env(precision_bits=args.prec_bits, target_tol=args.tol, max_terms=args.max_terms)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_dual(args: argparse.Namespace) -> int:
    index = AugmentedIndex.parse(args.index)
    dual = dual_index(index)
    _emit({"index": str(index), "dual": str(dual)}, args.format or "text", text=str(dual))
    return 0


def cmd_expand(args: argparse.Namespace) -> int:
    word = NCWord.parse(args.word)
    poly = tau(NCPoly.of(word)) if args.tau else NCPoly.of(word)
    basis = expand_in_basis(poly)
    data = {"input": str(poly), "basis": basis.to_record(), "in_A0": is_in_A0(poly)}
    _emit(data, args.format or "json", rows=basis.to_record(), text=str(basis))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    data = get_engine(args.cache).evaluate(z=args.z, index=args.index, word=args.word, q=args.q,
                                           model=args.model, ctx=_context(args))
    record = {k: v for k, v in data.items() if k != "inputs"}
    _emit(data, args.format or "json", rows=[{**data["inputs"], **record}], text=data["value"])
    return 0


def cmd_connected(args: argparse.Namespace) -> int:
    data = get_engine(args.cache).connected(left=args.left, right=args.right, z=args.z, q=args.q,
                                            model=args.model, ctx=_context(args))
    record = {k: v for k, v in data.items() if k != "inputs"}
    _emit(data, args.format or "json", rows=[{**data["inputs"], **record}], text=data["value"])
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    ctx = _context(args)
    grid = SuiteGrid(
        max_weight=args.max_weight,
        z=tuple(args.z) if args.z else None,
        q=tuple(args.q) if args.q else None,
        models=tuple(args.model) if args.model else None,
        index=args.index,
        max_param=args.max_param,
        n_max=args.n_max,
    )
    report = run_suite(args.suite, grid, ctx, jobs=args.jobs)
    _emit(report.to_record(), args.format or "json", rows=report.csv_rows())
    return 0 if report.passed else 1


def cmd_table(args: argparse.Namespace) -> int:
    rows = [r.to_record() for r in relation_table(args.max_weight)]
    text = "\n".join(f"{r['index']}\t{r['dual']}" for r in rows)
    _emit({"max_weight": args.max_weight, "rows": rows}, args.format or "json", rows=rows, text=text)
    return 0


def cmd_chain(args: argparse.Namespace) -> int:
    data, report = get_engine(args.cache).chain(index=args.index, z=args.z, q=args.q, model=args.model,
                                                ctx=_context(args))
    rows = data["states"]
    if report is None:
        text = "\n".join(f"{s['left']} ; {s['right']}\t{s['rule']}" for s in rows)
    else:
        text = "\n".join(f"{s['left']} ; {s['right']}\t{s['rule']}\t{s['value']} ± {s['error_budget']}"
                         for s in rows)
    _emit(data, args.format or "json", rows=rows, text=text)
    return 0 if report is None or report.passed else 1


_COMMANDS = {
    "dual": cmd_dual,
    "expand": cmd_expand,
    "eval": cmd_eval,
    "connected": cmd_connected,
    "verify": cmd_verify,
    "table": cmd_table,
    "chain": cmd_chain,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return _COMMANDS[args.command](args)
    except MPLError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
