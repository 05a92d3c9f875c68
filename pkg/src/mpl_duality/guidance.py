"""
guidance.py - builds the _guidance block injected into every tool response.

Entry point:
    build_guidance(tool_name: str, data: dict) -> dict

Each per-tool function returns a dict with:
    "summary"    - one sentence describing the result
    "next_steps" - list of {"tool", "params", "note"} dicts
"""

from __future__ import annotations

from typing import Callable


# ---------------------------------------------------------------------------
# Public entry point
# ---------------------------------------------------------------------------

def build_guidance(tool_name: str, data: dict) -> dict:
    """Dispatch to the per-tool guidance builder."""
    builder = _BUILDERS.get(tool_name)
    if builder is None:
        return {"summary": f"No guidance defined for tool '{tool_name}'.", "next_steps": []}
    try:
        return builder(data)
    except Exception as exc:  # never let guidance crash the tool
        return {"summary": f"Guidance error: {exc}", "next_steps": []}


# ---------------------------------------------------------------------------
# Algebra
# ---------------------------------------------------------------------------

def _guidance_dual_index(data: dict) -> dict:
    index, dual = data["index"], data["dual"]
    if data.get("self_dual"):
        summary = f"{index} is self-dual."
    else:
        summary = f"The dual of {index} is {dual} (weight {data.get('weight')}, depth {data.get('dual_depth')})."
    return {
        "summary": summary,
        "next_steps": [
            {
                "tool": "evaluate",
                "params": {"index": index, "z": "1/2"},
                "note": "Evaluate the index; the dual must give the same value.",
            },
            {
                "tool": "evaluate",
                "params": {"index": dual, "z": "1/2"},
                "note": "Evaluate the dual at the same z and compare.",
            },
            {
                "tool": "transport_chain",
                "params": {"index": index},
                "note": "Show the letter-by-letter transport that turns the index into its dual.",
            },
        ],
    }


def _guidance_expand_word(data: dict) -> dict:
    if not data.get("in_A0"):
        return {
            "summary": (
                f"[{data.get('input')}] is not in A0: some basis word starts with x or ends in y1, "
                "so L is not defined on it."
            ),
            "next_steps": [],
        }
    n = len(data.get("basis", []))
    return {
        "summary": f"[{data.get('input')}] lies in A0 and expands to {n} basis word(s).",
        "next_steps": [
            {
                "tool": "evaluate",
                "params": {"word": data.get("word"), "z": "1/2"},
                "note": "Evaluate L on this word through its basis expansion.",
            }
        ],
    }


def _guidance_relation_table(data: dict) -> dict:
    rows = data.get("rows", [])
    self_dual = sum(1 for r in rows if r.get("self_dual"))
    return {
        "summary": (
            f"{len(rows)} admissible indices up to weight {data.get('max_weight')}, "
            f"{self_dual} of them self-dual."
        ),
        "next_steps": [
            {
                "tool": "verify_suite",
                "params": {"suite": "duality", "max_weight": data.get("max_weight"), "z": ["1/2"]},
                "note": "Check numerically that every row's two indices give equal values.",
            }
        ],
    }


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _guidance_evaluate(data: dict) -> dict:
    inputs = data.get("inputs", {})
    if not data.get("converged", True):
        return {
            "summary": (
                f"Did not reach the target tolerance (error {data.get('error_estimate')} "
                f"at truncation {data.get('truncation')})."
            ),
            "next_steps": [
                {
                    "tool": "evaluate",
                    "params": {**inputs, "target_tol": 1e-8},
                    "note": "Retry with a looser tolerance.",
                }
            ],
        }
    summary = f"Value {data.get('value')} ± {data.get('error_estimate')}."
    if "index" in inputs and "q" not in inputs and inputs["index"] != "empty":
        return {
            "summary": summary,
            "next_steps": [
                {
                    "tool": "dual_index",
                    "params": {"index": inputs["index"]},
                    "note": "Find the dual index; its value at the same z is equal.",
                }
            ],
        }
    return {"summary": summary, "next_steps": []}


def _guidance_connected_sum(data: dict) -> dict:
    inputs = data.get("inputs", {})
    swapped = {**inputs, "left": inputs.get("right"), "right": inputs.get("left")}
    return {
        "summary": f"Connected sum {data.get('value')} ± {data.get('error_estimate')}.",
        "next_steps": [
            {
                "tool": "connected_sum",
                "params": swapped,
                "note": "The connected sum is symmetric; the swapped pair gives the same value.",
            }
        ],
    }


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

def _guidance_verify_suite(data: dict) -> dict:
    summary = data.get("summary", {})
    suite = data.get("suite")
    failures = summary.get("failures", 0)
    if failures == 0:
        return {
            "summary": (
                f"Suite {suite}: all {summary.get('cases')} case(s) pass; "
                f"largest residual {summary.get('max_residual')}."
            ),
            "next_steps": [],
        }
    failed = [c for c in data.get("cases", []) if not c.get("pass")][:3]
    steps = []
    for c in failed:
        if "error" in c:
            steps.append({
                "tool": "verify_suite",
                "params": {"suite": suite, "target_tol": 1e-8},
                "note": f"{c['case']} did not converge: {c['error']}. Retry with a looser tolerance.",
            })
        elif c.get("case") == "duality":
            steps.append({
                "tool": "evaluate",
                "params": {"index": c["inputs"].get("k"), "z": c["inputs"].get("z")},
                "note": "Re-evaluate the failing index on its own.",
            })
    return {
        "summary": f"Suite {suite}: {failures} of {summary.get('cases')} case(s) failed.",
        "next_steps": steps,
    }


def _guidance_transport_chain(data: dict) -> dict:
    states = data.get("states", [])
    if "pass" not in data:
        return {
            "summary": f"{len(states)} state(s) from {data.get('index')} to its dual {data.get('dual')}.",
            "next_steps": [
                {
                    "tool": "transport_chain",
                    "params": {"index": data.get("index"), "z": "1/2"},
                    "note": "Evaluate the connected sum at every state; all values must agree.",
                }
            ],
        }
    verdict = "agree" if data.get("pass") else "DISAGREE"
    return {
        "summary": (
            f"The {len(states)} chain state(s) of {data['inputs'].get('index')} {verdict}: "
            f"max deviation {data.get('residual')} against budget {data.get('budget')}."
        ),
        "next_steps": [],
    }


_BUILDERS: dict[str, Callable] = {
    "dual_index": _guidance_dual_index,
    "expand_word": _guidance_expand_word,
    "relation_table": _guidance_relation_table,
    "evaluate": _guidance_evaluate,
    "connected_sum": _guidance_connected_sum,
    "verify_suite": _guidance_verify_suite,
    "transport_chain": _guidance_transport_chain,
}
