"""Algebra tools: dual_index, expand_word, relation_table."""

from __future__ import annotations

import json
from typing import Annotated

from mcp import types
from mcp.types import ToolAnnotations
from pydantic import Field

from mpl_duality.algebra_words import (
    AugmentedIndex,
    NCPoly,
    NCWord,
    dual_index as _dual_index,
    expand_in_basis,
    is_in_A0,
    tau,
    word_of_index,
)
from mpl_duality.guidance import build_guidance
from mpl_duality.harness import relation_table as _relation_table


def register(server):

    @server.tool(annotations=ToolAnnotations(readOnlyHint=True, openWorldHint=False))
    def dual_index(
        index: Annotated[str, Field(description="Admissible augmented index as k:μ,k:μ,... (μ in {0,1}), e.g. '3:1' or '2:0,1:1,3:1'.")],
    ) -> list[types.TextContent]:
        """Return the dual k̃† of an admissible augmented index.

        The dual reverses the basis word w(k̃) and swaps x with y1; both indices
        have the same weight and the same 𝐿̃i value at every z.
        """
        k = AugmentedIndex.parse(index)
        dual = _dual_index(k)
        data = {
            "index": str(k),
            "dual": str(dual),
            "word": str(word_of_index(k)),
            "dual_word": str(word_of_index(dual)),
            "weight": k.weight,
            "depth": k.depth,
            "dual_depth": dual.depth,
            "self_dual": k == dual,
        }
        data["_guidance"] = build_guidance("dual_index", data)
        return [types.TextContent(type="text", text=json.dumps(data, indent=2))]

    @server.tool(annotations=ToolAnnotations(readOnlyHint=True, openWorldHint=False))
    def expand_word(
        word: Annotated[str, Field(description="Word over 0, 1, z (e0, e1, ez), e.g. '100'.")],
        apply_tau: Annotated[bool, Field(description="Apply the anti-automorphism τ before expanding.")] = False,
    ) -> list[types.TextContent]:
        """Expand a word in the basis x, y0, y1 and report whether it lies in A0."""
        w = NCWord.parse(word)
        poly = tau(NCPoly.of(w)) if apply_tau else NCPoly.of(w)
        data = {
            "word": word,
            "input": str(poly),
            "basis": expand_in_basis(poly).to_record(),
            "in_A0": is_in_A0(poly),
        }
        data["_guidance"] = build_guidance("expand_word", data)
        return [types.TextContent(type="text", text=json.dumps(data, indent=2))]

    @server.tool(annotations=ToolAnnotations(readOnlyHint=True, openWorldHint=False))
    def relation_table(
        max_weight: Annotated[int, Field(description="Largest weight to enumerate (at most 12).", ge=1)],
    ) -> list[types.TextContent]:
        """List every admissible index up to max_weight with its dual, weight, depth and self-dual flag."""
        data = {"max_weight": max_weight, "rows": [r.to_record() for r in _relation_table(max_weight)]}
        data["_guidance"] = build_guidance("relation_table", data)
        return [types.TextContent(type="text", text=json.dumps(data, indent=2))]
