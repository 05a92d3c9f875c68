"""Evaluation tools: evaluate, connected_sum."""

from __future__ import annotations

import asyncio
import json
from typing import Annotated, Optional

from mcp import types
from mcp.types import ToolAnnotations
from pydantic import Field

from mpl_duality.engine import get_engine
from mpl_duality.guidance import build_guidance


def register(server):

    @server.tool(annotations=ToolAnnotations(readOnlyHint=True, openWorldHint=False))
    async def evaluate(
        z: Annotated[str, Field(description="Real argument as a decimal or p/r, e.g. '1/2' or '-1'.")],
        index: Annotated[Optional[str], Field(description="Augmented index k:μ,... or 'empty'. Pass this or word.")] = None,
        word: Annotated[Optional[str], Field(description="Word in A0 over 0, 1, z; evaluates L(w). Pass this or index.")] = None,
        q: Annotated[Optional[str], Field(description="Deformation parameter 0 < q < 1; switches to the q-analogue.")] = None,
        model: Annotated[Optional[int], Field(description="q-model ε, 1 or 2 (default 1). Needs q.")] = None,
        precision_bits: Annotated[Optional[int], Field(description="Binary working precision (default 192).")] = None,
        target_tol: Annotated[Optional[float], Field(description="Absolute error target (default 1e-12).")] = None,
    ) -> list[types.TextContent]:
        """Evaluate 𝐿̃i(k̃; z), its q-analogue 𝐿̃i_q^(ε)(k̃; z), or L(w).

        Domain: |z| < 1, and z = -1 for indices ending with k >= 2
        (level-two values, e.g. index '2:1' at z = -1 gives π²/4). q-series
        need 0 <= z < 1. The value is printed with floor(0.3·precision_bits)
        digits next to its error estimate.
        """
        engine = get_engine()
        ctx = engine.context(precision_bits, target_tol)
        data = await asyncio.to_thread(
            lambda: engine.evaluate(z=z, index=index, word=word, q=q, model=model, ctx=ctx)
        )
        data["_guidance"] = build_guidance("evaluate", data)
        return [types.TextContent(type="text", text=json.dumps(data, indent=2))]

    @server.tool(annotations=ToolAnnotations(readOnlyHint=True, openWorldHint=False))
    async def connected_sum(
        left: Annotated[str, Field(description="Left augmented index k̃ (may be 'empty').")],
        right: Annotated[str, Field(description="Right augmented index l̃ (may be 'empty').")],
        z: Annotated[str, Field(description="Real argument 0 <= z < 1.")],
        q: Annotated[Optional[str], Field(description="Deformation parameter 0 < q < 1; uses the q connector.")] = None,
        model: Annotated[Optional[int], Field(description="q-model ε, 1 or 2 (default 1). Needs q.")] = None,
        precision_bits: Annotated[Optional[int], Field(description="Binary working precision (default 192).")] = None,
        target_tol: Annotated[Optional[float], Field(description="Absolute error target (default 1e-12).")] = None,
    ) -> list[types.TextContent]:
        """Evaluate the connected sum 𝐿̃i(k̃; l̃; z) = Σ F(m)·G(n)·C(m,n;z).

        With one side empty it equals 𝐿̃i of the other side, which must then be
        admissible. Pairs with both sides non-empty take a few seconds.
        """
        engine = get_engine()
        ctx = engine.context(precision_bits, target_tol)
        data = await asyncio.to_thread(
            lambda: engine.connected(left=left, right=right, z=z, q=q, model=model, ctx=ctx)
        )
        data["_guidance"] = build_guidance("connected_sum", data)
        return [types.TextContent(type="text", text=json.dumps(data, indent=2))]
