"""Verification tools: verify_suite, transport_chain."""

from __future__ import annotations

import asyncio
import json
from typing import Annotated, Optional

from mcp import types
from mcp.server.fastmcp import Context
from mcp.types import ToolAnnotations
from pydantic import Field

from mpl_duality.engine import get_engine
from mpl_duality.guidance import build_guidance
from mpl_duality.harness import SUITES, SuiteGrid, run_suite


def register(server):

    @server.tool(annotations=ToolAnnotations(readOnlyHint=True, openWorldHint=False))
    async def verify_suite(
        suite: Annotated[str, Field(description=f"Suite to run: one of {', '.join(SUITES)}.")],
        ctx: Context,
        max_weight: Annotated[Optional[int], Field(description="Largest index weight (suite default if omitted).")] = None,
        z: Annotated[Optional[list[str]], Field(description="Arguments z as decimals or p/r.")] = None,
        q: Annotated[Optional[list[str]], Field(description="Deformation parameters q.")] = None,
        models: Annotated[Optional[list[int]], Field(description="q-models to run (1, 2); for chain, evaluates with the q connected sum.")] = None,
        index: Annotated[Optional[str], Field(description="Single index for the chain suite.")] = None,
        precision_bits: Annotated[Optional[int], Field(description="Binary working precision (default 192).")] = None,
        target_tol: Annotated[Optional[float], Field(description="Absolute error target (default 1e-12).")] = None,
        poll_interval: Annotated[float, Field(description="Seconds between progress notifications (default 1).")] = 1.0,
    ) -> list[types.TextContent]:
        """Run a verification suite, emitting live MCP progress notifications.

        Every case compares two evaluations of the same quantity and passes when
        the residual is within the summed error budget. The response holds the
        summary (cases, failures, max residual), the environment and every case
        record. Full-size grids take minutes; pass a smaller max_weight or fewer
        z values for a quick check.

        Progress is the fraction of cases finished and never decreases.
        """
        grid = SuiteGrid(
            max_weight=max_weight,
            z=tuple(z) if z else None,
            q=tuple(q) if q else None,
            models=tuple(models) if models else None,
            index=index,
        )
        pctx = get_engine().context(precision_bits, target_tol)
        done = [0, 1]

        def _progress(i: int, total: int) -> None:
            done[0], done[1] = i, total

        async def _report(pct: float) -> None:
            try:
                await ctx.report_progress(pct, 100.0)
            except Exception:
                pass

        task = asyncio.create_task(asyncio.to_thread(run_suite, suite, grid, pctx, progress=_progress))
        last_emitted = 0.0
        await _report(0.0)
        while not task.done():
            await asyncio.wait({task}, timeout=poll_interval)
            pct = min(99.0, 100.0 * done[0] / max(done[1], 1))
            if pct > last_emitted:
                last_emitted = pct
                await _report(pct)
        report = task.result()
        await _report(100.0)

        data = report.to_record()
        data["_guidance"] = build_guidance("verify_suite", data)
        return [types.TextContent(type="text", text=json.dumps(data, indent=2))]

    @server.tool(annotations=ToolAnnotations(readOnlyHint=True, openWorldHint=False))
    async def transport_chain(
        index: Annotated[str, Field(description="Admissible augmented index k:μ,...")],
        z: Annotated[Optional[str], Field(description="If given, evaluate the connected sum at every state (0 <= z < 1).")] = None,
        q: Annotated[Optional[str], Field(description="Deformation parameter; evaluates the q connected sum instead.")] = None,
        model: Annotated[Optional[int], Field(description="q-model ε, 1 or 2 (default 1). Needs q.")] = None,
        precision_bits: Annotated[Optional[int], Field(description="Binary working precision (default 192).")] = None,
        target_tol: Annotated[Optional[float], Field(description="Absolute error target (default 1e-12).")] = None,
    ) -> list[types.TextContent]:
        """Return the transport chain (w(k̃), 1) -> ... -> (1, τ(w(k̃))) of an index.

        Each state records the left word, the right word and the move that
        produced it (Y0-move, Y1-move or X-move-via-symmetry). With z, every
        state also carries its connected-sum value and error budget; the chain
        passes when all values agree.
        """
        engine = get_engine()
        pctx = engine.context(precision_bits, target_tol)
        data, _ = await asyncio.to_thread(
            lambda: engine.chain(index=index, z=z, q=q, model=model, ctx=pctx)
        )
        data["_guidance"] = build_guidance("transport_chain", data)
        return [types.TextContent(type="text", text=json.dumps(data, indent=2))]
