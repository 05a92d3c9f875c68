#!/usr/bin/env python3
"""
mpl-duality MCP server - entry point.

Registers 7 tools across 3 modules over the stdio transport:

    mpl-duality-mcp

Client config:
    {
      "mcpServers": {
        "mpl-duality": {
          "command": "uvx",
          "args": ["--from", "mpl-duality", "mpl-duality-mcp"],
          "env": { "MPL_PREC_BITS": "192", "MPL_CACHE": "/tmp/mpl-cache.jsonl" }
        }
      }
    }

Defaults for every tool come from MPL_PREC_BITS, MPL_TARGET_TOL, MPL_MAX_TERMS
and MPL_CACHE; per-call arguments override them.
"""

import logging
import os

from mcp.server.fastmcp import FastMCP

# ---- Tool modules ----
from mpl_duality.tools import algebra, evaluation, verification

# ---------------------------------------------------------------------------
# Server + tool registration
# ---------------------------------------------------------------------------

server = FastMCP(
    "mpl-duality",
    instructions=(
        "Exact and high-precision tools for the duality of one-variable multiple "
        "polylogarithms 𝐿̃i(k̃; z). Indices are written k:μ,k:μ,... with μ in {0,1}; "
        "an index is admissible when its last entry has k >= 2 or μ = 0. "
        "Use dual_index to find the dual of an index, evaluate to compute 𝐿̃i (or its "
        "q-analogue with q and model), connected_sum for 𝐿̃i(k̃; l̃; z), transport_chain "
        "to see the letter-by-letter proof that an index and its dual agree, and "
        "verify_suite to run a whole family of checks. "
        "Typical workflow: dual_index → evaluate both indices → transport_chain with z."
    ),
)

# Each module's register() calls @server.tool() decorators, adding tools to
# the FastMCP instance.
algebra.register(server)
evaluation.register(server)
verification.register(server)

# ---------------------------------------------------------------------------
# Prompts
# ---------------------------------------------------------------------------

@server.prompt()
def check_duality(index: str, z: str = "1/2") -> str:
    """Check the duality 𝐿̃i(k̃; z) = 𝐿̃i(k̃†; z) for one index.

    index: Admissible augmented index, e.g. '3:1' or '2:0,1:1,3:1'.
    z: Argument in [0, 1), as a decimal or p/r.
    """
    return (
        f"Call dual_index(index='{index}') to get the dual index. "
        f"Then call evaluate(index='{index}', z='{z}') and evaluate on the dual at the same z; "
        f"the two values must agree within the sum of their error estimates. "
        f"Finally call transport_chain(index='{index}', z='{z}') and report the moves "
        f"that carry the index to its dual."
    )


@server.prompt()
def verify_weight(max_weight: int = 3, z: str = "1/2") -> str:
    """Run the duality and transport suites up to a weight.

    max_weight: Largest weight of the indices checked.
    z: Argument in [0, 1).
    """
    return (
        f"Call relation_table(max_weight={max_weight}) and summarize the self-dual indices. "
        f"Then call verify_suite(suite='duality', max_weight={max_weight}, z=['{z}']) and "
        f"verify_suite(suite='transport', max_weight={min(max_weight, 2)}, z=['{z}']). "
        f"Report the number of cases, failures and the largest residual of each."
    )

# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def main():
    logging.basicConfig(
        level=os.getenv("MPL_LOG_LEVEL", "WARNING").upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    server.run()


if __name__ == "__main__":
    main()
