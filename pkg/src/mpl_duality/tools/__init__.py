# mcp/tools package
