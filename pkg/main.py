#!/usr/bin/env -S uv run --script
# /// script
# requires-python = ">=3.13"
# dependencies = [
#   "dbc-gridsim",
# ]
# ///
"""Main entry point for the grid simulator."""

from dbc_gridsim.cli import main

if __name__ == "__main__":
    main()
