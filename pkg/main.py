#!/usr/bin/env python3
"""Entry point for the nisqkit command line."""

from nisqkit.cli import cli

if __name__ == "__main__":
    cli(prog_name="nisqkit")
