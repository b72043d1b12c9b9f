"""Python access to the twisted spectral triple toolkit."""

import json

from ._twist import bicomplex, cli, jlo, models, ncalg, residue

__all__ = ["bicomplex", "cli", "jlo", "models", "ncalg", "residue", "run"]


def run(config_text: str, threads: int = 1) -> dict:
    """Parse a YAML config and run its suites; returns the report as a dict."""
    return json.loads(cli.run_report(config_text, threads))
