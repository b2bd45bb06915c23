"""Verified-synthesis pipeline: strategy-templated prompting, model
gateway with record/replay, Lean and Python verification backends,
retry orchestration, proof intersection, and metrics reporting."""

__version__ = "0.1.0"
