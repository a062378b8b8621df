"""Exception types shared across the package."""

from __future__ import annotations


class CausalPerturbError(Exception):
    """Base class for data and contract errors raised by this package."""


class RecordFormatError(CausalPerturbError):
    """A serialized record is malformed.

    Messages name the offending line number and field where known so
    that broken files can be fixed without a debugger.
    """


class UnlabeledScenarioError(CausalPerturbError):
    """An operation needed causal labels for a scenario that has none."""
