"""Finite-scale Ramsey workbench: semigroup sums, idempotent-ultrafilter strategy
construction via membership oracles, selection games and offline certificate checks."""

__version__ = "0.1.0"
