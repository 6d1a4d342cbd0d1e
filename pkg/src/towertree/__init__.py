"""towertree: exact tower arithmetic, indexed branching trees, and
fusion-style refinement simulations with machine-checked counting."""

__version__ = "0.1.0"
