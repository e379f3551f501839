"""Simulation and verification toolkit for internal-state-driven
run-and-tumble motion: renewal-interval models, an individual-based
spatial model, exact transfer-function oracles, and scaling-regime
classification."""

__version__ = "0.1.0"
