"""Compiler and resource estimator for Pauli-based computation on a modular
bivariate-bicycle architecture.

The pipeline lowers a PBC circuit (Pauli rotations and measurements) to the
native instruction set of a line of logical processing units sharing magic
state factories, then estimates circuit failure probability with a
first-order union bound and circuit duration from the weighted instruction
DAG.
"""

__version__ = "0.1.0"
