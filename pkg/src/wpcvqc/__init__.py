"""Desk-scale simulation and verification suite for witness-preserving
classical verification of quantum computation."""

from . import compiler, cvqc, estimate, harness, qma, qsim, spa, tcf

__all__ = ["compiler", "cvqc", "estimate", "harness", "qma", "qsim", "spa",
           "tcf"]
__version__ = "0.1.0"
