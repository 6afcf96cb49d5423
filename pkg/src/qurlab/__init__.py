"""Numerical oracles for metric uncertainty relations, locking and related constructions."""

from . import extractor, gf, locking, mub, mur, qcext, quantum_core, wse

__all__ = ["gf", "quantum_core", "mub", "extractor", "mur", "locking", "qcext", "wse"]
__version__ = "0.1.0"
