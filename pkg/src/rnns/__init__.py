"""RNNS: representation nearest-neighbor search attacks on code classifiers."""

__version__ = "0.1.0"
