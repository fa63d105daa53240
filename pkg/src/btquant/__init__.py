"""Exact Berezin-Toeplitz quantization of complex projective space."""

__version__ = "0.1.0"
