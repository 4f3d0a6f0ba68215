"""Exact LP decoding, dual witnesses and edge-weight bounds for LDPC codes."""

__version__ = "0.1.0"
