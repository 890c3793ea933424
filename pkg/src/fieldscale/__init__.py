"""Toolkit for scaling qualitative coding of field notes and interviews."""

__version__ = "0.1.0"
