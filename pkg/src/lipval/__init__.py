"""Valuations on Lipschitz functions on the circle: exact PL arithmetic,
kernel valuations, kernel recovery from saws and the associated measures."""
from __future__ import annotations

__version__ = "0.1.0"
