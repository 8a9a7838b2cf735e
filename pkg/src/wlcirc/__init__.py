"""Weisfeiler-Leman refinement, coherent configurations and circulant schemes."""

from __future__ import annotations

__version__ = "0.1.0"
