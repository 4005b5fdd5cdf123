"""Finite-level computations in cyclotomic Z_p-towers of real abelian fields."""

from __future__ import annotations

__version__ = "0.1.0"
