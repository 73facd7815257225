"""Exact truncated p-adic algebra for delta-rings, envelopes and p-connections."""

from .scalars import PrecisionProfile, RationalScalar
from .polyalg import FormVector, PdPoly, PdRing, render

__all__ = ["PrecisionProfile", "RationalScalar", "PdRing", "PdPoly", "FormVector", "render"]
