"""Exact and scaling-limit distance statistics for random quadrangulations with a boundary."""

from . import coding, genfun, sampler, scaling, series

__all__ = ["coding", "genfun", "sampler", "scaling", "series"]
__version__ = "0.1.0"
