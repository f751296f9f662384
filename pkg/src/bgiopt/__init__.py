"""Permeable-surface flood intervention optimisation toolkit.

Couples a binary-encoded NSGA-II with a simplified raster flood engine to
place and size permeable zones across an urban catchment, scoring candidates
by direct damage cost per storm return period or by expected annual damage,
and quantifying front robustness and lifetime benefit-cost.
"""

__version__ = "0.1.0"
