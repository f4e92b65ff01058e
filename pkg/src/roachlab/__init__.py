"""Numerical laboratory for an aggregation/dispersal reaction-diffusion model.

Three coupled fields: a slow population, a fast population and a pheromone.
The package provides stiff-robust time integration of the three-component
system and of its two-component cross-diffusion limit, linear stability of
constant states, pseudo-arclength continuation of steady branches with
bifurcation detection, and an epsilon-sweep harness for the fast-reaction
limit, all behind a small CLI.
"""

__version__ = "0.1.0"

from roachlab.model import ModelParams, SwitchingKind  # noqa: F401
from roachlab.grid import Grid  # noqa: F401
