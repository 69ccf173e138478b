"""Spin Calogero-Moser and rational spin Ruijsenaars systems for sl_n.

Exact lift-flow-project solvers on T*SL_n, reduced equations of motion,
Poisson brackets with a finite-difference oracle, action-angle variables
and the duality diagnostics between the two systems.
"""

from .errors import *  # noqa: F401,F403
from .phase_space import (  # noqa: F401
    POTENTIAL_SCALE,
    POTENTIAL_SIGN,
    CartanData,
    CMPoint,
    Convention,
    OrbitTag,
    RSPoint,
    RSReducedPoint,
    SpinMatrix,
    TStarGPoint,
)

__version__ = "0.1.0"
