"""Numerical laboratory for level sets of the cubic lattice dispersion.

Closed-form curvature fields, watertight level-set meshes, the
zero-curvature curve and its tangential points, oscillatory surface
integrals with decay-rate fits, and resolvent denominator integrals with
small-eta scaling sweeps.
"""

__version__ = "0.1.0"

from . import (cache, cli, curvegeom, denominators, dispersion, errors,
               fitting, levelset, oscillatory, torus)

__all__ = [
    "cache", "cli", "curvegeom", "denominators", "dispersion", "errors",
    "fitting", "levelset", "oscillatory", "torus", "__version__",
]
