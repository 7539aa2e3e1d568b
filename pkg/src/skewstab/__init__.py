"""skewstab: exact non-archimedean dynamics of rational skew products.

Layers, bottom up:

* ``puiseux``: truncated Puiseux series over Q with explicit precision.
* ``roots``: Newton-polygon root expansion for polynomials over them.
* ``berkovich``: points of the projective Berkovich line, tree operations,
  multiplicities.
* ``skew``: local models of skew products and their pushforward action.
* ``vertexset``: vertex sets, convex hulls, smoothness, complement domains.
* ``intervalmap``: induced piecewise-linear dynamics on radius exponents.
* ``stability``: analytic stability checks and stabilisation procedures.
* ``cli``: command-line front end over definition files.
"""

from .puiseux import INF, PuiseuxPoly, Rat

__all__ = ["INF", "PuiseuxPoly", "Rat"]
__version__ = "0.1.0"
