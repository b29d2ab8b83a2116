"""Coupled gradient flows on the 2-sphere and on loop groups.

Submodules
----------
groups      Lie group/algebra arithmetic for U(1) and SU(2), sampled loops
fields      radial-gauge connections, energies, holonomy, closure control
ymflow      gauge-corrected descent flow for connections
loops       heat flow on loops, loop Hessian, index/nullity
geodesics   closed-geodesic enumeration and the reduced connection Hessian
morse       mod-2 Morse-Bott chain complexes, coupling matrices, inversion
cascades    surface fixtures and cascade/hybrid shooting counters
storage     checkpoints, configs, CSV reports
cli         batch experiment runner

The energy-comparison constant between the two functionals under this
package's conventions (loops over [0, 2*pi], inner product -Re tr(XY)) is
C = 1/2; every report embeds it.
"""

ENERGY_RATIO_C = 0.5
LOOP_DOMAIN = "[0, 2*pi)"
INNER_PRODUCT = "-Re tr(XY)"

from .kernels import BACKEND  # noqa: E402,F401

__version__ = "0.1.0"
