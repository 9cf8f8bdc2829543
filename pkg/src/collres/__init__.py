"""Collision maps of a few-level system bombarded by thermal particles.

Builds the per-collision superoperator from scattering amplitudes, checks
its thermodynamic properties and computes dynamics and steady states under
Poissonian collisions.
"""

__version__ = "0.1.0"
