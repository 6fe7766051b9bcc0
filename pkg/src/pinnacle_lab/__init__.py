"""pinnacle-lab: integer random surfaces with p-power gradient energies.

Subpackages map one-to-one onto the lab's concerns: ``lattice`` (height
configurations and energies), ``sampler`` (heat-bath chains and the monotone
coupling), ``oracle`` (exact tiny-box tables), ``harmonic`` (Dirichlet
pinnacles and the potential kernel), ``pvar`` (p-energy minimization and
nested contours), ``contours`` (level lines), ``asm`` (path families,
six-vertex states, alternating sign matrices), ``predict`` (tail rates and
the M/H/M* predictors), ``experiments`` (end-to-end runs), ``cli``.
"""

from .lattice import INFINITY, HeightConfig, ModelParams, energy_delta, hamiltonian

__all__ = [
    "INFINITY",
    "HeightConfig",
    "ModelParams",
    "energy_delta",
    "hamiltonian",
]
