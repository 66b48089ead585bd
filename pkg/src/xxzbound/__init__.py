"""Bound states and non-Markovian dynamics of a single excitation in an XXZ
chain coupled collectively to a zero-temperature bosonic reservoir."""

from .boundstates import (BoundState, SpectrumReport, branch_value, classify, find_bound_states,
                          isotropy, normalize_state, solve_uniform_state)
from .evolution import (Amplitudes, SiteExcitation, Trajectory, evolve_discrete_bath,
                        evolve_volterra, survival_probability)
from .model import (ChainSpec, Explicit, Quasirandom, ReservoirSpec, Uniform,
                    assemble_spin_matrix, build_field)
from .selfenergy import kappa, kernel, sigma

__version__ = "0.1.0"
