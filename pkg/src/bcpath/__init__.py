"""Heat kernels and resolvents of -1/2 d^2/dx^2 under self-adjoint boundary conditions.

The boundary condition is a unitary matrix U on boundary data; resolvents come
from Krein's formula (or closed forms), heat kernels from image sums, the
eigensum or contour inversion, and path-wise cases from Monte Carlo.
"""
from .bc import (CATALOG, BoundaryData, BoundaryUnitary, Custom, DeltaPoint, Dirichlet, Domain,
                 NamedBC, Neumann, Periodic, PseudoPeriodic, QuasiPeriodic, Robin, bc_residual,
                 parse_bc, satisfies_bc, to_unitary)
from .errors import *  # noqa: F401,F403
from .path_mc import (McConfig, McEstimate, mc_dirichlet_kernel, mc_neumann_kernel,
                      mc_winding_kernel)
from .propagator import (HeatKernelEval, WavePacket, evolve_packet, forward_laplace_check,
                         free_kernel, gaussian_packet, image_kernel, image_sum_kernel,
                         inverse_laplace_kernel, inverse_laplace_kernel_eval, spectral_kernel)
from .resolvent import (BoundStateReport, ResolventEval, background_resolvent,
                        closed_form_resolvent, find_bound_states, krein_correction,
                        krein_resolvent)
from .spectral import EigenPair, Spectrum, secular_matrix, solve_spectrum, spectral_heat_kernel

__version__ = "0.1.0"
