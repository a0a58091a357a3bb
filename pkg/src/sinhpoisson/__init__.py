"""Mean-field solver and diagnostics for the asymmetric sinh-Poisson
equation on flat two-dimensional tori."""

from .torus import (
    Field,
    FieldFormatError,
    TorusGrid,
    dirichlet_energy,
    distance_to_point,
    green_convolve,
    inv_laplacian,
    laplacian,
    mu1,
    read_field,
    spectral_refine,
    write_field,
    zero_field,
)
from .model import (
    Parameters,
    TwoAtomMeasure,
    atoms_to_pair,
    functional_J,
    gradient_J,
    hessian_apply,
    hessian_rayleigh_min,
    mt_threshold,
)
from .region import (
    RegionSpec,
    Triangle,
    alpha_gamma,
    contains,
    parabola_x,
    parabola_y,
    triangles,
)
from .bubbles import BubbleSpec, bubble_u, bubble_v, downhill_endpoint, verify_expansions
from .minimax import (
    SolveRecord,
    SolverConfig,
    SolverError,
    continuation,
    mountain_pass,
    newton_refine,
)
from .analysis import (
    MassReport,
    analyze_field,
    densities,
    detect_candidates,
    identity_check,
    local_masses,
)

__version__ = "0.1.0"
