"""Numerical toolkit for harmonic maps between sub-Riemannian spaces.

Targets are Lie groups with left-invariant sub-Riemannian structures; domains
are uniform grids carrying a frame of a distribution and a density.
"""

from .algebra import (
    LeftInvariantStructure,
    LieAlgebra,
    abelian_structure,
    ad_matrix,
    ad_star,
    bracket,
    flat,
    group_inverse,
    group_log_of_quotient,
    group_multiply,
    heisenberg_algebra,
    jacobi_defect,
    sharp,
    so3_algebra,
)
from .domain import (
    GridDomain,
    delta_D,
    divergence,
    frame_derivative,
    l2_inner,
    l2_norm,
    sub_laplacian,
    taming_metric,
)
from .errors import (
    HorizontalityError,
    InputError,
    NoCertificateSpaceError,
    NumericalError,
    SRHarmonicError,
    UnsupportedGroupError,
)
from .forms import (
    AlgebraValuedForm,
    L_alpha,
    L_alpha_star,
    darboux_derivative,
    energy,
    exterior_derivative,
    form_bracket,
    horizontality_residual,
    maurer_cartan_residual,
    restrict,
    variation,
)
from .geodesics import Trajectory, heisenberg_geodesic_closed_form, shoot_abnormal, shoot_normal
from .heisenberg import HeisenbergMap, harmonic_residual, recover_Y, theta_pullback
from .variational import (
    Certificate,
    Regularity,
    abnormal_certificate,
    assemble_P_differential,
    classify_regularity,
    energy_gradient_check,
    normal_certificate,
    strong_bracket_check,
    strong_bracket_solve,
)

__version__ = "0.1.0"
