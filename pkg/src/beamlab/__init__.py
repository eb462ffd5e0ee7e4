"""Spectral-Galerkin simulation and stability certification for the nonlinear hinged beam

    u_tt + u_xxxx + f(u) = g(x, t)   on (0, pi),   u = u_xx = 0 at both ends.
"""

from .certificates import (
    CertStatus,
    ErrorCertificate,
    build_certificate,
    certify,
    lipschitz_constant,
    mode_error_bound,
    solution_bound_M,
    specialized_positive_part_bound,
)
from .config import ExperimentConfig
from .dynamics import (
    ModalForcing,
    ModalState,
    Trajectory,
    assemble_rhs,
    energy,
    explicit_first_mode_solution,
    integrate,
    remainder_bound,
)
from .errors import (
    BeamlabError,
    BracketError,
    ConfigError,
    IntegrationError,
    MismatchError,
    NoPrevailingModeError,
    ResourceLimitError,
)
from .spectral import (
    CubicCouplingTensor,
    Kind,
    NonlinearitySpec,
    build_cubic_tensor,
    influence_set,
    project_nonlinearity,
    quadruple_sine_integral,
)
from .stability import (
    PrevailingConfig,
    StabilityVerdict,
    Status,
    classify_prevailing,
    detect_instability,
    running_sup,
    threshold_search,
)

__version__ = "0.1.0"
