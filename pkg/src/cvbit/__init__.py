"""Sign-binned quadrature bit correlations of two-mode continuous-variable states."""

from .bitcorr import AnglePair, CorrelationResult, optimize_q
from .catalog import FamilyParams, build, parse_family_spec
from .config import DEFAULT, Settings, load_settings
from .fock import FockDensityMatrix, FockPureState, e_fock, negativity_fock
from .gaussian import CovarianceMatrix, StandardForm, negativity_gaussian, q_gaussian_closed, standard_form

__version__ = "0.1.0"
