"""Speckle reduction with a Fields-of-Experts prior solved by iPiano."""

__version__ = "0.1.0"

from .data_fidelity import (
    DataTermSpec,
    ProxError,
    ProxResult,
    clamp_observation,
    combined_energy,
    combined_prox,
    idiv_energy,
    idiv_prox,
    nakagami_energy,
    nakagami_prox,
)
from .filter_bank import BankFormatError, Filter, FilterBank, load_bank, substitute_bank, write_bank
from .foe_prior import (
    FoEPrior,
    convolve,
    convolve_adjoint,
    prior_energy,
    prior_gradient_u,
    prior_gradient_w,
    rho,
    rho_prime,
)
from .ipiano import CompositeProblem, SolverConfig, SolverError, SolveTrace, ipiano_solve
from .metrics import QualityReport, psnr, quality, ssim
from .models import SUBSTITUTE_LAMBDA_SCALE, assemble_model, bank_weights, despeckle, preset_weights
from .speckle import NoiseSpec, add_speckle, speckle_moments
