"""Recovering PSNE sets of sparse linear influence games from noisy joint actions."""
from .errors import CapacityError, ConsistencyError, SolverError
from .estimator import (
    DesignMatrix,
    FitResult,
    SolverConfig,
    fit_game,
    fit_player,
    gradient,
    hessian,
    lambda_schedule,
    loss,
)
from .game_core import (
    Game,
    PsneSet,
    enumerate_psne,
    feature_vector,
    games_equivalent,
    generate_game,
    min_payoff_over_psne,
    payoff,
)
from .noise_models import (
    DistributionConstants,
    GlobalNoiseModel,
    LocalNoiseModel,
    constants_global,
    constants_local,
    pmf_global,
    pmf_local,
    sample,
)
from .theory import (
    TheoryConstants,
    build_fano_ensemble,
    compute_constants,
    fano_kl,
    fano_sample_bound,
    theorem1_window,
)

__version__ = "0.1.0"
