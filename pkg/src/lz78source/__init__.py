"""LZ78 probability source: sampling, exact scoring, limits and baselines."""

from .baselines import Ctw, CtwModel, Lz78Spa, MarkovPlugin, spa_log_loss
from .curves import CurveSeries, log_checkpoints
from .empirical import eta_star, mu_k, tuple_counts
from .lz_source import GenerationTrace, SequenceRecord, compression_ratio, generate, score
from .prior import Atoms, Dirichlet, Mixture, dirac_dirichlet, expected_entropy, parse_prior
from .theory import MarkovLaw, limits

__version__ = "0.1.0"
