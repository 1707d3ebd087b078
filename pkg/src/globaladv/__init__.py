"""Global adversarial example pairs for small dense classifiers.

Modules: ``net`` (MLP, pair loss, gradients, model files), ``data`` (toy
datasets), ``attacks_local`` and ``attacks_global`` (gradient attacks),
``gev`` (extreme value fit), ``gevmcmc`` (GEV-guided sampler) and
``harness`` (campaigns and reports).
"""

from .attacks_global import AttackTrace, ExamplePair, GlobalAltConfig, g_attack
from .attacks_local import LocalAttackConfig, Region, clip, local_attack
from .data import DataConfig, Dataset, augment_meaningless, generate
from .gev import GevParams, gev_cdf, gev_fit_mle, gev_pdf
from .gevmcmc import McmcConfig, run_gevmcmc
from .harness import Campaign, CampaignReport, compare_methods, execute_campaign, export_report, run_campaign
from .net import Network, TrainConfig, init_network, pair_loss, pair_loss_grad, predict_class
from .training import train

__version__ = "0.1.0"

__all__ = [
    "AttackTrace", "Campaign", "CampaignReport", "DataConfig", "Dataset", "ExamplePair", "GevParams",
    "GlobalAltConfig", "LocalAttackConfig", "McmcConfig", "Network", "Region", "TrainConfig",
    "augment_meaningless", "clip", "compare_methods", "execute_campaign", "export_report", "g_attack",
    "generate", "gev_cdf", "gev_fit_mle", "gev_pdf", "init_network", "local_attack", "pair_loss", "pair_loss_grad",
    "predict_class", "run_campaign", "run_gevmcmc", "train",
]
