"""Alpha-GAN: CPE-loss GANs, Arimoto divergences, estimation bounds and the 7-bit toy experiment."""

from .losses import (AlphaParam, CpeLoss, LinkFunction, MarginLoss, alpha_cpe, alpha_loss,
                     check_equilibrium_condition, cpe_from_margin, f_from_margin, margin_from_cpe, sigmoid_link)
from .divergences import (DiscreteDist, align, arimoto, f_divergence, gamma_alpha, inner_sup_bruteforce, jsd,
                          jsd_tvd_bound_slack, optimal_discriminator, sandwich_slack, sq_hellinger, tvd)
from .bounds import NetBoundParams, c_h, capacity_products, estimation_bound, estimation_bound_alpha
from .train import TrainConfig, evaluate_generator, sweep, train_alpha_gan

__version__ = "0.1.0"
