"""Small numpy network stack: MLPs, attention, policy heads, Adam."""

from .attention import MultiHeadAttention
from .checkpoint import load_tensors, save_tensors
from .distributions import (BetaHead, GaussianHead, beta_entropy, beta_log_prob, beta_sample,
                            gaussian_log_prob, gaussian_sample)
from .gradcheck import GradCheckReport, grad_check, numeric_grad
from .mlp import Mlp
from .optim import Adam, clip_grad_norm

__all__ = [
    "Adam", "BetaHead", "GaussianHead", "GradCheckReport", "Mlp", "MultiHeadAttention",
    "beta_entropy", "beta_log_prob", "beta_sample", "clip_grad_norm", "gaussian_log_prob",
    "gaussian_sample", "grad_check", "load_tensors", "numeric_grad", "save_tensors",
]
