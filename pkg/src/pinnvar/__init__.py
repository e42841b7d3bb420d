"""Variance-regularized PINN training engine and experiment harness."""

__version__ = "0.1.0"

from . import autodiff, loss, net, optim, problems, trainer  # noqa: F401
