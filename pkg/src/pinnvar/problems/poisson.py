"""1D Poisson benchmark: -u_xx = 4x^2 sin(x^2) - 2 cos(x^2) on [-2*sqrt(pi), 2*sqrt(pi)].

Boundary values u = 1 at both ends are built into the ansatz, so training
only carries the residual term.  The exact solution is u = sin(x^2) + 1.
"""

from __future__ import annotations

import math

import numpy as np

from .. import autodiff as ad
from .. import net as nets
from .base import Domain, Problem, TrainDefaults

__all__ = [
    "HALF_WIDTH",
    "PoissonProblem",
    "poisson_source",
    "poisson_ansatz",
    "poisson_residual",
    "poisson_reference",
]

HALF_WIDTH = 2.0 * math.sqrt(math.pi)  # domain is [-HALF_WIDTH, HALF_WIDTH]


def poisson_source(x):
    """4 x^2 sin(x^2) - 2 cos(x^2), elementwise and differentiable."""
    x2 = ad.mul(x, x)
    return ad.sub(
        ad.mul(4.0, ad.mul(x2, ad.sin(x2))),
        ad.mul(2.0, ad.cos(x2)),
    )


def _ansatz_from_net_output(raw, x):
    # u = 1 + (4*pi - x^2) / (4*pi) * N(x); the factor vanishes at the ends
    x2 = ad.mul(x, x)
    dist = ad.div(ad.sub(4.0 * math.pi, x2), 4.0 * math.pi)
    return ad.add(1.0, ad.mul(dist, raw))


def poisson_reference(x):
    """Exact solution u = sin(x^2) + 1."""
    xa = np.asarray(x, dtype=np.float64)
    out = np.sin(xa * xa) + 1.0
    return float(out) if np.ndim(x) == 0 else out


def poisson_ansatz(network, x):
    """Boundary-exact prediction for a DenseNetwork at scalar or array x."""
    layers = list(zip(network.weights, network.biases))
    scalar = np.ndim(ad.value_of(x)) == 0 and not isinstance(x, ad.Var)
    col = np.atleast_1d(np.asarray(ad.value_of(x), dtype=np.float64)) \
        if not isinstance(x, ad.Var) else x
    u = _ansatz_from_net_output(nets.forward_batch(layers, [col]), col)
    if scalar:
        return float(ad.value_of(u)[0])
    return u


def poisson_residual(network, x):
    """r(x) = u_xx + source(x) for the ansatz-wrapped network."""
    problem = PoissonProblem()
    layers = [list(zip(network.weights, network.biases))]
    scalar = np.ndim(x) == 0
    col = np.atleast_1d(np.asarray(x, dtype=np.float64))
    (r,) = problem.residual_batch(layers, [col])
    rv = ad.value_of(r)
    return float(rv[0]) if scalar else r


class PoissonProblem(Problem):
    name = "poisson"
    domain = Domain.interval(-HALF_WIDTH, HALF_WIDTH)
    field_names = ["u"]
    residual_names = ["pde"]
    field_dims = [[1, 20, 20, 20, 20, 20, 1]]
    defaults = TrainDefaults(iterations=4000, n_f=100,
                             sampling="equispaced", log_every=100)

    def field_fns(self, layers_per_field):
        (layers,) = layers_per_field

        def u_of(cols):
            (x,) = cols
            return _ansatz_from_net_output(nets.forward_batch(layers, [x]), x)

        return [u_of]

    def residual_from_field(self, u_of, cols):
        """Residual given any differentiable field u(cols)."""
        (x,) = cols
        xa = ad.value_of(x)
        ones = np.ones(np.shape(xa))
        with ad.Tape() as outer:
            xv = x if isinstance(x, ad.Var) else outer.variable(xa)
            with ad.Tape() as inner:
                u = u_of([xv])
            # seeding with ones differentiates the sum; u_i depends on x_i only
            (u_x,) = inner.gradient(u, [xv], seed=ones)
        (u_xx,) = outer.gradient(u_x, [xv], seed=ones)
        return [ad.add(u_xx, poisson_source(x))]

    def residual_batch(self, layers_per_field, cols):
        (u_of,) = self.field_fns(layers_per_field)
        return self.residual_from_field(u_of, cols)

    def predict_fields(self, layers_per_field, points):
        (u_of,) = self.field_fns(layers_per_field)
        (x,) = self.grid_columns(points)
        return {"u": np.asarray(ad.value_of(u_of([x])))}

    def reference_fields(self, points):
        (x,) = self.grid_columns(points)
        return {"u": poisson_reference(x)}

    def eval_grid(self, n=1001):
        return np.linspace(-HALF_WIDTH, HALF_WIDTH, n)

    def boundary_samples(self, n, seed=0):
        pts = np.empty(n)
        pts[0::2] = -HALF_WIDTH
        pts[1::2] = HALF_WIDTH
        return pts
