"""Viscous Burgers benchmark on [-1, 1] x [0, 1] with nu = 0.01/pi.

The ansatz u = -sin(pi x) + t (1 - x^2) N(x, t) satisfies the initial
condition and both wall conditions identically.  The reference solution is
the Cole-Hopf integral ratio evaluated with Gauss-Hermite quadrature.
"""

from __future__ import annotations

import math

import numpy as np

from .. import autodiff as ad
from .. import net as nets
from .base import Domain, Problem, TrainDefaults

__all__ = [
    "VISCOSITY",
    "BurgersProblem",
    "burgers_ansatz",
    "burgers_residual",
    "burgers_reference",
]

VISCOSITY = 0.01 / math.pi

# Default quadrature resolution; escalated near the shock where the
# integrands get stiff.
DEFAULT_NODES = 100
SHOCK_NODES = 200


def _ansatz_from_net_output(raw, x, t):
    lift = ad.neg(ad.sin(ad.mul(math.pi, x)))
    dist = ad.mul(t, ad.sub(1.0, ad.mul(x, x)))
    return ad.add(lift, ad.mul(dist, raw))


def burgers_ansatz(network, x, t):
    """Condition-exact prediction for a DenseNetwork at scalar or array (x, t)."""
    layers = list(zip(network.weights, network.biases))
    scalar = np.ndim(x) == 0 and np.ndim(t) == 0
    xc = np.atleast_1d(np.asarray(x, dtype=np.float64))
    tc = np.atleast_1d(np.asarray(t, dtype=np.float64))
    u = _ansatz_from_net_output(nets.forward_batch(layers, [xc, tc]), xc, tc)
    return float(ad.value_of(u)[0]) if scalar else u


def burgers_residual(network, x, t):
    """r(x, t) = u_t + u u_x - nu u_xx for the ansatz-wrapped network."""
    problem = BurgersProblem()
    layers = [list(zip(network.weights, network.biases))]
    scalar = np.ndim(x) == 0 and np.ndim(t) == 0
    xc = np.atleast_1d(np.asarray(x, dtype=np.float64))
    tc = np.atleast_1d(np.asarray(t, dtype=np.float64))
    (r,) = problem.residual_batch(layers, [xc, tc])
    rv = ad.value_of(r)
    return float(rv[0]) if scalar else r


from functools import lru_cache


@lru_cache(maxsize=8)
def _hermgauss(nodes):
    return np.polynomial.hermite.hermgauss(nodes)


def _quadrature_u(x, t, nodes):
    """Cole-Hopf ratio at scalar (x, t > 0) with an n-node Hermite rule."""
    z, w = _hermgauss(nodes)
    eta = 2.0 * math.sqrt(VISCOSITY * t) * z
    # f(y) = exp(-cos(pi y) / (2 pi nu)); keep exponents shifted for safety
    expo = -np.cos(math.pi * (x - eta)) / (2.0 * math.pi * VISCOSITY)
    expo -= expo.max()
    weights = w * np.exp(expo)
    den = weights.sum()
    if den <= 0.0 or not np.isfinite(den):
        raise ArithmeticError(
            f"degenerate Cole-Hopf denominator at (x={x}, t={t})"
        )
    num = (np.sin(math.pi * (x - eta)) * weights).sum()
    return -num / den


def burgers_reference(x, t, nodes=None):
    """Reference u(x, t); the t = 0 slice falls back to the initial condition."""
    if np.ndim(x) == 0 and np.ndim(t) == 0:
        if t < 0.0:
            raise ValueError("t must be >= 0")
        if t == 0.0:
            return -math.sin(math.pi * x)
        n = nodes
        if n is None:
            n = SHOCK_NODES if (t >= 0.75 and abs(x) <= 0.05) else DEFAULT_NODES
        if n < 32:
            raise ValueError("need at least 32 quadrature nodes")
        return _quadrature_u(float(x), float(t), n)
    xa, ta = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
    shape = xa.shape
    xa, ta = xa.ravel(), ta.ravel()
    if np.any(ta < 0.0):
        raise ValueError("t must be >= 0")
    out = np.empty(xa.shape)
    initial = ta == 0.0
    out[initial] = -np.sin(np.pi * xa[initial])
    if nodes is None:
        shock = (~initial) & (ta >= 0.75) & (np.abs(xa) <= 0.05)
        groups = [(~initial & ~shock, DEFAULT_NODES), (shock, SHOCK_NODES)]
    else:
        if nodes < 32:
            raise ValueError("need at least 32 quadrature nodes")
        groups = [(~initial, nodes)]
    for mask, n in groups:
        if not mask.any():
            continue
        out[mask] = _quadrature_batch(xa[mask], ta[mask], n)
    return out.reshape(shape)


def _quadrature_batch(xs, ts, nodes):
    """Vectorized Cole-Hopf evaluation: points along axis 0, nodes along 1."""
    z, w = _hermgauss(nodes)
    eta = 2.0 * np.sqrt(VISCOSITY * ts)[:, None] * z[None, :]
    arg = np.pi * (xs[:, None] - eta)
    expo = -np.cos(arg) / (2.0 * np.pi * VISCOSITY)
    expo -= expo.max(axis=1, keepdims=True)
    weights = w[None, :] * np.exp(expo)
    den = weights.sum(axis=1)
    if np.any(den <= 0.0) or not np.all(np.isfinite(den)):
        raise ArithmeticError("degenerate Cole-Hopf denominator in batch")
    num = (np.sin(arg) * weights).sum(axis=1)
    return -num / den


class BurgersProblem(Problem):
    name = "burgers"
    domain = Domain.space_time((-1.0, 1.0), (0.0, 1.0))
    field_names = ["u"]
    residual_names = ["pde"]
    field_dims = [[2, 20, 20, 20, 20, 20, 1]]
    defaults = TrainDefaults(iterations=5000, n_f=10000,
                             sampling="uniform-random", log_every=100)

    def field_fns(self, layers_per_field):
        (layers,) = layers_per_field

        def u_of(cols):
            x, t = cols
            return _ansatz_from_net_output(
                nets.forward_batch(layers, [x, t]), x, t
            )

        return [u_of]

    def residual_from_field(self, u_of, cols):
        x, t = cols
        ones = np.ones(np.shape(ad.value_of(x)))
        with ad.Tape() as outer:
            xv = x if isinstance(x, ad.Var) else outer.variable(ad.value_of(x))
            tv = t if isinstance(t, ad.Var) else outer.variable(ad.value_of(t))
            with ad.Tape() as inner:
                u = u_of([xv, tv])
            # ones-seeded reverse pass: u_i depends only on (x_i, t_i)
            u_x, u_t = inner.gradient(u, [xv, tv], seed=ones)
        (u_xx,) = outer.gradient(u_x, [xv], seed=ones)
        conv = ad.mul(u, u_x)
        return [ad.sub(ad.add(u_t, conv), ad.mul(VISCOSITY, u_xx))]

    def residual_batch(self, layers_per_field, cols):
        (u_of,) = self.field_fns(layers_per_field)
        return self.residual_from_field(u_of, cols)

    def predict_fields(self, layers_per_field, points):
        (u_of,) = self.field_fns(layers_per_field)
        x, t = self.grid_columns(points)
        return {"u": np.asarray(ad.value_of(u_of([x, t])))}

    def reference_fields(self, points):
        x, t = self.grid_columns(points)
        return {"u": burgers_reference(x, t)}

    def eval_grid(self, nx=256, nt=101):
        xs = np.linspace(-1.0, 1.0, nx)
        ts = np.linspace(0.0, 1.0, nt)
        gx, gt = np.meshgrid(xs, ts, indexing="ij")
        return np.column_stack([gx.ravel(), gt.ravel()])

    def boundary_samples(self, n, seed=0):
        """Samples on the walls and the initial slice."""
        rng = np.random.default_rng(seed)
        pts = np.empty((n, 2))
        which = rng.integers(0, 3, size=n)
        xs = rng.uniform(-1.0, 1.0, size=n)
        ts = rng.uniform(0.0, 1.0, size=n)
        pts[:, 0] = np.where(which == 0, -1.0, np.where(which == 1, 1.0, xs))
        pts[:, 1] = np.where(which == 2, 0.0, ts)
        return pts
