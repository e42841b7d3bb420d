"""2D linear elasticity on the unit square with a manufactured solution.

Five networks approximate (u_x, u_y, sigma_xx, sigma_yy, sigma_xy).  The
residuals are the two momentum-balance equations plus the three constitutive
mismatches, with strains taken from the displacement networks.  Essential
conditions are built into each field through a lift-plus-distance transform;
the only field left unconstrained is sigma_xy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from .. import net as nets
from .base import Domain, Problem, TrainDefaults

__all__ = [
    "ElasticityParams",
    "ElasticityProblem",
    "elasticity_ansatz",
    "elasticity_body_force",
    "elasticity_residuals",
    "manufactured_displacements",
    "manufactured_fields",
]

PI = math.pi


@dataclass(frozen=True)
class ElasticityParams:
    lam: float = 1.0
    mu: float = 0.5
    q: float = 4.0


def elasticity_body_force(x, y, p=ElasticityParams()):
    """(f_x, f_y) of the manufactured problem, differentiable elementwise."""
    lam, mu, q = p.lam, p.mu, p.q
    sx = ad.sin(ad.mul(PI, x))
    cx = ad.cos(ad.mul(PI, x))
    sy = ad.sin(ad.mul(PI, y))
    cy = ad.cos(ad.mul(PI, y))
    s2x = ad.sin(ad.mul(2.0 * PI, x))
    c2x = ad.cos(ad.mul(2.0 * PI, x))
    y2 = ad.mul(y, y)
    y3 = ad.mul(y2, y)
    y4 = ad.mul(y3, y)
    fx = ad.add(
        ad.mul(lam, ad.sub(
            ad.mul(4.0 * PI * PI, ad.mul(c2x, sy)),
            ad.mul(PI * q, ad.mul(cx, y3)),
        )),
        ad.mul(mu, ad.sub(
            ad.mul(9.0 * PI * PI, ad.mul(c2x, sy)),
            ad.mul(PI * q, ad.mul(cx, y3)),
        )),
    )
    fy = ad.add(
        ad.mul(lam, ad.add(
            ad.mul(-3.0 * q, ad.mul(sx, y2)),
            ad.mul(2.0 * PI * PI, ad.mul(s2x, cy)),
        )),
        ad.mul(mu, ad.add(
            ad.add(
                ad.mul(-6.0 * q, ad.mul(sx, y2)),
                ad.mul(2.0 * PI * PI, ad.mul(s2x, cy)),
            ),
            ad.mul(PI * PI * q / 4.0, ad.mul(sx, y4)),
        )),
    )
    return fx, fy


def manufactured_displacements(x, y, p=ElasticityParams()):
    """u_x = cos(2 pi x) sin(pi y), u_y = sin(pi x) Q y^4 / 4."""
    ux = ad.mul(ad.cos(ad.mul(2.0 * PI, x)), ad.sin(ad.mul(PI, y)))
    y4 = ad.mul(ad.mul(y, y), ad.mul(y, y))
    uy = ad.mul(p.q / 4.0, ad.mul(ad.sin(ad.mul(PI, x)), y4))
    return ux, uy


def manufactured_fields(x, y, p=ElasticityParams()):
    """All five reference fields (numpy closed forms)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    ux = np.cos(2 * PI * x) * np.sin(PI * y)
    uy = np.sin(PI * x) * p.q * y ** 4 / 4.0
    exx = -2 * PI * np.sin(2 * PI * x) * np.sin(PI * y)
    eyy = np.sin(PI * x) * p.q * y ** 3
    exy = 0.5 * (PI * np.cos(2 * PI * x) * np.cos(PI * y)
                 + PI * np.cos(PI * x) * p.q * y ** 4 / 4.0)
    tr = exx + eyy
    return {
        "u_x": ux,
        "u_y": uy,
        "sigma_xx": p.lam * tr + 2 * p.mu * exx,
        "sigma_yy": p.lam * tr + 2 * p.mu * eyy,
        "sigma_xy": 2 * p.mu * exy,
    }


def _columns(x, y):
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    xc = np.atleast_1d(np.asarray(x, dtype=np.float64))
    yc = np.atleast_1d(np.asarray(y, dtype=np.float64))
    return scalar, xc, yc


def elasticity_ansatz(networks, x, y, p=ElasticityParams()):
    """Condition-exact (u_x, u_y, sigma_xx, sigma_yy, sigma_xy) values.

    networks: five DenseNetworks; scalar (x, y) returns five floats, arrays
    return five value columns.
    """
    problem = ElasticityProblem(p)
    layers = [list(zip(n.weights, n.biases)) for n in networks]
    scalar, xc, yc = _columns(x, y)
    vals = [fn([xc, yc]) for fn in problem.field_fns(layers)]
    if scalar:
        return [float(np.asarray(ad.value_of(v))[0]) for v in vals]
    return vals


def elasticity_residuals(networks, x, y, p=ElasticityParams()):
    """Momentum and constitutive residuals for ansatz-wrapped networks."""
    problem = ElasticityProblem(p)
    layers = [list(zip(n.weights, n.biases)) for n in networks]
    scalar, xc, yc = _columns(x, y)
    residuals = problem.residual_batch(layers, [xc, yc])
    if scalar:
        return [float(np.asarray(ad.value_of(r))[0]) for r in residuals]
    return residuals


class ElasticityProblem(Problem):
    name = "elasticity"
    domain = Domain.rectangle((0.0, 1.0), (0.0, 1.0))
    field_names = ["u_x", "u_y", "sigma_xx", "sigma_yy", "sigma_xy"]
    residual_names = ["momentum_x", "momentum_y",
                      "constitutive_xx", "constitutive_yy", "constitutive_xy"]
    field_dims = [[2, 20, 20, 20, 20, 20, 1]] * 5
    defaults = TrainDefaults(iterations=40000, n_f=2500,
                             sampling="uniform-random", log_every=500)

    def __init__(self, params=ElasticityParams()):
        self.params = params

    def field_fns(self, layers_per_field):
        """Ansatz transforms; only sigma_xy is a bare network output."""
        p = self.params
        lu_x, lu_y, ls_xx, ls_yy, ls_xy = layers_per_field

        def disp_distance(x, y):
            return ad.mul(
                ad.mul(x, ad.sub(1.0, x)),
                ad.mul(y, ad.sub(1.0, y)),
            )

        def u_x(cols):
            x, y = cols
            raw = nets.forward_batch(lu_x, [x, y])
            return ad.add(ad.sin(ad.mul(PI, y)),
                          ad.mul(disp_distance(x, y), raw))

        def u_y(cols):
            x, y = cols
            raw = nets.forward_batch(lu_y, [x, y])
            return ad.add(ad.mul(y, ad.sin(ad.mul(PI, x))),
                          ad.mul(disp_distance(x, y), raw))

        def sigma_xx(cols):
            x, y = cols
            raw = nets.forward_batch(ls_xx, [x, y])
            return ad.mul(ad.mul(x, ad.sub(1.0, x)), raw)

        def sigma_yy(cols):
            x, y = cols
            raw = nets.forward_batch(ls_yy, [x, y])
            y3 = ad.mul(ad.mul(y, y), y)
            lift = ad.mul((p.lam + 2.0 * p.mu) * p.q,
                          ad.mul(y3, ad.sin(ad.mul(PI, x))))
            return ad.add(lift, ad.mul(ad.mul(y, ad.sub(1.0, y)), raw))

        def sigma_xy(cols):
            x, y = cols
            return nets.forward_batch(ls_xy, [x, y])

        return [u_x, u_y, sigma_xx, sigma_yy, sigma_xy]

    def residual_from_fields(self, field_fns, cols):
        """The five residuals for arbitrary differentiable fields."""
        p = self.params
        x, y = cols
        ones = np.ones(np.shape(ad.value_of(x)))
        with ad.Tape() as tape:
            xv = x if isinstance(x, ad.Var) else tape.variable(ad.value_of(x))
            yv = y if isinstance(y, ad.Var) else tape.variable(ad.value_of(y))
            vals = [fn([xv, yv]) for fn in field_fns]
        ux, uy, sxx, syy, sxy = vals
        # ones-seeded reverse passes: field value i depends only on point i
        d = [tape.gradient(v, [xv, yv], seed=ones) for v in vals]
        (ux_x, ux_y), (uy_x, uy_y) = d[0], d[1]
        sxx_x = d[2][0]
        syy_y = d[3][1]
        sxy_x, sxy_y = d[4]
        fx, fy = elasticity_body_force(x, y, p)
        exx, eyy = ux_x, uy_y
        exy = ad.mul(0.5, ad.add(ux_y, uy_x))
        tr = ad.add(exx, eyy)
        r_mom_x = ad.add(ad.add(sxx_x, sxy_y), fx)
        r_mom_y = ad.add(ad.add(sxy_x, syy_y), fy)
        r_cxx = ad.sub(sxx, ad.add(ad.mul(p.lam, tr), ad.mul(2.0 * p.mu, exx)))
        r_cyy = ad.sub(syy, ad.add(ad.mul(p.lam, tr), ad.mul(2.0 * p.mu, eyy)))
        r_cxy = ad.sub(sxy, ad.mul(2.0 * p.mu, exy))
        return [r_mom_x, r_mom_y, r_cxx, r_cyy, r_cxy]

    def residual_batch(self, layers_per_field, cols):
        return self.residual_from_fields(self.field_fns(layers_per_field), cols)

    def predict_fields(self, layers_per_field, points):
        x, y = self.grid_columns(points)
        fns = self.field_fns(layers_per_field)
        return {
            name: np.asarray(ad.value_of(fn([x, y])))
            for name, fn in zip(self.field_names, fns)
        }

    def reference_fields(self, points):
        x, y = self.grid_columns(points)
        return manufactured_fields(x, y, self.params)

    def body_force_fields(self, points):
        x, y = self.grid_columns(points)
        fx, fy = elasticity_body_force(x, y, self.params)
        return {"f_x": np.asarray(ad.value_of(fx)),
                "f_y": np.asarray(ad.value_of(fy))}

    def eval_grid(self, nx=101, ny=101):
        xs = np.linspace(0.0, 1.0, nx)
        ys = np.linspace(0.0, 1.0, ny)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])

    def boundary_samples(self, n, seed=0):
        rng = np.random.default_rng(seed)
        pts = np.empty((n, 2))
        side = rng.integers(0, 4, size=n)
        s = rng.uniform(0.0, 1.0, size=n)
        pts[:, 0] = np.select(
            [side == 0, side == 1], [np.zeros(n), np.ones(n)], default=s)
        pts[:, 1] = np.select(
            [side == 2, side == 3], [np.zeros(n), np.ones(n)], default=s)
        return pts
