"""Shared problem interface consumed by the trainer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Domain", "Problem", "TrainDefaults"]


@dataclass(frozen=True)
class Domain:
    """interval(a, b), rectangle(x_range, y_range) or space_time(x_range, t_range)."""

    kind: str
    ranges: tuple

    def __post_init__(self):
        if self.kind not in ("interval", "rectangle", "space_time"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        for a, b in self.ranges:
            if not a < b:
                raise ValueError("each range needs a < b")

    @property
    def dim(self):
        return len(self.ranges)

    @staticmethod
    def interval(a, b):
        return Domain("interval", ((float(a), float(b)),))

    @staticmethod
    def rectangle(x_range, y_range):
        return Domain("rectangle", (tuple(map(float, x_range)),
                                    tuple(map(float, y_range))))

    @staticmethod
    def space_time(x_range, t_range):
        return Domain("space_time", (tuple(map(float, x_range)),
                                     tuple(map(float, t_range))))


@dataclass(frozen=True)
class TrainDefaults:
    iterations: int
    n_f: int
    sampling: str
    log_every: int
    alpha: float = 0.8


class Problem:
    """One benchmark: fields, residual operators, ansatz and reference.

    Subclasses set name, domain, field_names, residual_names, field_dims
    and defaults, and implement residual_batch / predict_fields /
    reference_fields / eval_grid / boundary_samples.
    """

    name: str
    domain: Domain
    field_names: list
    residual_names: list
    field_dims: list
    defaults: TrainDefaults

    def residual_batch(self, layers_per_field, cols):
        """Residual vectors at a batch of points.

        layers_per_field: one list of (W, b) pairs per field network; cols:
        one 1-D value (array or Var) per coordinate.  Returns one value per
        residual operator.
        """
        raise NotImplementedError

    def predict_fields(self, layers_per_field, points):
        """Ansatz field values at plain points, as {field_name: array}."""
        raise NotImplementedError

    def reference_fields(self, points):
        """Reference solution values at plain points, as {field_name: array}."""
        raise NotImplementedError

    def eval_grid(self):
        """The evaluation grid as an (M, dim) array of points."""
        raise NotImplementedError

    def boundary_samples(self, n, seed=0):
        """Points on the essential-condition boundary, for ansatz checks."""
        raise NotImplementedError

    def grid_columns(self, points):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        return [np.ascontiguousarray(pts[:, j]) for j in range(pts.shape[1])]
