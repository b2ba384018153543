"""Grid data types and discrete operators for the registration engine.

All arrays are indexed ``[row, col]``.  Vector quantities keep the row-axis
component in channel 0 and the column-axis component in channel 1.
Coordinates are pixel indices with unit spacing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class FieldError(ValueError):
    """Raised for non-finite data or mismatched geometries."""


@dataclass(frozen=True)
class GridGeometry:
    """Rectangular pixel grid; differential operators need >= 2 samples per axis."""

    height: int
    width: int
    spacing: float = 1.0

    def __post_init__(self) -> None:
        if self.height < 2 or self.width < 2:
            raise FieldError(
                f"grid must be at least 2x2, got {self.height}x{self.width}"
            )
        if self.spacing <= 0:
            raise FieldError(f"grid spacing must be positive, got {self.spacing}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)


def _frozen_array(values, shape, what: str) -> np.ndarray:
    out = np.array(values, dtype=np.float64, order="C")
    if out.shape != shape:
        raise FieldError(f"{what}: expected shape {shape}, got {out.shape}")
    if not np.all(np.isfinite(out)):
        raise FieldError(f"{what}: non-finite values")
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ScalarField:
    """Real-valued function sampled on the grid (image intensity or momentum)."""

    geometry: GridGeometry
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "values",
            _frozen_array(self.values, self.geometry.shape, "ScalarField"),
        )

    @classmethod
    def from_array(cls, values) -> "ScalarField":
        a = np.asarray(values, dtype=np.float64)
        if a.ndim != 2:
            raise FieldError(f"ScalarField: expected 2d array, got {a.ndim}d")
        return cls(GridGeometry(a.shape[0], a.shape[1]), a)

    @classmethod
    def zeros(cls, geometry: GridGeometry) -> "ScalarField":
        return cls(geometry, np.zeros(geometry.shape))


@dataclass(frozen=True)
class VectorField:
    """Two-component field; channel 0 is the row-axis component."""

    geometry: GridGeometry
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "values",
            _frozen_array(self.values, self.geometry.shape + (2,), "VectorField"),
        )

    @classmethod
    def from_array(cls, values) -> "VectorField":
        a = np.asarray(values, dtype=np.float64)
        if a.ndim != 3 or a.shape[2] != 2:
            raise FieldError(f"VectorField: expected HxWx2 array, got {a.shape}")
        return cls(GridGeometry(a.shape[0], a.shape[1]), a)

    @classmethod
    def zeros(cls, geometry: GridGeometry) -> "VectorField":
        return cls(geometry, np.zeros(geometry.shape + (2,)))


@dataclass(frozen=True)
class SampleGrid:
    """Per-pixel sample positions in pixel coordinates (a discrete map of the domain)."""

    geometry: GridGeometry
    coords: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "coords",
            _frozen_array(self.coords, self.geometry.shape + (2,), "SampleGrid"),
        )

    @classmethod
    def identity(cls, geometry: GridGeometry) -> "SampleGrid":
        return cls(geometry, identity_coords(geometry.shape))


def identity_coords(shape: tuple[int, int]) -> np.ndarray:
    ii, jj = np.meshgrid(
        np.arange(shape[0], dtype=np.float64),
        np.arange(shape[1], dtype=np.float64),
        indexing="ij",
    )
    return np.stack([ii, jj], axis=-1)


def _require_same_geometry(a, b) -> None:
    if a.geometry != b.geometry:
        raise FieldError(f"geometry mismatch: {a.geometry} vs {b.geometry}")


# --- finite differences -----------------------------------------------------
#
# Central differences at interior samples, one-sided at the two boundary
# lines of each axis (no ghost cells).  The *_adjoint functions are the exact
# transposes of the discrete operators; the hand-built gradient of the cost
# relies on that exactness.


def axis_diff(a: np.ndarray, axis: int) -> np.ndarray:
    return np.gradient(a, axis=axis)


def axis_diff_adjoint(gbar: np.ndarray, axis: int) -> np.ndarray:
    g = np.moveaxis(gbar, axis, 0)
    out = np.zeros_like(g)
    out[1] += g[0]
    out[0] -= g[0]
    out[-1] += g[-1]
    out[-2] -= g[-1]
    if g.shape[0] > 2:
        out[2:] += 0.5 * g[1:-1]
        out[:-2] -= 0.5 * g[1:-1]
    return np.moveaxis(out, 0, axis)


def gradient_arr(f: np.ndarray) -> np.ndarray:
    return np.stack([axis_diff(f, 0), axis_diff(f, 1)], axis=-1)


def gradient_adjoint_arr(gbar: np.ndarray) -> np.ndarray:
    return axis_diff_adjoint(gbar[..., 0], 0) + axis_diff_adjoint(gbar[..., 1], 1)


def divergence_arr(v: np.ndarray) -> np.ndarray:
    return axis_diff(v[..., 0], 0) + axis_diff(v[..., 1], 1)


def divergence_adjoint_arr(dbar: np.ndarray) -> np.ndarray:
    return np.stack(
        [axis_diff_adjoint(dbar, 0), axis_diff_adjoint(dbar, 1)], axis=-1
    )


def gradient(f: ScalarField) -> VectorField:
    """Discrete spatial gradient; exact for affine fields at interior samples."""
    return VectorField(f.geometry, gradient_arr(f.values))


def divergence(v: VectorField) -> ScalarField:
    """Discrete divergence, same stencils as `gradient` per component."""
    return ScalarField(v.geometry, divergence_arr(v.values))


# --- bilinear interpolation -------------------------------------------------
#
# Replicate-border policy: coordinates are clamped to the grid before
# interpolation.  The clamp is treated as piecewise constant in the adjoint
# (zero derivative once saturated).


class BilinearPlan(NamedTuple):
    """Precomputed corner indices and weights for one set of sample coordinates."""

    i0: np.ndarray
    j0: np.ndarray
    fy: np.ndarray
    fx: np.ndarray
    inside_y: np.ndarray
    inside_x: np.ndarray


def bilinear_plan(coords: np.ndarray, shape: tuple[int, int]) -> BilinearPlan:
    if not np.all(np.isfinite(coords)):
        raise FieldError("sample coordinates contain non-finite values")
    h, w = shape
    y = coords[..., 0]
    x = coords[..., 1]
    yc = np.clip(y, 0.0, float(h - 1))
    xc = np.clip(x, 0.0, float(w - 1))
    i0 = np.minimum(np.floor(yc).astype(np.intp), h - 2)
    j0 = np.minimum(np.floor(xc).astype(np.intp), w - 2)
    return BilinearPlan(
        i0=i0,
        j0=j0,
        fy=yc - i0,
        fx=xc - j0,
        inside_y=(y > 0.0) & (y < h - 1),
        inside_x=(x > 0.0) & (x < w - 1),
    )


def _corners(arr: np.ndarray, p: BilinearPlan):
    a = arr[p.i0, p.j0]
    b = arr[p.i0 + 1, p.j0]
    c = arr[p.i0, p.j0 + 1]
    d = arr[p.i0 + 1, p.j0 + 1]
    return a, b, c, d


def bilinear_apply(arr: np.ndarray, p: BilinearPlan) -> np.ndarray:
    a, b, c, d = _corners(arr, p)
    wy = 1.0 - p.fy
    wx = 1.0 - p.fx
    # Written so that sampling exactly at a node reproduces the value bitwise.
    return wy * wx * a + p.fy * wx * b + wy * p.fx * c + p.fy * p.fx * d


def bilinear_adjoint_values(
    p: BilinearPlan, gbar: np.ndarray, shape: tuple[int, int]
) -> np.ndarray:
    """Transpose of `bilinear_apply` with respect to the sampled array."""
    out = np.zeros(shape)
    wy = 1.0 - p.fy
    wx = 1.0 - p.fx
    np.add.at(out, (p.i0, p.j0), wy * wx * gbar)
    np.add.at(out, (p.i0 + 1, p.j0), p.fy * wx * gbar)
    np.add.at(out, (p.i0, p.j0 + 1), wy * p.fx * gbar)
    np.add.at(out, (p.i0 + 1, p.j0 + 1), p.fy * p.fx * gbar)
    return out


def bilinear_coord_grad(arr: np.ndarray, p: BilinearPlan):
    """Derivative of the interpolated value w.r.t. each sample coordinate."""
    a, b, c, d = _corners(arr, p)
    ddy = ((1.0 - p.fx) * (b - a) + p.fx * (d - c)) * p.inside_y
    ddx = ((1.0 - p.fy) * (c - a) + p.fy * (d - b)) * p.inside_x
    return ddy, ddx


def interpolate(f: ScalarField, at: SampleGrid) -> ScalarField:
    """Bilinear interpolation of f at the given sample positions (clamped)."""
    _require_same_geometry(f, at)
    p = bilinear_plan(at.coords, f.geometry.shape)
    return ScalarField(f.geometry, bilinear_apply(f.values, p))


def interpolate_vec(v: VectorField, at: SampleGrid) -> VectorField:
    _require_same_geometry(v, at)
    p = bilinear_plan(at.coords, v.geometry.shape)
    out = np.stack(
        [bilinear_apply(v.values[..., 0], p), bilinear_apply(v.values[..., 1], p)],
        axis=-1,
    )
    return VectorField(v.geometry, out)


# --- reductions -------------------------------------------------------------


def dot(f: ScalarField, g: ScalarField) -> float:
    """L2 inner product over the pixel grid."""
    _require_same_geometry(f, g)
    return float(np.sum(f.values * g.values))


def ssd(f: ScalarField, g: ScalarField) -> float:
    """Half the sum of squared differences over the grid."""
    _require_same_geometry(f, g)
    diff = f.values - g.values
    return 0.5 * float(np.sum(diff * diff))
