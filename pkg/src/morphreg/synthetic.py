"""Synthetic test imagery: disks, annuli, the open 'C' ring, smooth random fields."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .fields import FieldError, GridGeometry, ScalarField, VectorField
from .kernel import GaussianKernel, smooth_arr


class ShapeKind(Enum):
    DISK = "disk"
    ANNULUS = "annulus"
    C_OPENING = "c"


@dataclass(frozen=True)
class ShapeSpec:
    """Geometric shape in pixel units.

    `orientation` is the direction (degrees, counter-clockwise from the
    +column axis) that the C opening faces; ignored for disks and annuli.
    """

    kind: ShapeKind
    center: tuple[float, float]
    outer: float
    inner: float = 0.0
    opening_angle: float = 70.0
    orientation: float = 0.0
    intensity: float = 1.0
    smoothing_sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.inner < 0 or self.outer < 0:
            raise FieldError("shape radii must be non-negative")
        if self.kind is not ShapeKind.DISK and self.inner >= self.outer:
            raise FieldError("annular shapes need inner < outer")
        if not 0.0 <= self.intensity <= 1.0:
            raise FieldError(f"intensity must lie in [0,1], got {self.intensity}")
        if self.smoothing_sigma < 0:
            raise FieldError("smoothing_sigma must be >= 0")


def render(spec: ShapeSpec, geometry: GridGeometry) -> ScalarField:
    """Rasterize the shape indicator, optionally anti-alias blurred."""
    ii, jj = np.meshgrid(
        np.arange(geometry.height, dtype=np.float64),
        np.arange(geometry.width, dtype=np.float64),
        indexing="ij",
    )
    dy = ii - spec.center[0]
    dx = jj - spec.center[1]
    rr = np.hypot(dy, dx)

    if spec.kind is ShapeKind.DISK:
        mask = rr < spec.outer
    elif spec.kind is ShapeKind.ANNULUS:
        mask = (rr >= spec.inner) & (rr < spec.outer)
    else:
        ring = (rr >= spec.inner) & (rr < spec.outer)
        angles = np.degrees(np.arctan2(-dy, dx))
        rel = (angles - spec.orientation + 180.0) % 360.0 - 180.0
        mask = ring & (np.abs(rel) > spec.opening_angle / 2.0)

    values = spec.intensity * mask.astype(np.float64)
    if spec.smoothing_sigma > 0:
        values = smooth_arr(GaussianKernel(spec.smoothing_sigma), values)
    return ScalarField(geometry, values)


def smooth_random_field(
    geometry: GridGeometry, sigma: float, seed: int
) -> ScalarField:
    """Gaussian-smoothed white noise, deterministic in the seed."""
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(geometry.shape)
    return ScalarField(geometry, smooth_arr(GaussianKernel(sigma), noise))


def smooth_random_vec(geometry: GridGeometry, sigma: float, seed: int) -> VectorField:
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(geometry.shape + (2,))
    kern = GaussianKernel(sigma)
    out = np.stack(
        [smooth_arr(kern, noise[..., 0]), smooth_arr(kern, noise[..., 1])], axis=-1
    )
    return VectorField(geometry, out)


# --- experiment presets -----------------------------------------------------
#
# Dimensions are visual matches to the figure-style layouts, defined on a
# 200x200 reference grid and scaled with the requested size.

PRESETS = ("c2disk", "disk2c")


def preset_pair(name: str, size: int = 200) -> tuple[ScalarField, ScalarField]:
    """Source/target image pair for a named experiment preset.

    c2disk : C ring -> same C plus a detached small disk on the right
             (topology-changing target).
    disk2c : filled disk -> C ring (large deformation, same topology).
    """
    if name not in PRESETS:
        raise FieldError(f"unknown preset {name!r}; choose from {PRESETS}")
    geometry = GridGeometry(size, size)
    s = size / 200.0
    center = ((size - 1) / 2.0, (size - 1) / 2.0)
    blur = max(1.0, 1.5 * s)

    c_ring = ShapeSpec(
        kind=ShapeKind.C_OPENING,
        center=center,
        inner=35.0 * s,
        outer=60.0 * s,
        opening_angle=70.0,
        orientation=0.0,
        smoothing_sigma=blur,
    )
    small_disk = ShapeSpec(
        kind=ShapeKind.DISK,
        center=(center[0], center[1] + 80.0 * s),
        outer=15.0 * s,
        smoothing_sigma=blur,
    )
    big_disk = ShapeSpec(
        kind=ShapeKind.DISK, center=center, outer=50.0 * s, smoothing_sigma=blur
    )

    if name == "c2disk":
        source = render(c_ring, geometry)
        target = ScalarField(
            geometry,
            np.maximum(source.values, render(small_disk, geometry).values),
        )
    else:
        source = render(big_disk, geometry)
        target = render(c_ring, geometry)
    return source, target
