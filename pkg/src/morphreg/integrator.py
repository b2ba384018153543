"""Geodesic shooting: forward integration of the coupled image/momentum system.

Per time step the velocity is derived from the momentum, then image and
momentum are advanced by one of three schemes:

* eulerian        -- finite-difference transport for both equations,
* semi-lagrangian -- pull-back along approximate characteristics for both,
* hybrid          -- semi-Lagrangian image advection, Eulerian continuity.

The scale factor in the velocity/momentum relation is absorbed so that
``v = -K * (z grad I)`` holds in both the diffeomorphic and the metamorphic
regime; the intensity-change rate ``mu`` appears only in the image source
term and the penalty weight ``rho`` only in the cost.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .fields import (
    FieldError,
    SampleGrid,
    ScalarField,
    VectorField,
    bilinear_apply,
    bilinear_plan,
    divergence_arr,
    gradient_arr,
    identity_coords,
)
from .kernel import GaussianKernel, smooth_vec_arr, v_norm_sq_arr

MAGNITUDE_GUARD = 1e6


class IntegrationDiverged(RuntimeError):
    """Forward integration produced non-finite or runaway values."""

    def __init__(self, step: int, what: str):
        self.step = step
        self.what = what
        super().__init__(f"integration diverged at step {step}: {what}")


class Scheme(str, Enum):
    EULERIAN = "eulerian"
    SEMI_LAGRANGIAN = "semi-lagrangian"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class ShootingConfig:
    scheme: Scheme
    n_steps: int
    mu: float
    kernel: GaussianKernel

    def __post_init__(self) -> None:
        if self.n_steps < 1:
            raise FieldError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.mu < 0:
            raise FieldError(f"mu must be >= 0, got {self.mu}")

    @property
    def dt(self) -> float:
        return 1.0 / self.n_steps


@dataclass(frozen=True)
class GeodesicState:
    t: float
    image: ScalarField
    momentum: ScalarField
    velocity: VectorField


@dataclass(frozen=True)
class GeodesicTrajectory:
    states: list[GeodesicState]
    deformation: SampleGrid

    @property
    def final_image(self) -> ScalarField:
        return self.states[-1].image


# --- array-level step kernels ----------------------------------------------


def velocity_arr(z: np.ndarray, grad_i: np.ndarray, kernel: GaussianKernel) -> np.ndarray:
    return -smooth_vec_arr(kernel, z[..., None] * grad_i)


def advect_image_euler_arr(i, grad_i, v, z, mu, dt):
    return i + dt * (-(grad_i * v).sum(axis=-1) + mu * z)


def advect_image_sl_arr(i, plan, z, mu, dt):
    return bilinear_apply(i, plan) + dt * mu * z


def continuity_euler_arr(z, v, dt):
    return z - dt * divergence_arr(z[..., None] * v)


def continuity_sl_arr(z, plan, v, dt):
    return bilinear_apply(z, plan) * (1.0 - dt * divergence_arr(v))


def _guard(step: int, **named_arrays) -> None:
    for name, arr in named_arrays.items():
        if not np.all(np.isfinite(arr)):
            raise IntegrationDiverged(step, f"non-finite {name}")
        if np.max(np.abs(arr)) > MAGNITUDE_GUARD:
            raise IntegrationDiverged(step, f"{name} magnitude above guard")


# --- field-level single-step operations -------------------------------------


def velocity_from_momentum(
    z: ScalarField, image: ScalarField, kernel: GaussianKernel
) -> VectorField:
    """v = -K * (z grad I), component-wise smoothing of the product field."""
    if z.geometry != image.geometry:
        raise FieldError("momentum/image geometry mismatch")
    return VectorField(z.geometry, velocity_arr(z.values, gradient_arr(image.values), kernel))


def advect_image_euler(
    image: ScalarField, v: VectorField, z: ScalarField, mu: float, dt: float
) -> ScalarField:
    out = advect_image_euler_arr(
        image.values, gradient_arr(image.values), v.values, z.values, mu, dt
    )
    return ScalarField(image.geometry, out)


def advect_image_sl(
    image: ScalarField, v: VectorField, z: ScalarField, mu: float, dt: float
) -> ScalarField:
    foot = identity_coords(image.geometry.shape) - dt * v.values
    plan = bilinear_plan(foot, image.geometry.shape)
    return ScalarField(image.geometry, advect_image_sl_arr(image.values, plan, z.values, mu, dt))


def continuity_euler(z: ScalarField, v: VectorField, dt: float) -> ScalarField:
    return ScalarField(z.geometry, continuity_euler_arr(z.values, v.values, dt))


def continuity_sl(z: ScalarField, v: VectorField, dt: float) -> ScalarField:
    foot = identity_coords(z.geometry.shape) - dt * v.values
    plan = bilinear_plan(foot, z.geometry.shape)
    return ScalarField(z.geometry, continuity_sl_arr(z.values, plan, v.values, dt))


# --- shooting ---------------------------------------------------------------


def shoot(i0: ScalarField, z0: ScalarField, cfg: ShootingConfig) -> GeodesicTrajectory:
    """Integrate the geodesic system from (i0, z0) over unit time.

    Returns all n_steps+1 states plus the accumulated pull-back deformation
    grid (the map used to warp i0 forward to time 1).
    """
    if i0.geometry != z0.geometry:
        raise FieldError("image/momentum geometry mismatch")
    geom = i0.geometry
    shape = geom.shape
    dt = cfg.dt
    mu = cfg.mu
    idc = identity_coords(shape)

    i = i0.values
    z = z0.values
    phi = idc
    states: list[GeodesicState] = []
    for k in range(cfg.n_steps):
        grad_i = gradient_arr(i)
        v = velocity_arr(z, grad_i, cfg.kernel)
        _guard(k, image=i, momentum=z, velocity=v)
        states.append(
            GeodesicState(
                t=k * dt,
                image=ScalarField(geom, i),
                momentum=ScalarField(geom, z),
                velocity=VectorField(geom, v),
            )
        )
        plan = bilinear_plan(idc - dt * v, shape)
        if cfg.scheme is Scheme.EULERIAN:
            i_new = advect_image_euler_arr(i, grad_i, v, z, mu, dt)
        else:
            i_new = advect_image_sl_arr(i, plan, z, mu, dt)
        if cfg.scheme is Scheme.SEMI_LAGRANGIAN:
            z_new = continuity_sl_arr(z, plan, v, dt)
        else:
            z_new = continuity_euler_arr(z, v, dt)
        phi = np.stack(
            [bilinear_apply(phi[..., 0], plan), bilinear_apply(phi[..., 1], plan)],
            axis=-1,
        )
        i, z = i_new, z_new

    grad_i = gradient_arr(i)
    v = velocity_arr(z, grad_i, cfg.kernel)
    _guard(cfg.n_steps, image=i, momentum=z, velocity=v)
    states.append(
        GeodesicState(
            t=1.0,
            image=ScalarField(geom, i),
            momentum=ScalarField(geom, z),
            velocity=VectorField(geom, v),
        )
    )
    return GeodesicTrajectory(states=states, deformation=SampleGrid(geom, phi))


def shoot_lddmm(i0: ScalarField, z0: ScalarField, cfg: ShootingConfig) -> GeodesicTrajectory:
    """Deformation-only shooting, written without the intensity source term.

    Used as an independent reference path: a metamorphic run with mu = 0 must
    reproduce it bit for bit.
    """
    if i0.geometry != z0.geometry:
        raise FieldError("image/momentum geometry mismatch")
    geom = i0.geometry
    shape = geom.shape
    dt = cfg.dt
    idc = identity_coords(shape)

    i = i0.values
    z = z0.values
    phi = idc
    states: list[GeodesicState] = []
    for k in range(cfg.n_steps):
        grad_i = gradient_arr(i)
        v = velocity_arr(z, grad_i, cfg.kernel)
        _guard(k, image=i, momentum=z, velocity=v)
        states.append(
            GeodesicState(
                t=k * dt,
                image=ScalarField(geom, i),
                momentum=ScalarField(geom, z),
                velocity=VectorField(geom, v),
            )
        )
        plan = bilinear_plan(idc - dt * v, shape)
        if cfg.scheme is Scheme.EULERIAN:
            i_new = i + dt * (-(grad_i * v).sum(axis=-1))
        else:
            i_new = bilinear_apply(i, plan)
        if cfg.scheme is Scheme.SEMI_LAGRANGIAN:
            z_new = continuity_sl_arr(z, plan, v, dt)
        else:
            z_new = continuity_euler_arr(z, v, dt)
        phi = np.stack(
            [bilinear_apply(phi[..., 0], plan), bilinear_apply(phi[..., 1], plan)],
            axis=-1,
        )
        i, z = i_new, z_new

    grad_i = gradient_arr(i)
    v = velocity_arr(z, grad_i, cfg.kernel)
    _guard(cfg.n_steps, image=i, momentum=z, velocity=v)
    states.append(
        GeodesicState(
            t=1.0,
            image=ScalarField(geom, i),
            momentum=ScalarField(geom, z),
            velocity=VectorField(geom, v),
        )
    )
    return GeodesicTrajectory(states=states, deformation=SampleGrid(geom, phi))


def path_energy(
    traj: GeodesicTrajectory, kernel: GaussianKernel, rho: float
) -> list[float]:
    """Per-state path energy ||v_t||_V^2 + rho ||z_t||_L2^2 (diagnostic only)."""
    energies = []
    for state in traj.states:
        z = state.momentum.values
        m = z[..., None] * gradient_arr(state.image.values)
        energies.append(v_norm_sq_arr(kernel, m) + rho * float(np.sum(z * z)))
    return energies
