import numpy as np

from morphreg import GaussianKernel, GridGeometry, ScalarField
from morphreg.kernel import smooth_arr


def interior_window(n: int, margin: int) -> np.ndarray:
    w = np.zeros((n, n))
    w[margin : n - margin, margin : n - margin] = 1.0
    return w


def smooth_instance(n=16, seed=0, amp=0.05, margin=4, sigma=1.0):
    """Source/target/momentum triple, smooth and zero near the border.

    Keeping everything supported away from the boundary (by more than the
    kernel radius) keeps the clamped interpolation away from its
    non-differentiable saturation region, so finite-difference probes of the
    cost are clean.
    """
    geometry = GridGeometry(n, n)
    rng = np.random.default_rng(seed)
    kern = GaussianKernel(sigma)
    window = interior_window(n, margin)

    def field(scale=1.0, nonneg=False):
        a = smooth_arr(kern, rng.standard_normal((n, n))) * window
        if nonneg:
            a = np.abs(a)
        return ScalarField(geometry, scale * a)

    source = field(nonneg=True)
    target = field(nonneg=True)
    z0 = field(scale=amp)
    return geometry, source, target, z0
