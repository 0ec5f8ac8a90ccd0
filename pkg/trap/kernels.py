"""Compiled field evaluation shared by the field models and the integrator.

A field model is flattened into a float64 array so that compiled kernels can
evaluate it without Python objects:

    [kind, gradient, rolloff_scale, rolloff_order, rolloff_exponent, is_3d, omega_z**2]
"""

import numpy as np
from numba import njit

KIND_HARMONIC = 0.0
KIND_ANHARMONIC = 1.0

P_KIND = 0
P_GRADIENT = 1
P_SCALE = 2
P_ORDER = 3
P_EXPONENT = 4
P_IS_3D = 5
P_OMEGA_Z2 = 6
N_MODEL_PARAMS = 7


def pack_model(kind: float, gradient: float, rolloff_scale: float = np.inf,
               rolloff_order: float = 0.0, rolloff_exponent: float = 2.0,
               is_3d: bool = False, omega_z: float = 0.0) -> np.ndarray:
    """Build the flat parameter array for a field model."""
    packed = np.zeros(N_MODEL_PARAMS, dtype=np.float64)
    packed[P_KIND] = kind
    packed[P_GRADIENT] = gradient
    packed[P_SCALE] = rolloff_scale
    packed[P_ORDER] = rolloff_order
    packed[P_EXPONENT] = rolloff_exponent
    packed[P_IS_3D] = 1.0 if is_3d else 0.0
    packed[P_OMEGA_Z2] = omega_z * omega_z
    return packed


@njit(cache=True)
def radial_envelope(mp, x):
    """RF field amplitude along one radial axis (odd in x)."""
    if mp[P_KIND] < 0.5:
        return mp[P_GRADIENT] * x
    s = abs(x / mp[P_SCALE]) ** mp[P_EXPONENT]
    return mp[P_GRADIENT] * x * (1.0 + s) ** (-mp[P_ORDER])


@njit(cache=True)
def rf_envelope(mp, x, y, z):
    """RF field amplitude vector at (x, y, z), before the cos(omega t + phi) factor."""
    ex = radial_envelope(mp, x)
    ey = 0.0
    if mp[P_IS_3D] > 0.5:
        ey = -radial_envelope(mp, y)
    return ex, ey, 0.0


@njit(cache=True)
def static_acceleration(mp, x, y, z):
    """Acceleration from the static axial confinement (divergence-free)."""
    if mp[P_IS_3D] < 0.5:
        return 0.0, 0.0, 0.0
    wz2 = mp[P_OMEGA_Z2]
    return 0.5 * wz2 * x, 0.5 * wz2 * y, -wz2 * z
