from typing import Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from src.arima.models import ArimaSpec
from src.core.errors import DimensionError

# Accepted roots keep this distance from the unit circle
ROOT_MARGIN = 1e-3
# Inverse-root distance below which an AR and an MA factor cancel
CANCEL_TOL = 0.1


def _lag_polynomial(coefs: Sequence[float], sign: float, spacing: int = 1) -> np.ndarray:
    # 1 + sign * sum(c_i B^(i*spacing)), ascending powers of B
    poly = np.zeros(len(coefs) * spacing + 1)
    poly[0] = 1.0
    for i, c in enumerate(coefs, start=1):
        poly[i * spacing] = sign * c
    return poly


def expand_polynomials(
    spec: ArimaSpec,
    phi: Sequence[float],
    theta: Sequence[float],
    Phi: Sequence[float],
    Theta: Sequence[float],
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Multiplies the non-seasonal and seasonal factors. Returns dense lag
    coefficients for lags 1..p+P*m and 1..q+Q*m, with AR signs such that
    x_t = sum(ar_i x_{t-i}) + ... and MA signs such that e_t + sum(ma_j e_{t-j}).
    """
    given = (len(phi), len(theta), len(Phi), len(Theta))
    if given != (spec.p, spec.q, spec.P, spec.Q):
        raise DimensionError(f"coefficient lengths {given} do not match orders {(spec.p, spec.q, spec.P, spec.Q)}")

    ar_poly = P.polymul(_lag_polynomial(phi, -1.0), _lag_polynomial(Phi, -1.0, spec.m))
    ma_poly = P.polymul(_lag_polynomial(theta, 1.0), _lag_polynomial(Theta, 1.0, spec.m))
    ar = np.zeros(spec.ar_degree)
    ma = np.zeros(spec.ma_degree)
    ar[: len(ar_poly) - 1] = -ar_poly[1:]
    ma[: len(ma_poly) - 1] = ma_poly[1:]
    return ar, ma


def roots_outside_unit_circle(poly: np.ndarray, margin: float = 0.0) -> bool:
    """True when every root of the ascending-power polynomial has modulus > 1 + margin."""
    trimmed = np.trim_zeros(np.asarray(poly, dtype=float), "b")
    if len(trimmed) <= 1:
        return True
    return bool(np.all(np.abs(P.polyroots(trimmed)) > 1.0 + margin))


def is_admissible(
    phi: Sequence[float],
    theta: Sequence[float],
    Phi: Sequence[float],
    Theta: Sequence[float],
    margin: float = ROOT_MARGIN,
) -> bool:
    """Stationary AR factors and invertible MA factors, each checked on its own."""
    return all(
        roots_outside_unit_circle(poly, margin)
        for poly in (
            _lag_polynomial(phi, -1.0),
            _lag_polynomial(Phi, -1.0),
            _lag_polynomial(theta, 1.0),
            _lag_polynomial(Theta, 1.0),
        )
    )


def inverse_roots(lag_coefs: Sequence[float], sign: float) -> np.ndarray:
    """
    Values l with 1 + sign * sum(c_i B^i) = prod(1 - l B). The model is
    stationary (invertible) when every |l| < 1.
    """
    coefs = np.asarray(lag_coefs, dtype=float)
    if len(coefs) == 0:
        return np.zeros(0, dtype=complex)
    return np.roots(np.concatenate(([1.0], sign * coefs))).astype(complex)


def has_cancelling_roots(
    spec: ArimaSpec,
    phi: Sequence[float],
    theta: Sequence[float],
    Phi: Sequence[float],
    Theta: Sequence[float],
    tol: float = CANCEL_TOL,
) -> bool:
    """
    True when an AR factor and an MA factor (nearly) coincide, so a model
    with one order less on each side fits the same process.
    """
    ar, ma = expand_polynomials(spec, phi, theta, Phi, Theta)
    if len(ar) == 0 or len(ma) == 0:
        return False
    ar_roots, ma_roots = inverse_roots(ar, -1.0), inverse_roots(ma, 1.0)
    return bool(np.min(np.abs(ar_roots[:, None] - ma_roots[None, :])) < tol)
