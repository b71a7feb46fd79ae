"""Two-option value-sensitive decision model for a single internal node.

State is a commitment pair ``(m1, m2)`` in the 2-simplex with the uncommitted
fraction ``mU = 1 - m1 - m2`` implied. Each commitment grows by recruitment
from the uncommitted pool at rate ``v_i``, decays as ``1/v_i``, gains from
interaction ``v_i * m_i * mU`` and is cross-inhibited by ``sigma * m1 * m2``.

All functions broadcast over leading axes; pairs live on the trailing axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MeanDiff",
    "seeley_rhs",
    "node_jacobian",
    "sigma_crit",
    "v_crit",
    "deadlock_mbar",
    "deadlock_eigenvalues",
    "to_mean_diff",
    "from_mean_diff",
]


def _rates(m1, m2, v1, v2, sigma):
    # Grouped so that exchanging the two options permutes the result bit-exactly.
    mu = 1.0 - (m1 + m2)
    inhibition = sigma * (m1 * m2)
    d1 = v1 * mu - m1 / v1 + v1 * m1 * mu - inhibition
    d2 = v2 * mu - m2 / v2 + v2 * m2 * mu - inhibition
    return d1, d2


def _check(m, v, sigma):
    m = np.asarray(m, dtype=float)
    v = np.asarray(v, dtype=float)
    if m.shape[-1:] != (2,) or v.shape[-1:] != (2,):
        raise ValueError("state and values must be pairs on the last axis")
    if not (np.all(np.isfinite(m)) and np.all(np.isfinite(v)) and math.isfinite(sigma)):
        raise ValueError("non-finite input")
    if np.any(v <= 0):
        raise ValueError("option values must be positive")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return m, v


def seeley_rhs(m, v, sigma: float) -> np.ndarray:
    """Commitment rates ``(dm1/dt, dm2/dt)`` for pair(s) ``m`` with values ``v``."""
    m, v = _check(m, v, sigma)
    d1, d2 = _rates(m[..., 0], m[..., 1], v[..., 0], v[..., 1], sigma)
    return np.stack([d1, d2], axis=-1)


def node_jacobian(m, v, sigma: float) -> np.ndarray:
    """Analytic Jacobian of :func:`seeley_rhs` with respect to ``(m1, m2)``."""
    m, v = _check(m, v, sigma)
    m1, m2 = m[..., 0], m[..., 1]
    v1, v2 = v[..., 0], v[..., 1]
    mu = 1.0 - m1 - m2
    j11 = -1.0 / v1 - v1 * (1.0 + m1) + v1 * mu - sigma * m2
    j12 = -v1 * (1.0 + m1) - sigma * m1
    j21 = -v2 * (1.0 + m2) - sigma * m2
    j22 = -1.0 / v2 - v2 * (1.0 + m2) + v2 * mu - sigma * m1
    return np.stack([np.stack([j11, j12], -1), np.stack([j21, j22], -1)], -2)


def sigma_crit(v):
    """Cross-inhibition at which the symmetric deadlock loses stability, for common value ``v > 1``."""
    v = np.asarray(v, dtype=float)
    if np.any(~np.isfinite(v)) or np.any(v <= 1.0):
        raise ValueError("sigma_crit is defined for v > 1 only")
    out = 4.0 * v**3 / (v**2 - 1.0) ** 2
    return float(out) if out.ndim == 0 else out


def _dsigma_dv(v: float) -> float:
    return -4.0 * v**2 * (v**2 + 3.0) / (v**2 - 1.0) ** 3


def v_crit(sigma: float, rtol: float = 1e-12) -> float:
    """Common option value at which the deadlock bifurcates for a given ``sigma``.

    ``sigma_crit`` decreases strictly from +inf to 0 on ``v > 1``, so the root
    is unique. Bisection brackets it; two Newton steps polish.
    """
    if not (math.isfinite(sigma) and sigma > 0):
        raise ValueError("sigma must be positive and finite")
    lo, hi = 1.0 + 1e-9, 1e3
    while sigma_crit(hi) > sigma:
        hi *= 10.0
        if hi > 1e15:
            raise ArithmeticError(f"no bracket for v_crit at sigma={sigma}")
    if sigma_crit(lo) < sigma:
        raise ArithmeticError(f"no bracket for v_crit at sigma={sigma}")
    while hi - lo > rtol * lo:
        mid = 0.5 * (lo + hi)
        if sigma_crit(mid) > sigma:
            lo = mid
        else:
            hi = mid
    v = 0.5 * (lo + hi)
    for _ in range(2):
        step = (sigma_crit(v) - sigma) / _dsigma_dv(v)
        if lo <= v - step <= hi:
            v -= step
    return v


def deadlock_mbar(v, sigma: float):
    """Per-option commitment ``m_bar`` of the symmetric equilibrium ``(m_bar, m_bar)``."""
    v = np.asarray(v, dtype=float)
    if np.any(~np.isfinite(v)) or np.any(v <= 0) or not sigma > 0:
        raise ValueError("v and sigma must be positive")
    disc = 1.0 + 2.0 * v**2 + 4.0 * sigma * v**3 + 9.0 * v**4
    out = (-(1.0 + v**2) + np.sqrt(disc)) / (2.0 * v * (2.0 * v + sigma))
    return float(out) if out.ndim == 0 else out


def deadlock_eigenvalues(v: float, sigma: float) -> tuple[float, float]:
    """Closed-form ``(lambda_1, lambda_2)`` of the Jacobian at the symmetric deadlock.

    ``lambda_1`` belongs to the antisymmetric direction and crosses zero at
    the pitchfork; ``lambda_2`` (symmetric direction) stays negative.
    """
    mb = deadlock_mbar(v, sigma)
    lam1 = (-2.0 * mb * v**2 + v**2 - 1.0) / v
    lam2 = (-4.0 * mb * v**2 - 2.0 * mb * sigma * v - v**2 - 1.0) / v
    return lam1, lam2


@dataclass(frozen=True)
class MeanDiff:
    dm: float
    mbar: float
    dv: float
    vbar: float

    @property
    def alpha(self) -> float:
        return self.dv / self.vbar


def to_mean_diff(m, v) -> MeanDiff:
    m1, m2 = (float(x) for x in m)
    v1, v2 = (float(x) for x in v)
    return MeanDiff(m1 - m2, 0.5 * (m1 + m2), v1 - v2, 0.5 * (v1 + v2))


def from_mean_diff(md: MeanDiff, slack: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`to_mean_diff`; rejects states off the simplex and non-positive values."""
    m = np.array([md.mbar + 0.5 * md.dm, md.mbar - 0.5 * md.dm])
    v = np.array([md.vbar + 0.5 * md.dv, md.vbar - 0.5 * md.dv])
    if np.any(m < -slack) or m.sum() > 1.0 + slack:
        raise ValueError(f"state {m} is outside the 2-simplex")
    if np.any(v <= 0):
        raise ValueError(f"values {v} are not positive")
    return m, v
