"""Singular-limit reduction of the tree dynamics.

Scaling every value by a gain ``K`` and letting ``eps = 1/K -> 0`` leaves one
slow variable per internal node, ``x = m1 - m2``, with the fast variable
``y = (1 - m1 - m2) / eps`` slaved to a slow manifold. On ``[-1, 1]`` the slow
flow has equilibria at ``x = +1``, ``x = -1`` and, for ``|alpha| <= 2/3``, at
``x = -3*alpha/2``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .dynamics import ValueAssignment, assign_values
from .numerics import EquilibriumRecord, Stability
from .tree import ParsedTree, path_from_root

__all__ = [
    "ReducedConfig",
    "reduced_node_rhs",
    "reduced_node_slope",
    "slow_manifold_y",
    "singular_coordinates",
    "fast_slow_rhs",
    "rescaled_unfolding_rhs",
    "reduced_tree_rhs",
    "node_equilibria",
    "enumerate_reduced_equilibria",
    "ProjectedEquilibrium",
    "projected_equilibria",
    "seed_state",
    "THRESHOLD_TOL",
]

# |alpha -/+ 2/3| below this counts as sitting on a stability threshold.
THRESHOLD_TOL = 1e-12


@dataclass(frozen=True)
class ReducedConfig:
    sigma: float = 4.0
    gain: float = 100.0

    def __post_init__(self):
        if not self.gain > 0:
            raise ValueError("gain must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def eps(self) -> float:
        return 1.0 / self.gain


def _check_domain(x, alpha, vbar, sigma):
    x = np.asarray(x, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if np.any(np.abs(x) > 1.0 + 1e-12):
        raise ValueError("slow variable must lie in [-1, 1]")
    # |alpha| = 2 means one child value is zero; the rate is still finite there.
    if np.any(np.abs(alpha) > 2.0):
        raise ValueError("alpha must lie in [-2, 2]")
    if np.any(np.asarray(vbar) <= 0) or not sigma > 0:
        raise ValueError("vbar and sigma must be positive")
    return x, alpha


def reduced_node_rhs(x, alpha, vbar, sigma: float):
    """Slow rate ``sigma/(2 vbar) * (1 - x^2) * (2x + 3 alpha) / (6 + alpha x)``.

    ``vbar`` only rescales time; zeros and their stability depend on
    ``alpha`` alone.
    """
    x, alpha = _check_domain(x, alpha, vbar, sigma)
    return sigma / (2.0 * np.asarray(vbar)) * (1.0 - x**2) * (2.0 * x + 3.0 * alpha) / (6.0 + alpha * x)


def reduced_node_slope(x, alpha, vbar, sigma: float):
    """d/dx of :func:`reduced_node_rhs`."""
    x, alpha = _check_domain(x, alpha, vbar, sigma)
    num = (1.0 - x**2) * (2.0 * x + 3.0 * alpha)
    dnum = -2.0 * x * (2.0 * x + 3.0 * alpha) + 2.0 * (1.0 - x**2)
    den = 6.0 + alpha * x
    return sigma / (2.0 * np.asarray(vbar)) * (dnum * den - num * alpha) / den**2


def slow_manifold_y(x, alpha, vbar, sigma: float):
    """Fast variable on the slow manifold: ``sigma (1 - x^2) / (6 vbar + dv x)``."""
    x, alpha = _check_domain(x, alpha, vbar, sigma)
    vbar = np.asarray(vbar, dtype=float)
    return sigma * (1.0 - x**2) / (6.0 * vbar + alpha * vbar * x)


def singular_coordinates(m_pair, gain: float) -> tuple[float, float]:
    """``(x, y) = (m1 - m2, (1 - m1 - m2) * gain)`` for one node pair."""
    m1, m2 = (float(c) for c in m_pair)
    return m1 - m2, (1.0 - m1 - m2) * gain


def fast_slow_rhs(x, y, dv, vbar, sigma: float, eps: float) -> tuple:
    """``(dx/dt, eps * dy/dt)`` of one node in singular coordinates, values ``v/eps``.

    Exact change of variables of the node model; the second component is the
    fast residual whose zero set at ``eps = 0`` is the slow manifold.
    """
    vp, vm = 2.0 * vbar + dv, 2.0 * vbar - dv
    a = (1.0 - eps * y + x) / vp
    b = (1.0 - eps * y - x) / vm
    fx = -eps * (a - b) + vbar * x * y + dv * y * (3.0 - eps * y) / 2.0
    gy = (
        eps * (a + b)
        + 0.5 * sigma * ((1.0 - eps * y) ** 2 - x**2)
        - 0.5 * y * vp * (1.0 + (1.0 - eps * y + x) / 2.0)
        - 0.5 * y * vm * (1.0 + (1.0 - eps * y - x) / 2.0)
    )
    return fx, gy


def rescaled_unfolding_rhs(x, alpha):
    """Polynomial unfolding ``x (1 - x^2) + 3 alpha/2 (1 - x^2)`` equivalent to the slow flow."""
    x = np.asarray(x, dtype=float)
    return x * (1.0 - x**2) + 1.5 * alpha * (1.0 - x**2)


def _assignment(tree: ParsedTree, values) -> ValueAssignment:
    return values if isinstance(values, ValueAssignment) else assign_values(tree, values)


def reduced_tree_rhs(x, values: ValueAssignment, sigma: float) -> np.ndarray:
    """Stacked slow rates, each node with its own ``alpha`` and mean value."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != values.alpha.size:
        raise ValueError(f"expected {values.alpha.size} slow variables, got {x.shape[-1]}")
    return reduced_node_rhs(x, values.alpha, values.vbar, sigma)


def _component_stability(slope: float, on_threshold: bool) -> Stability:
    if on_threshold:
        return Stability.NON_HYPERBOLIC
    return Stability.STABLE if slope < 0 else Stability.UNSTABLE


def node_equilibria(alpha: float, vbar: float = 1.0, sigma: float = 4.0, tol: float = THRESHOLD_TOL):
    """Per-node equilibria as ``(branch, x, stability, slope)``.

    ``+1`` is stable iff ``alpha > -2/3``, ``-1`` iff ``alpha < 2/3``; the interior
    point ``-3 alpha / 2`` exists for ``|alpha| <= 2/3`` and is unstable. On a
    threshold the interior point merges with an endpoint and the merged
    equilibrium is reported once, as non-hyperbolic.
    """
    out = []
    plus_edge = abs(alpha + 2.0 / 3.0) <= tol
    minus_edge = abs(alpha - 2.0 / 3.0) <= tol
    for branch, x, edge in ((1, 1.0, plus_edge), (-1, -1.0, minus_edge)):
        slope = float(reduced_node_slope(x, alpha, vbar, sigma))
        out.append((branch, x, _component_stability(slope, edge), slope))
    if abs(alpha) < 2.0 / 3.0 - tol:
        x = -1.5 * alpha
        slope = float(reduced_node_slope(x, alpha, vbar, sigma))
        out.append((0, x, _component_stability(slope, False), slope))
    return out


def _combine(stabilities) -> Stability:
    if Stability.UNSTABLE in stabilities:
        return Stability.UNSTABLE
    if Stability.NON_HYPERBOLIC in stabilities:
        return Stability.NON_HYPERBOLIC
    return Stability.STABLE


def enumerate_reduced_equilibria(tree: ParsedTree, values, sigma: float, tol: float = THRESHOLD_TOL) -> list[EquilibriumRecord]:
    """Cartesian product of the per-node equilibria over all internal nodes."""
    va = _assignment(tree, values)
    per_node = [node_equilibria(a, vb, sigma, tol) for a, vb in zip(va.alpha, va.vbar)]
    records = []
    for combo in itertools.product(*per_node):
        branches = tuple(c[0] for c in combo)
        coords = np.array([c[1] for c in combo])
        eigs = np.array([c[3] for c in combo], dtype=complex)
        records.append(
            EquilibriumRecord(coords, _combine([c[2] for c in combo]), eigs, branches, mode="reduced")
        )
    return records


@dataclass
class ProjectedEquilibrium:
    """Option-simplex image of one or more reduced equilibria.

    Several reduced equilibria map to the same option state when a node sits
    under a fully uncommitted branch; the best stability among them is kept.
    """

    m_o: np.ndarray
    stability: Stability
    records: list[EquilibriumRecord]


def _leaf_product(tree: ParsedTree, x: np.ndarray, leaf: int) -> float:
    path = path_from_root(tree, leaf)
    out = 1.0
    for parent, sign in zip(path.nodes[:-1], path.signs):
        out *= (1.0 + sign * x[tree.internal_rank[parent]]) / 2.0
    return out


_RANK = {Stability.STABLE: 0, Stability.NON_HYPERBOLIC: 1, Stability.UNSTABLE: 2}


def projected_equilibria(tree: ParsedTree, values, sigma: float, tol: float = THRESHOLD_TOL, decimals: int = 12) -> list[ProjectedEquilibrium]:
    """Reduced equilibria pushed through the path product with ``mbar = 1/2``."""
    groups: dict[tuple, ProjectedEquilibrium] = {}
    for rec in enumerate_reduced_equilibria(tree, values, sigma, tol):
        leaves = [_leaf_product(tree, rec.coords, tree.option_nodes[k]) for k in range(tree.n_options)]
        m_o = np.array(leaves + [1.0 - sum(leaves)])
        key = tuple(np.round(m_o, decimals) + 0.0)
        if key not in groups:
            groups[key] = ProjectedEquilibrium(m_o, rec.stability, [rec])
        else:
            g = groups[key]
            g.records.append(rec)
            if _RANK[rec.stability] < _RANK[g.stability]:
                g.stability = rec.stability
    return list(groups.values())


def seed_state(x, values: ValueAssignment, sigma: float, gain: float) -> np.ndarray:
    """Full-model initial guess on the slow manifold for values scaled by ``gain``.

    ``values`` are the unscaled values; the seed has ``m1 - m2 = x`` and
    ``1 - m1 - m2 = h(x) / gain`` per node.
    """
    x = np.asarray(x, dtype=float)
    y = slow_manifold_y(x, values.alpha, values.vbar, sigma)
    mbar = 0.5 * (1.0 - y / gain)
    pairs = np.stack([mbar + 0.5 * x, mbar - 0.5 * x], axis=-1)
    return pairs.reshape(-1)
