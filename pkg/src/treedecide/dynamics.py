"""Recursive vector field of a parsing: value recursion, stacked dynamics,
z-coordinates, projection to the option simplex and symmetry actions.

The state of record is the stacked motivation vector ``m`` (one pair per
internal node, see :mod:`treedecide.tree` for the layout). ``z`` carries,
in the same layout, the product of pair components along the root path of
every non-root node; the leaf entries of ``z`` are the option commitments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .node import _rates, deadlock_mbar, node_jacobian
from .tree import ParsedTree, TreeIsomorphism, path_from_root

__all__ = [
    "ZETA_MIN",
    "DegenerateBranchError",
    "ValueAssignment",
    "assign_values",
    "tree_rhs_m",
    "tree_jacobian_m",
    "m_to_z",
    "z_to_m",
    "node_z",
    "tree_rhs_z",
    "project",
    "projected_rhs",
    "project_m",
    "path_product",
    "deadlock_state",
    "in_simplex",
    "apply_isomorphism",
    "random_state",
]

ZETA_MIN = 1e-12


class DegenerateBranchError(ArithmeticError):
    """A z branch is (numerically) zero, so the m-chart cannot be recovered."""


@dataclass(frozen=True, eq=False)
class ValueAssignment:
    """Option values propagated up the tree.

    node_means
        Mean value of every node (leaf: its option value; internal: mean of children).
    pairs
        ``(n_i, 2)`` children means per internal node, depth-first order.
    alpha
        Relative value difference ``(v_left - v_right) / mean`` per internal node.
    """

    option_values: np.ndarray
    node_means: np.ndarray
    pairs: np.ndarray

    @property
    def stacked(self) -> np.ndarray:
        return self.pairs.reshape(-1)

    @property
    def vbar(self) -> np.ndarray:
        return self.pairs.mean(axis=1)

    @property
    def dv(self) -> np.ndarray:
        return self.pairs[:, 0] - self.pairs[:, 1]

    @property
    def alpha(self) -> np.ndarray:
        return self.dv / self.vbar

    def scaled(self, gain: float) -> "ValueAssignment":
        return ValueAssignment(self.option_values * gain, self.node_means * gain, self.pairs * gain)


def assign_values(tree: ParsedTree, option_values) -> ValueAssignment:
    values = np.asarray(option_values, dtype=float).reshape(-1)
    if values.size != tree.n_options:
        raise ValueError(f"expected {tree.n_options} option values, got {values.size}")
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise ValueError("option values must be positive and finite")
    means = np.zeros(tree.n_nodes)
    for i in reversed(tree.df_order):
        node = tree.nodes[i]
        if node.is_leaf:
            means[i] = values[node.option]
        else:
            means[i] = 0.5 * (means[node.left] + means[node.right])
    pairs = np.array([[means[tree.nodes[i].left], means[tree.nodes[i].right]] for i in tree.internal_order])
    return ValueAssignment(values, means, pairs)


def _stacked_values(values) -> np.ndarray:
    if isinstance(values, ValueAssignment):
        return values.stacked
    return np.asarray(values, dtype=float)


def tree_rhs_m(m, values, sigma: float) -> np.ndarray:
    """Stacked node dynamics; block ``r`` is the node model of internal node ``r``.

    ``m`` may carry leading batch axes. ``values`` is a ValueAssignment or a
    stacked value vector of matching length.
    """
    m = np.asarray(m, dtype=float)
    v = _stacked_values(values)
    if m.shape[-1] != v.shape[-1] or m.shape[-1] % 2:
        raise ValueError(f"state has {m.shape[-1]} coordinates, values have {v.shape[-1]}")
    out = np.empty_like(m)
    d1, d2 = _rates(m[..., 0::2], m[..., 1::2], v[0::2], v[1::2], sigma)
    out[..., 0::2] = d1
    out[..., 1::2] = d2
    return out


def tree_jacobian_m(m, values, sigma: float) -> np.ndarray:
    """Block-diagonal analytic Jacobian of :func:`tree_rhs_m` at a single state."""
    m = np.asarray(m, dtype=float)
    v = _stacked_values(values)
    blocks = node_jacobian(m.reshape(-1, 2), v.reshape(-1, 2), sigma)
    n = m.size
    jac = np.zeros((n, n))
    for r, block in enumerate(blocks):
        jac[2 * r : 2 * r + 2, 2 * r : 2 * r + 2] = block
    return jac


def _parent_slots(tree: ParsedTree) -> list[int]:
    return [tree.slot[i] for i in tree.internal_order]


def m_to_z(tree: ParsedTree, m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    z = np.empty_like(m)
    for r, ps in enumerate(_parent_slots(tree)):
        zi = 1.0 if ps < 0 else z[..., ps : ps + 1]
        z[..., 2 * r : 2 * r + 2] = zi * m[..., 2 * r : 2 * r + 2]
    return z


def node_z(tree: ParsedTree, z) -> np.ndarray:
    """Per-node z values (root first) from the stacked vector."""
    z = np.asarray(z, dtype=float)
    out = np.empty(z.shape[:-1] + (tree.n_nodes,))
    out[..., 0] = 1.0
    for i in tree.df_order[1:]:
        out[..., i] = z[..., tree.slot[i]]
    return out


def z_to_m(tree: ParsedTree, z, zeta_min: float = ZETA_MIN) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    m = np.empty_like(z)
    for r, ps in enumerate(_parent_slots(tree)):
        if ps < 0:
            zi = 1.0
        else:
            zi = z[..., ps : ps + 1]
            if np.any(zi <= zeta_min):
                node = tree.internal_order[r]
                raise DegenerateBranchError(f"z at internal node {node} is below {zeta_min}")
        m[..., 2 * r : 2 * r + 2] = z[..., 2 * r : 2 * r + 2] / zi
    return m


def tree_rhs_z(tree: ParsedTree, z, values, sigma: float, zeta_min: float = ZETA_MIN) -> np.ndarray:
    """Rates of the stacked z-coordinates, via the chain rule through the m-chart."""
    z = np.asarray(z, dtype=float)
    m = z_to_m(tree, z, zeta_min)
    fm = tree_rhs_m(m, values, sigma)
    zdot = np.empty_like(z)
    for r, ps in enumerate(_parent_slots(tree)):
        block = slice(2 * r, 2 * r + 2)
        if ps < 0:
            zdot[..., block] = fm[..., block]
        else:
            zdot[..., block] = zdot[..., ps : ps + 1] * m[..., block] + z[..., ps : ps + 1] * fm[..., block]
    return zdot


def project(tree: ParsedTree, z) -> np.ndarray:
    """Option commitments read off the leaves, plus the uncommitted mass last."""
    z = np.asarray(z, dtype=float)
    leaf = z[..., [tree.slot[i] for i in tree.option_nodes]]
    return np.concatenate([leaf, 1.0 - leaf.sum(axis=-1, keepdims=True)], axis=-1)


def project_m(tree: ParsedTree, m) -> np.ndarray:
    return project(tree, m_to_z(tree, m))


def projected_rhs(tree: ParsedTree, z, values, sigma: float, zeta_min: float = ZETA_MIN) -> np.ndarray:
    rate = tree_rhs_z(tree, z, values, sigma, zeta_min)
    leaf = rate[..., [tree.slot[i] for i in tree.option_nodes]]
    return np.concatenate([leaf, -leaf.sum(axis=-1, keepdims=True)], axis=-1)


def path_product(tree: ParsedTree, m, node: int) -> float:
    """z of ``node`` as the product of ``(2*mbar + a*dm)/2`` along its root path."""
    m = np.asarray(m, dtype=float)
    path = path_from_root(tree, node)
    out = 1.0
    for parent, sign in zip(path.nodes[:-1], path.signs):
        r = tree.internal_rank[parent]
        m1, m2 = m[2 * r], m[2 * r + 1]
        mbar, dm = 0.5 * (m1 + m2), m1 - m2
        out *= (2.0 * mbar + sign * dm) / 2.0
    return out


def deadlock_state(tree: ParsedTree, v: float, sigma: float) -> np.ndarray:
    """Symmetric equilibrium ``m_bar * 1`` for equal option values ``v``."""
    return np.full(2 * tree.n_internal, deadlock_mbar(v, sigma))


def in_simplex(m, slack: float = 1e-9) -> bool:
    """Every pair nonnegative with sum at most one, within ``slack``."""
    m = np.asarray(m, dtype=float)
    pairs = m.reshape(m.shape[:-1] + (-1, 2))
    return bool(np.all(pairs >= -slack) and np.all(pairs.sum(axis=-1) <= 1.0 + slack))


def random_state(tree: ParsedTree, rng: np.random.Generator, size: int | None = None, margin: float = 0.0) -> np.ndarray:
    """Uniform random pairs in the interior of the 2-simplex (Dirichlet(1,1,1) draws)."""
    shape = (tree.n_internal,) if size is None else (size, tree.n_internal)
    draw = rng.dirichlet(np.ones(3), size=shape)[..., :2]
    if margin:
        draw = margin + (1.0 - 3.0 * margin) * draw
    return draw.reshape(draw.shape[:-2] + (-1,))


def apply_isomorphism(gamma: TreeIsomorphism, x, kind: str = "state") -> np.ndarray:
    """Move a stacked vector (``kind="state"``) or option vector (``kind="options"``)
    into the coordinates of ``gamma.target``."""
    if kind == "state":
        return gamma.apply_state(x)
    if kind == "options":
        return gamma.apply_options(x)
    raise ValueError(f"unknown kind {kind!r}")
