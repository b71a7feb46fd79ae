"""Binary-tree parsings of option sets and their isomorphism group.

A parsing is a proper rooted binary tree whose leaves are the options of a
decision. Nodes are indexed in depth-first preorder starting at the root
(index 0), left subtree before right subtree. Options are indexed 0..n_o-1;
by default the k-th leaf met in depth-first order carries option k.

Stacked per-node coordinates (motivation pairs, value pairs, z pairs) use one
fixed layout everywhere in the package: the pair of the internal node with
depth-first rank r among internal nodes occupies slots (2r, 2r+1), left child
first.

Tree documents are nested JSON objects. A leaf is ``{"option": label}`` and
may carry an explicit ``"index"``; an internal node is
``{"left": <subtree>, "right": <subtree>}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

__all__ = [
    "TreeSpecError",
    "Node",
    "ParsedTree",
    "TreePath",
    "TreeIsomorphism",
    "parse_tree",
    "load_tree",
    "tree_to_document",
    "path_from_root",
    "flip",
    "isomorphism",
    "compose",
    "enumerate_group",
    "canonical_form",
    "DEFAULT_GROUP_CAP",
]

DEFAULT_GROUP_CAP = 20


class TreeSpecError(ValueError):
    """Raised for malformed tree documents or invalid tree queries."""


@dataclass(frozen=True)
class Node:
    index: int
    parent: int | None
    left: int | None = None
    right: int | None = None
    option: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def kind(self) -> str:
        return "leaf" if self.is_leaf else "internal"


@dataclass(frozen=True)
class ParsedTree:
    """A validated parsing. Immutable; derived maps are cached on first use.

    ``nodes[i]`` is the node with depth-first index ``i``; ``labels[k]`` is
    the label of option ``k``.
    """

    nodes: tuple[Node, ...]
    labels: tuple[str, ...]

    root = 0

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_options(self) -> int:
        return len(self.labels)

    @property
    def n_internal(self) -> int:
        return self.n_nodes - self.n_options

    @property
    def df_order(self) -> tuple[int, ...]:
        return tuple(range(self.n_nodes))

    @cached_property
    def internal_order(self) -> tuple[int, ...]:
        return tuple(n.index for n in self.nodes if not n.is_leaf)

    @cached_property
    def leaf_order(self) -> tuple[int, ...]:
        return tuple(n.index for n in self.nodes if n.is_leaf)

    @cached_property
    def internal_rank(self) -> dict[int, int]:
        return {node: r for r, node in enumerate(self.internal_order)}

    @cached_property
    def option_nodes(self) -> tuple[int, ...]:
        """Leaf node carrying each option (the inverse option map)."""
        out = [0] * self.n_options
        for i in self.leaf_order:
            out[self.nodes[i].option] = i
        return tuple(out)

    @cached_property
    def slot(self) -> tuple[int, ...]:
        """Stacked-coordinate slot holding each node's z value; -1 for the root."""
        out = [-1] * self.n_nodes
        for r, i in enumerate(self.internal_order):
            out[self.nodes[i].left] = 2 * r
            out[self.nodes[i].right] = 2 * r + 1
        return tuple(out)

    def children(self, i: int) -> tuple[int, int]:
        node = self.nodes[i]
        if node.is_leaf:
            raise TreeSpecError(f"node {i} is a leaf")
        return node.left, node.right

    def descendants(self, i: int) -> list[int]:
        """All descendants of ``i`` in depth-first order (excluding ``i``)."""
        node = self.nodes[i]
        if node.is_leaf:
            return []
        out = []
        for c in (node.left, node.right):
            out.append(c)
            out.extend(self.descendants(c))
        return out

    def options_below(self, i: int) -> list[int]:
        return [self.nodes[j].option for j in [i, *self.descendants(i)] if self.nodes[j].is_leaf]

    def depth(self, i: int) -> int:
        d = 0
        while self.nodes[i].parent is not None:
            i = self.nodes[i].parent
            d += 1
        return d

    def __repr__(self) -> str:
        return f"ParsedTree({json.dumps(tree_to_document(self))})"


def _build(doc, nodes: list, leaves: list, parent: int | None, path: str) -> int:
    if not isinstance(doc, dict):
        raise TreeSpecError(f"{path}: expected an object, got {type(doc).__name__}")
    index = len(nodes)
    if "option" in doc:
        extra = set(doc) - {"option", "index"}
        if extra:
            raise TreeSpecError(f"{path}: unexpected keys {sorted(extra)} on leaf")
        nodes.append([index, parent, None, None, None])
        leaves.append((index, doc["option"], doc.get("index")))
        return index
    keys = set(doc)
    if keys != {"left", "right"}:
        if keys <= {"left", "right"}:
            raise TreeSpecError(f"{path}: internal node must have exactly two children")
        raise TreeSpecError(f"{path}: unexpected keys {sorted(keys - {'left', 'right'})}")
    nodes.append([index, parent, None, None, None])
    nodes[index][2] = _build(doc["left"], nodes, leaves, index, path + ".left")
    nodes[index][3] = _build(doc["right"], nodes, leaves, index, path + ".right")
    return index


def parse_tree(doc) -> ParsedTree:
    """Validate a tree document (dict or JSON text) and return a ParsedTree."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise TreeSpecError(f"malformed tree document: {exc}") from None
    nodes: list = []
    leaves: list = []
    _build(doc, nodes, leaves, None, "$")
    n_o = len(leaves)
    if n_o < 2:
        raise TreeSpecError("a parsing needs at least two options")

    labels = [str(lab) for _, lab, _ in leaves]
    if len(set(labels)) != n_o:
        dup = sorted({lab for lab in labels if labels.count(lab) > 1})
        raise TreeSpecError(f"duplicate option labels: {dup}")

    explicit = [idx for _, _, idx in leaves]
    if all(idx is None for idx in explicit):
        indices = list(range(n_o))
    elif any(idx is None for idx in explicit):
        raise TreeSpecError("either every leaf names its option index or none does")
    else:
        if not all(isinstance(idx, int) and not isinstance(idx, bool) for idx in explicit):
            raise TreeSpecError("option indices must be integers")
        if sorted(explicit) != list(range(n_o)):
            raise TreeSpecError(f"option indices must be a permutation of 0..{n_o - 1}")
        indices = explicit

    ordered_labels = [""] * n_o
    for (node, _, _), k, lab in zip(leaves, indices, labels):
        nodes[node][4] = k
        ordered_labels[k] = lab
    return ParsedTree(tuple(Node(*rec) for rec in nodes), tuple(ordered_labels))


def load_tree(path: str | Path) -> ParsedTree:
    return parse_tree(Path(path).read_text(encoding="utf-8"))


def tree_to_document(tree: ParsedTree, i: int | None = None, with_index: bool = False) -> dict:
    i = tree.root if i is None else i
    node = tree.nodes[i]
    if node.is_leaf:
        doc = {"option": tree.labels[node.option]}
        if with_index:
            doc["index"] = node.option
        return doc
    return {
        "left": tree_to_document(tree, node.left, with_index),
        "right": tree_to_document(tree, node.right, with_index),
    }


@dataclass(frozen=True)
class TreePath:
    nodes: tuple[int, ...]
    signs: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.nodes)


def path_from_root(tree: ParsedTree, node: int) -> TreePath:
    """Root-to-node path; sign +1 for a step to a left child, -1 to a right child."""
    if not 0 <= node < tree.n_nodes:
        raise TreeSpecError(f"unknown node {node}")
    seq = [node]
    signs = []
    while tree.nodes[seq[-1]].parent is not None:
        child = seq[-1]
        parent = tree.nodes[child].parent
        signs.append(1 if tree.nodes[parent].left == child else -1)
        seq.append(parent)
    return TreePath(tuple(reversed(seq)), tuple(reversed(signs)))


@dataclass(frozen=True)
class TreeIsomorphism:
    """The coordinate change induced by flipping a set of internal nodes.

    ``target`` is the flipped tree re-indexed in its own depth-first order.
    All permutations are gather maps: applying the isomorphism to a vector
    ``x`` gives ``x[perm]``.

    node_perm
        ``node_perm[i]`` is the target index of source node ``i``.
    option_perm
        ``option_perm[k]`` is the source option sitting in target option slot ``k``.
    state_perm
        ``state_perm[k]`` is the source stacked coordinate moved to slot ``k``.
    """

    source: ParsedTree
    target: ParsedTree
    flip_set: frozenset[int]
    node_perm: tuple[int, ...]
    option_perm: tuple[int, ...]
    state_perm: tuple[int, ...]

    @property
    def is_identity(self) -> bool:
        return not self.flip_set

    @property
    def is_automorphism(self) -> bool:
        """True when the flipped tree has the same indexed shape as the source."""
        return self.target.nodes == self.source.nodes

    def apply_state(self, x):
        """Permute stacked pair coordinates (m, z or stacked values); trailing axis."""
        x = np.asarray(x)
        if x.shape[-1] != len(self.state_perm):
            raise ValueError(f"state has {x.shape[-1]} coordinates, isomorphism acts on {len(self.state_perm)}")
        return x[..., list(self.state_perm)]

    def apply_options(self, v):
        """Permute an option-indexed vector; trailing axis of length n_o (or n_o + 1)."""
        v = np.asarray(v)
        n = len(self.option_perm)
        if v.shape[-1] == n + 1:
            return v[..., list(self.option_perm) + [n]]
        if v.shape[-1] != n:
            raise ValueError(f"option vector has {v.shape[-1]} entries, expected {n}")
        return v[..., list(self.option_perm)]


def _flipped_sequence(tree: ParsedTree, flips: frozenset[int], i: int, out: list) -> None:
    out.append(i)
    node = tree.nodes[i]
    if node.is_leaf:
        return
    first, second = (node.right, node.left) if i in flips else (node.left, node.right)
    _flipped_sequence(tree, flips, first, out)
    _flipped_sequence(tree, flips, second, out)


def isomorphism(tree: ParsedTree, flip_set: Iterable[int]) -> TreeIsomorphism:
    """Isomorphism obtained by flipping every internal node in ``flip_set``."""
    flips = frozenset(flip_set)
    for i in flips:
        if not 0 <= i < tree.n_nodes:
            raise TreeSpecError(f"unknown node {i}")
        if tree.nodes[i].is_leaf:
            raise TreeSpecError(f"cannot flip leaf node {i}")

    order: list[int] = []
    _flipped_sequence(tree, flips, tree.root, order)
    node_perm = [0] * tree.n_nodes
    for new, old in enumerate(order):
        node_perm[old] = new

    # Option index travels by leaf position: the p-th leaf of the target gets
    # the index the source gives its p-th leaf.
    position_index = [tree.nodes[i].option for i in tree.leaf_order]
    old_leaves = [i for i in order if tree.nodes[i].is_leaf]
    new_option = {old: position_index[p] for p, old in enumerate(old_leaves)}

    new_nodes = []
    for new, old in enumerate(order):
        node = tree.nodes[old]
        parent = None if node.parent is None else node_perm[node.parent]
        if node.is_leaf:
            new_nodes.append(Node(new, parent, option=new_option[old]))
        else:
            left, right = (node.right, node.left) if old in flips else (node.left, node.right)
            new_nodes.append(Node(new, parent, node_perm[left], node_perm[right]))
    labels = [""] * tree.n_options
    option_perm = [0] * tree.n_options
    for old, k in new_option.items():
        labels[k] = tree.labels[tree.nodes[old].option]
        option_perm[k] = tree.nodes[old].option
    target = ParsedTree(tuple(new_nodes), tuple(labels))

    state_perm = []
    for old in order:
        if tree.nodes[old].is_leaf:
            continue
        r = tree.internal_rank[old]
        swap = 1 if old in flips else 0
        state_perm.extend((2 * r + swap, 2 * r + 1 - swap))

    return TreeIsomorphism(tree, target, flips, tuple(node_perm), tuple(option_perm), tuple(state_perm))


def flip(tree: ParsedTree, internal_node: int) -> TreeIsomorphism:
    """The generator exchanging the left and right descendants of one node."""
    return isomorphism(tree, [internal_node])


def compose(outer: TreeIsomorphism, inner: TreeIsomorphism) -> TreeIsomorphism:
    """``outer`` after ``inner``; ``outer`` must act on ``inner.target``.

    The result is the isomorphism of ``inner.source`` whose flip set is the
    symmetric difference of both flip sets expressed on source node indices.
    """
    if outer.source != inner.target:
        raise TreeSpecError("outer isomorphism does not act on the image of the inner one")
    back = {new: old for old, new in enumerate(inner.node_perm)}
    flips = inner.flip_set.symmetric_difference(back[i] for i in outer.flip_set)
    return isomorphism(inner.source, flips)


def enumerate_group(tree: ParsedTree, cap: int = DEFAULT_GROUP_CAP) -> list[TreeIsomorphism]:
    """All 2**n_i flip-set isomorphisms, identity first, ordered by bitmask over internal ranks."""
    if tree.n_internal > cap:
        raise TreeSpecError(
            f"group has 2**{tree.n_internal} elements; raise the cap above {cap} to enumerate"
        )
    internal = tree.internal_order
    out = []
    for mask in range(2**tree.n_internal):
        out.append(isomorphism(tree, [internal[r] for r in range(len(internal)) if mask >> r & 1]))
    return out


def canonical_form(tree: ParsedTree) -> str:
    """Bracket string that is equal for two trees iff they are isomorphic as rooted trees.

    Level-by-level AHU labelling: nodes of one depth are ranked by the sorted
    tuple of their children's ranks, and the string is emitted with children
    in rank order, so each node costs two characters.
    """
    depth = [0] * tree.n_nodes
    for i in tree.df_order[1:]:
        depth[i] = depth[tree.nodes[i].parent] + 1
    levels: dict[int, list[int]] = {}
    for i, d in enumerate(depth):
        levels.setdefault(d, []).append(i)

    rank = [0] * tree.n_nodes
    ordered_children: dict[int, tuple[int, ...]] = {}
    for d in sorted(levels, reverse=True):
        keys = {}
        for i in levels[d]:
            node = tree.nodes[i]
            if node.is_leaf:
                keys[i] = ()
            else:
                kids = sorted((node.left, node.right), key=lambda c: rank[c])
                ordered_children[i] = tuple(kids)
                keys[i] = tuple(rank[c] for c in kids)
        distinct = sorted(set(keys.values()))
        lookup = {key: r for r, key in enumerate(distinct)}
        for i in levels[d]:
            rank[i] = lookup[keys[i]]

    out = []
    stack: list = [tree.root]
    while stack:
        item = stack.pop()
        if item == ")":
            out.append(")")
            continue
        out.append("(")
        stack.append(")")
        stack.extend(reversed(ordered_children.get(item, ())))
    return "".join(out)
