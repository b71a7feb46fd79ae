import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DATA, balanced_document, caterpillar_document, trees
from treedecide.tree import (
    ParsedTree,
    TreeSpecError,
    canonical_form,
    compose,
    enumerate_group,
    flip,
    isomorphism,
    load_tree,
    parse_tree,
    path_from_root,
    tree_to_document,
)


@pytest.fixture(scope="module")
def traversal():
    """Five options; internal nodes 0, 1, 2, 6; leaves 3, 4, 5, 7, 8."""
    return load_tree(DATA / "traversal_five.json")


def _rooted_isomorphic(a: ParsedTree, i: int, b: ParsedTree, j: int) -> bool:
    # Exhaustive check over both child matchings at every node.
    na, nb = a.nodes[i], b.nodes[j]
    if na.is_leaf or nb.is_leaf:
        return na.is_leaf and nb.is_leaf
    return (
        _rooted_isomorphic(a, na.left, b, nb.left) and _rooted_isomorphic(a, na.right, b, nb.right)
    ) or (_rooted_isomorphic(a, na.left, b, nb.right) and _rooted_isomorphic(a, na.right, b, nb.left))


def _all_shapes(n):
    if n == 1:
        yield {"option": None}
        return
    for k in range(1, n):
        for left in _all_shapes(k):
            for right in _all_shapes(n - k):
                yield {"left": left, "right": right}


def _labelled(doc, counter):
    if "option" in doc:
        counter[0] += 1
        return {"option": str(counter[0])}
    return {"left": _labelled(doc["left"], counter), "right": _labelled(doc["right"], counter)}


def _leaf_sequence(g):
    """Source node indices of the target's leaves, in target depth-first order."""
    inverse = sorted(range(len(g.node_perm)), key=lambda i: g.node_perm[i])
    return tuple(i for i in inverse if g.source.nodes[i].is_leaf)


class TestParse:
    def test_balanced_layout(self, balanced):
        assert balanced.df_order == tuple(range(7))
        assert balanced.option_nodes == (2, 3, 5, 6)
        assert balanced.internal_order == (0, 1, 4)
        assert balanced.n_internal == 3 and balanced.n_nodes == 7

    def test_two_leaf(self, two_leaf):
        assert two_leaf.n_internal == 1
        assert two_leaf.n_options == 2
        assert two_leaf.internal_order == (0,)

    def test_five_option_layout(self, five):
        assert five.df_order == tuple(range(9))
        assert five.option_nodes == (2, 3, 5, 7, 8)
        assert five.internal_order == (0, 1, 4, 6)

    def test_slots_follow_internal_rank(self, five):
        # pair of internal rank r is (2r, 2r+1), left child first
        assert five.slot[1] == 0 and five.slot[4] == 1
        assert five.slot[2] == 2 and five.slot[3] == 3
        assert five.slot[7] == 6 and five.slot[8] == 7
        assert five.slot[0] == -1

    def test_accepts_json_text(self):
        tree = parse_tree('{"left": {"option": "x"}, "right": {"option": "y"}}')
        assert tree.labels == ("x", "y")

    def test_explicit_indices(self):
        doc = {"left": {"option": "x", "index": 1}, "right": {"option": "y", "index": 0}}
        tree = parse_tree(doc)
        assert tree.nodes[1].option == 1 and tree.labels == ("y", "x")

    @pytest.mark.parametrize(
        "doc, match",
        [
            ({"option": "only"}, "at least two"),
            ({"left": {"option": "a"}}, "exactly two"),
            ({"left": {"option": "a"}, "right": {"option": "a"}}, "duplicate"),
            ({"left": {"option": "a"}, "right": {"option": "b"}, "middle": {}}, "unexpected"),
            ({"left": {"option": "a", "index": 0}, "right": {"option": "b"}}, "every leaf"),
            ({"left": {"option": "a", "index": 0}, "right": {"option": "b", "index": 0}}, "permutation"),
            ({"left": [], "right": {"option": "b"}}, "expected an object"),
        ],
    )
    def test_rejects_invalid(self, doc, match):
        with pytest.raises(TreeSpecError, match=match):
            parse_tree(doc)

    def test_malformed_text(self):
        with pytest.raises(TreeSpecError, match="malformed"):
            parse_tree("{not json")

    def test_document_round_trip(self, five):
        assert parse_tree(tree_to_document(five)) == five
        assert parse_tree(json.dumps(tree_to_document(five, with_index=True))) == five

    @given(trees())
    def test_structural_invariants(self, tree):
        n_o = tree.n_options
        assert tree.n_internal == n_o - 1 and tree.n_nodes == 2 * n_o - 1
        assert sorted(tree.df_order) == list(range(tree.n_nodes)) and tree.df_order[0] == 0
        assert sorted(tree.nodes[i].option for i in tree.leaf_order) == list(range(n_o))
        for node in tree.nodes:
            if not node.is_leaf:
                assert tree.nodes[node.left].parent == node.index
                assert tree.nodes[node.right].parent == node.index
        # preorder: every subtree is a contiguous block starting at its root
        for i in range(tree.n_nodes):
            block = [i] + tree.descendants(i)
            assert block == list(range(i, i + len(block)))


class TestPaths:
    def test_balanced_node5(self, balanced):
        p = path_from_root(balanced, 5)
        assert p.nodes == (0, 4, 5) and p.signs == (-1, 1)

    def test_five_node7(self, five):
        p = path_from_root(five, 7)
        assert p.nodes == (0, 4, 6, 7) and p.signs == (-1, -1, 1)

    def test_root(self, five):
        p = path_from_root(five, 0)
        assert p.nodes == (0,) and p.signs == ()

    def test_unknown_node(self, five):
        with pytest.raises(TreeSpecError):
            path_from_root(five, 9)

    @given(trees())
    def test_path_properties(self, tree):
        total_edges = 0
        for leaf in tree.leaf_order:
            p = path_from_root(tree, leaf)
            assert len(p.signs) == len(p.nodes) - 1
            assert len(p.nodes) <= tree.n_options
            for parent, child, sign in zip(p.nodes, p.nodes[1:], p.signs):
                node = tree.nodes[parent]
                assert child == (node.left if sign == 1 else node.right)
            total_edges += len(p.nodes) - 1
        # every edge lies on the path of each leaf below it; count edges once instead
        assert sum(1 for n in tree.nodes if n.parent is not None) == 2 * tree.n_options - 2
        assert total_edges == sum(len(tree.options_below(i)) for i in range(1, tree.n_nodes))


class TestFlips:
    def test_flip_root_reorders_leaves(self, traversal):
        g = flip(traversal, 0)
        order = sorted(range(9), key=lambda i: g.node_perm[i])
        assert tuple(order) == (0, 6, 7, 8, 1, 2, 3, 4, 5)
        assert _leaf_sequence(g) == (7, 8, 3, 4, 5)

    def test_flip_inner_node(self, traversal):
        g = flip(traversal, 1)
        order = sorted(range(9), key=lambda i: g.node_perm[i])
        assert tuple(order) == (0, 1, 5, 2, 3, 4, 6, 7, 8)
        assert _leaf_sequence(g) == (5, 3, 4, 7, 8)

    def test_flip_exchanges_option_sets(self, traversal):
        g = flip(traversal, 0)
        # options sitting in the target slots, by label
        assert [traversal.labels[k] for k in g.option_perm] == ["s", "t", "p", "q", "r"]

    def test_flip_twice_is_identity(self, five):
        for i in five.internal_order:
            g = flip(five, i)
            back = compose(flip(g.target, g.node_perm[i]), g)
            assert back.is_identity
            assert back.target == five
            assert back.state_perm == tuple(range(8))
            assert back.option_perm == tuple(range(5))
            assert back.node_perm == tuple(range(9))

    def test_flip_leaf_rejected(self, five):
        with pytest.raises(TreeSpecError, match="leaf"):
            flip(five, 2)

    def test_root_fixed(self, five):
        for g in enumerate_group(five):
            assert g.node_perm[0] == 0

    def test_state_perm_structure(self, five):
        # flipping node i swaps its own pair and moves descendant pairs as blocks
        for i in five.internal_order:
            g = flip(five, i)
            r = five.internal_rank[i]
            inner = set(five.descendants(i)) & set(five.internal_order)
            inner_slots = {2 * five.internal_rank[j] for j in inner}
            moved = set()
            for k in range(0, 8, 2):
                pair = g.state_perm[k : k + 2]
                src = min(pair)
                assert src % 2 == 0 and max(pair) == src + 1
                if src // 2 == r:
                    assert pair == (2 * r + 1, 2 * r)
                else:
                    assert pair == (src, src + 1)
                if src != k:
                    moved.add(src)
            assert moved <= inner_slots

    def test_apply_state_and_options(self, balanced):
        g = flip(balanced, 0)
        x = np.arange(6.0)
        assert np.array_equal(g.apply_state(x), [1, 0, 4, 5, 2, 3])
        assert np.array_equal(g.apply_options(np.arange(4.0)), [2, 3, 0, 1])
        assert np.array_equal(g.apply_options(np.arange(5.0)), [2, 3, 0, 1, 4])
        with pytest.raises(ValueError):
            g.apply_state(np.zeros(5))


class TestGroup:
    @pytest.mark.parametrize("name, size", [("two_leaf", 2), ("balanced", 8), ("five", 16)])
    def test_sizes(self, request, name, size):
        group = enumerate_group(request.getfixturevalue(name))
        assert len(group) == size
        assert group[0].is_identity
        assert len({g.flip_set for g in group}) == size

    def test_two_leaf_elements(self, two_leaf):
        ident, swap = enumerate_group(two_leaf)
        assert ident.state_perm == (0, 1) and swap.state_perm == (1, 0)
        assert swap.option_perm == (1, 0)

    def test_cap(self):
        tree = parse_tree(caterpillar_document(6))
        with pytest.raises(TreeSpecError, match="cap"):
            enumerate_group(tree, cap=4)
        assert len(enumerate_group(tree, cap=5)) == 32

    def test_balanced_elements_are_automorphisms(self, balanced):
        assert all(g.is_automorphism for g in enumerate_group(balanced))

    def test_distinct_option_permutations(self, five):
        perms = {g.option_perm for g in enumerate_group(five)}
        assert len(perms) == 16

    @settings(max_examples=40, deadline=None)
    @given(trees(2, 6), st.data())
    def test_closure(self, tree, data):
        group = enumerate_group(tree)
        by_flips = {g.flip_set: g for g in group}
        a = data.draw(st.sampled_from(group))
        b_flips = data.draw(st.sampled_from(group)).flip_set
        # an element acting on a's image, expressed through a's node relabelling
        b = isomorphism(a.target, {a.node_perm[i] for i in b_flips})
        c = compose(b, a)
        assert c.flip_set in by_flips
        ref = by_flips[c.flip_set]
        x = np.arange(2 * tree.n_internal, dtype=float)
        assert np.array_equal(b.apply_state(a.apply_state(x)), ref.apply_state(x))
        v = np.arange(tree.n_options, dtype=float)
        assert np.array_equal(b.apply_options(a.apply_options(v)), ref.apply_options(v))
        assert c.target == ref.target == b.target

    @given(trees(2, 7))
    def test_siblings_stay_siblings(self, tree):
        for g in enumerate_group(tree):
            for node in tree.nodes:
                if node.is_leaf:
                    continue
                a, b = tree.nodes[node.left], tree.nodes[node.right]
                if a.is_leaf and b.is_leaf:
                    pa = g.target.nodes[g.node_perm[a.index]].parent
                    pb = g.target.nodes[g.node_perm[b.index]].parent
                    assert pa == pb

    @given(trees(2, 7))
    def test_involution(self, tree):
        for g in enumerate_group(tree):
            back = compose(isomorphism(g.target, {g.node_perm[i] for i in g.flip_set}), g)
            assert back.is_identity and back.target == tree


class TestCanonicalForm:
    def test_flip_preserves(self, traversal):
        assert canonical_form(flip(traversal, 0).target) == canonical_form(traversal)

    def test_balanced_vs_caterpillar(self):
        a = parse_tree(balanced_document(2))
        b = parse_tree(caterpillar_document(4))
        assert canonical_form(a) != canonical_form(b)
        assert not _rooted_isomorphic(a, 0, b, 0)

    def test_flip_chain(self, five):
        tree = five
        rng = np.random.default_rng(3)
        for _ in range(25):
            node = int(rng.choice(tree.internal_order))
            tree = flip(tree, node).target
        assert canonical_form(tree) == canonical_form(five)

    def test_ascii_brackets(self, five):
        form = canonical_form(five)
        assert set(form) <= {"(", ")"} and len(form) == 2 * five.n_nodes

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_matches_exhaustive_oracle(self, n):
        shapes = [parse_tree(_labelled(s, [0])) for s in _all_shapes(n)]
        for a, b in itertools.combinations_with_replacement(shapes, 2):
            assert (canonical_form(a) == canonical_form(b)) == _rooted_isomorphic(a, 0, b, 0)

    @given(trees(2, 8))
    def test_group_invariance(self, tree):
        form = canonical_form(tree)
        for g in enumerate_group(tree):
            assert canonical_form(g.target) == form

    @pytest.mark.parametrize("n_internal", range(1, 7))
    def test_group_order(self, n_internal):
        for doc in (caterpillar_document(n_internal + 1),):
            assert len(enumerate_group(parse_tree(doc))) == 2**n_internal
