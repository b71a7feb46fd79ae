"""Parsings and their symmetry group.

A five-option decision is split into four binary choices. Flipping an
internal node exchanges its two subtrees; every subset of flips is a
symmetry, so the group has 2**4 = 16 elements.
"""
from pathlib import Path

import numpy as np

from treedecide import canonical_form, enumerate_group, flip, load_tree, path_from_root

HERE = Path(__file__).parent
tree = load_tree(HERE / "trees" / "five_options.json")

print("nodes in depth-first order:", tree.df_order)
print("internal nodes:", tree.internal_order, " leaves:", tree.option_nodes)
print("labels by option index:", tree.labels)

# Paths carry +1 for a left step and -1 for a right step.
p = path_from_root(tree, 7)
print("path to node 7:", p.nodes, "signs", p.signs)

# %% One flip
g = flip(tree, 0)
print("\nflip at the root")
print("  options now read:", [tree.labels[k] for k in g.option_perm])
print("  stacked pairs move as:", g.state_perm)
x = np.arange(8.0)
print("  a stacked vector 0..7 becomes", g.apply_state(x))

# %% The whole group
group = enumerate_group(tree)
print(f"\n{len(group)} group elements; distinct option orders: {len({h.option_perm for h in group})}")
forms = {canonical_form(h.target) for h in group}
print("canonical form of every flipped tree:", forms)

balanced = load_tree(HERE / "trees" / "balanced_four.json")
print("balanced four-option tree:", canonical_form(balanced))
