"""Large values: the reduced model and its closed-form equilibria.

Scaling all values by a gain K separates a fast uncommitted fraction from a
slow difference x = m1 - m2 per node. The slow flow has equilibria at +1,
-1 and, for |alpha| <= 2/3, at -3 alpha / 2.
"""
from pathlib import Path

import numpy as np

from treedecide import assign_values, load_tree
from treedecide.analysis import full_equilibria, list_equilibria, run_ensemble
from treedecide.reduced import node_equilibria

HERE = Path(__file__).parent
tree = load_tree(HERE / "trees" / "balanced_four.json")
values = [100.0, 100.0, 300.0, 100.0]
va = assign_values(tree, values)
print("unfolding parameters per internal node:", np.round(va.alpha, 6))

for alpha in (-0.9, -2 / 3, 0.0, 0.4, 1.0):
    rows = ", ".join(f"{x:+.3f} {s}" for _, x, s, _ in node_equilibria(alpha))
    print(f"alpha = {alpha:+.3f}: {rows}")

# %% Projected equilibria on the option simplex
header, rows = list_equilibria(tree, values, 4.0)
print("\n" + "  ".join(header))
for r in rows:
    print("  ".join(f"{c:.3g}" if isinstance(c, float) else str(c) for c in r))

# %% The full model lands where the reduced model says
ic = np.array([0.2, 0.1, 0.3, 0.2, 0.4, 0.2])
_, mo = run_ensemble(tree, values, 4.0, [ic, ic[[1, 0, 2, 3, 4, 5]]])
print("\nfull model, two initial conditions:", np.round(mo[-1], 4).tolist())

# %% Convergence of the full equilibria as the gain grows
two = load_tree(HERE / "trees" / "two_leaf.json")
for K in (50, 100, 200, 400):
    red, full = next((r, f) for r, f in full_equilibria(two, [1.2, 0.8], 4.0, K) if r.branches == (1,))
    gap = abs(full.coords[0] - full.coords[1] - 1.0)
    print(f"K = {K:3d}: |dm - 1| = {gap:.3e}, K * gap = {K * gap:.4f}")
