"""Decisions on a tree: deadlock, commitment and symmetry of outcomes.

Each internal node runs the two-option model on the mean values of its
subtrees. Commitment to an option is the product of node commitments along
its root path.
"""
from pathlib import Path

import numpy as np

from treedecide import load_tree
from treedecide.analysis import ScenarioSpec, run_scenario
from treedecide.node import deadlock_mbar
from treedecide.tree import enumerate_group

HERE = Path(__file__).parent
tree = load_tree(HERE / "trees" / "balanced_four.json")

# %% Below the critical value the tree stays deadlocked
res = run_scenario(ScenarioSpec(tree, [1.25] * 4, 4.0, "deadlock-perturbed", seed=3))
print("v = 1.25: final option commitments", np.round(res.final_projected, 6))
print("          each leaf sits at mbar^2 =", round(deadlock_mbar(1.25, 4.0) ** 2, 6))

# %% Above it, a weak lean decides the outcome
ic = np.array([0.2, 0.1, 0.3, 0.2, 0.4, 0.2])
res = run_scenario(ScenarioSpec(tree, [5.0] * 4, 4.0, ic))
print("\nv = 5: final option commitments", np.round(res.final_projected, 4))
print(f"       nearest equilibrium ({res.nearest.stability}) at distance {res.distance:.1e}")

# Relabelling the initial state by a tree symmetry relabels the winner.
for g in enumerate_group(tree)[1:4]:
    out = run_scenario(ScenarioSpec(tree, [5.0] * 4, 4.0, g.apply_state(ic)), locate_equilibrium=False)
    print(f"  flips {sorted(g.flip_set)}: winner option {int(np.argmax(out.final_projected[:4])) + 1}")

# %% Output files
out = HERE / "output"
spec = ScenarioSpec(tree, [5.0] * 4, 4.0, ic, csv_path=out / "post_bifurcation.csv", summary_path=out / "post_bifurcation.json")
run_scenario(spec)
print("\nwrote", spec.csv_path, "and", spec.summary_path)
