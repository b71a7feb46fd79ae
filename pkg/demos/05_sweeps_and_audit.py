"""Parameter sweeps, the symmetry audit and the command line.

The same operations are available as ``treedecide sweep``, ``audit``,
``equilibria``, ``simulate`` and ``isomorphisms``; this script calls the
library and then the CLI entry point.
"""
from pathlib import Path

from treedecide import load_tree
from treedecide.analysis import SweepSpec, audit_equivariance, run_sweep
from treedecide.cli import main

HERE = Path(__file__).parent
trees = HERE / "trees"
two = load_tree(trees / "two_leaf.json")

# %% Sweeping the common value at sigma = 4
res = run_sweep(SweepSpec(two, "v", 1.2, 3.0, 200, 4.0, csv_path=HERE / "output" / "sweep_v.csv"))
print("bracket", res.brackets[0], "-> critical v", res.critical[0])

# %% Sweeping sigma at v = 2
res = run_sweep(SweepSpec(two, "sigma", 1.0, 6.0, 200, 2.0))
print("bracket", res.brackets[0], "-> critical sigma", res.critical[0], "(32/9 =", 32 / 9, ")")

# %% Symmetry audit
balanced = load_tree(trees / "balanced_four.json")
for values in ([1, 1, 1, 1], [1, 2, 3, 4]):
    print(f"\naudit with values {values}")
    print("\n".join(audit_equivariance(balanced, values).lines()))

# %% Command line
print("\n$ treedecide equilibria --tree balanced_four.json --values 5,5,5,5")
main(["equilibria", "--tree", str(trees / "balanced_four.json"), "--values", "5,5,5,5"])
print("\n$ treedecide isomorphisms --tree two_leaf.json")
main(["isomorphisms", "--tree", str(trees / "two_leaf.json")])
