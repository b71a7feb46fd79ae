"""Value-based decision dynamics on binary-tree parsings of an option set.

Modules
-------
tree
    Parsings, paths, flip isomorphisms, the symmetry group and canonical forms.
node
    The two-option commitment model and its symmetric deadlock.
dynamics
    The stacked tree vector field, z-coordinates and the option-simplex projection.
reduced
    The singular-limit reduction and its closed-form equilibria.
numerics
    Integrators, Newton refinement and stability classification.
analysis
    Scenario runs, parameter sweeps, symmetry audits and equilibrium tables.
"""

from .dynamics import (
    ValueAssignment,
    assign_values,
    deadlock_state,
    m_to_z,
    project,
    project_m,
    projected_rhs,
    tree_jacobian_m,
    tree_rhs_m,
    tree_rhs_z,
    z_to_m,
)
from .node import deadlock_eigenvalues, deadlock_mbar, node_jacobian, seeley_rhs, sigma_crit, v_crit
from .numerics import EquilibriumRecord, IntegratorConfig, Stability, find_equilibrium, integrate
from .reduced import enumerate_reduced_equilibria, projected_equilibria, reduced_node_rhs, reduced_tree_rhs
from .tree import (
    ParsedTree,
    TreeIsomorphism,
    canonical_form,
    compose,
    enumerate_group,
    flip,
    isomorphism,
    load_tree,
    parse_tree,
    path_from_root,
)

__version__ = "0.1.0"
