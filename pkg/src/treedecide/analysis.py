"""Scenario runs, bifurcation sweeps, equivariance audits and equilibrium tables.

These are the operations behind the command line; each one takes plain
Python inputs and returns a result object, writing files only when paths
are given.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .dynamics import (
    ValueAssignment,
    assign_values,
    in_simplex,
    m_to_z,
    project_m,
    random_state,
    tree_jacobian_m,
    tree_rhs_m,
    tree_rhs_z,
)
from .node import deadlock_mbar, sigma_crit
from .numerics import (
    ConvergenceError,
    EquilibriumRecord,
    IntegrationError,
    IntegratorConfig,
    Stability,
    Trajectory,
    find_equilibrium,
    integrate,
)
from .reduced import enumerate_reduced_equilibria, projected_equilibria, seed_state
from .tree import ParsedTree, enumerate_group, load_tree, parse_tree

log = logging.getLogger(__name__)

__all__ = [
    "SimplexViolation",
    "ScenarioSpec",
    "ScenarioResult",
    "run_scenario",
    "run_ensemble",
    "initial_state",
    "full_equilibria",
    "SweepSpec",
    "SweepResult",
    "run_sweep",
    "AuditReport",
    "audit_equivariance",
    "list_equilibria",
    "write_csv",
    "AUDIT_TOL",
    "SIMPLEX_SLACK",
]

AUDIT_TOL = 1e-10
SIMPLEX_SLACK = 1e-9


class SimplexViolation(IntegrationError):
    pass


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: str | Path, header: list[str], rows) -> None:
    """Write UTF-8, LF-terminated CSV atomically (temp file + rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(c) for c in row])
    _atomic_write(path, buf.getvalue())


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_json(path: str | Path, doc: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write(path, json.dumps(doc, indent=2, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, Stability):
        return o.value
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _as_tree(tree) -> ParsedTree:
    if isinstance(tree, ParsedTree):
        return tree
    if isinstance(tree, dict):
        return parse_tree(tree)
    return load_tree(tree)


# -- scenarios -----------------------------------------------------------------


@dataclass
class ScenarioSpec:
    """One integration of the tree dynamics.

    ``initial`` is a stacked pair vector, ``"deadlock"``, or
    ``"deadlock-perturbed"`` (deadlock plus a uniform perturbation of size
    ``perturbation`` drawn with ``seed``).
    """

    tree: ParsedTree | str | Path | dict
    values: list[float]
    sigma: float = 4.0
    initial: object = "deadlock-perturbed"
    seed: int = 0
    perturbation: float = 1e-2
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    csv_path: str | Path | None = None
    summary_path: str | Path | None = None

    def __post_init__(self):
        self.tree = _as_tree(self.tree)
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


def initial_state(tree: ParsedTree, va: ValueAssignment, sigma: float, initial, seed: int = 0, perturbation: float = 1e-2) -> np.ndarray:
    if isinstance(initial, str):
        if initial not in ("deadlock", "deadlock-perturbed"):
            raise ValueError(f"unknown initial-condition preset {initial!r}")
        m = np.repeat(deadlock_mbar(va.vbar, sigma), 2)
        if initial == "deadlock-perturbed":
            m = m + perturbation * np.random.default_rng(seed).uniform(-1.0, 1.0, m.size)
    else:
        m = np.asarray(initial, dtype=float).reshape(-1)
        if m.size != 2 * tree.n_internal:
            raise ValueError(f"initial state needs {2 * tree.n_internal} entries, got {m.size}")
    if not in_simplex(m, 0.0):
        raise ValueError("initial state is outside the product of 2-simplices")
    return m


def full_equilibria(tree: ParsedTree, values, sigma: float, gain: float = 1.0) -> list[tuple[EquilibriumRecord, EquilibriumRecord]]:
    """Newton-refine the full model (values times ``gain``) from every reduced equilibrium.

    Returns ``(reduced, full)`` pairs; seeds whose refinement fails are
    logged and skipped.
    """
    va = values if isinstance(values, ValueAssignment) else assign_values(tree, values)
    scaled = va.scaled(gain)
    out = []
    for rec in enumerate_reduced_equilibria(tree, va, sigma):
        seed = seed_state(rec.coords, va, sigma, gain)
        try:
            full = find_equilibrium(
                lambda m: tree_rhs_m(m, scaled, sigma),
                seed,
                jacobian=lambda m: tree_jacobian_m(m, scaled, sigma),
            )
        except ConvergenceError as exc:
            log.warning("Newton failed from reduced seed %s: %s", rec.branches, exc)
            continue
        out.append((rec, full))
    return out


def _candidate_equilibria(tree, va, sigma) -> list[EquilibriumRecord]:
    seeds = [np.repeat(deadlock_mbar(va.vbar, sigma), 2)]
    seeds += [seed_state(r.coords, va, sigma, 1.0) for r in enumerate_reduced_equilibria(tree, va, sigma)]
    found: list[EquilibriumRecord] = []
    for s in seeds:
        try:
            rec = find_equilibrium(
                lambda m: tree_rhs_m(m, va, sigma), s, jacobian=lambda m: tree_jacobian_m(m, va, sigma)
            )
        except ConvergenceError:
            continue
        if not in_simplex(rec.coords, SIMPLEX_SLACK):
            continue
        if all(np.max(np.abs(rec.coords - f.coords)) > 1e-8 for f in found):
            found.append(rec)
    return found


@dataclass
class ScenarioResult:
    trajectory: Trajectory
    projected: np.ndarray
    nearest: EquilibriumRecord | None
    distance: float
    summary: dict

    @property
    def final_m(self) -> np.ndarray:
        return self.trajectory.final

    @property
    def final_projected(self) -> np.ndarray:
        return self.projected[-1]


def run_scenario(spec: ScenarioSpec, locate_equilibrium: bool = True) -> ScenarioResult:
    """Integrate the m-dynamics, project to the option simplex and summarise."""
    tree = spec.tree
    va = assign_values(tree, spec.values)
    m0 = initial_state(tree, va, spec.sigma, spec.initial, spec.seed, spec.perturbation)
    traj = integrate(
        lambda m: tree_rhs_m(m, va, spec.sigma),
        m0,
        spec.integrator,
        meta={"values": list(map(float, va.option_values)), "sigma": spec.sigma},
    )
    bad = [k for k, m in enumerate(traj.x) if not in_simplex(m, SIMPLEX_SLACK)]
    if bad:
        k = bad[0]
        raise SimplexViolation(f"state left the simplex at t={traj.t[k]:g}", traj.t[k], traj.x[k])
    m_o = project_m(tree, traj.x)

    nearest, distance = None, float("nan")
    table = []
    if locate_equilibrium:
        cands = _candidate_equilibria(tree, va, spec.sigma)
        for rec in cands:
            d = float(np.max(np.abs(project_m(tree, rec.coords) - m_o[-1])))
            table.append({"m": rec.coords, "m_o": project_m(tree, rec.coords), "stability": rec.stability, "distance": d, "residual": rec.residual})
            if nearest is None or d < distance:
                nearest, distance = rec, d

    summary = {
        "tree": _tree_doc(tree),
        "values": list(map(float, va.option_values)),
        "sigma": spec.sigma,
        "initial": m0,
        "initial_preset": spec.initial if isinstance(spec.initial, str) else None,
        "seed": spec.seed,
        "perturbation": spec.perturbation,
        "integrator": asdict(spec.integrator),
        "final_m": traj.final,
        "final_m_o": m_o[-1],
        "final_residual": float(np.max(np.abs(tree_rhs_m(traj.final, va, spec.sigma)))),
        "nearest_equilibrium": None if nearest is None else {"m": nearest.coords, "stability": nearest.stability, "distance": distance},
        "equilibria": table,
    }
    if spec.csv_path:
        header = ["t"] + [f"m_o_{k + 1}" for k in range(tree.n_options)] + ["m_o_U"]
        write_csv(spec.csv_path, header, ([t, *row] for t, row in zip(traj.t, m_o)))
    if spec.summary_path:
        _write_json(spec.summary_path, summary)
    return ScenarioResult(traj, m_o, nearest, distance, summary)


def run_ensemble(tree, values, sigma: float, initials, integrator: IntegratorConfig | None = None) -> tuple[Trajectory, np.ndarray]:
    """Integrate many initial states of one scenario in a single batched solve.

    Returns the trajectory (samples, batch, 2 n_i) and the projected states
    (samples, batch, n_o + 1). Raises SimplexViolation if any sample leaves
    the simplex by more than the slack.
    """
    tree = _as_tree(tree)
    va = assign_values(tree, values)
    m0 = np.atleast_2d(np.asarray(initials, dtype=float))
    for k, m in enumerate(m0):
        if m.size != 2 * tree.n_internal or not in_simplex(m, 0.0):
            raise ValueError(f"initial state {k} is not a point of the state space")
    traj = integrate(lambda m: tree_rhs_m(m, va, sigma), m0, integrator or IntegratorConfig())
    for k, m in enumerate(traj.x):
        if not in_simplex(m, SIMPLEX_SLACK):
            raise SimplexViolation(f"a state left the simplex at t={traj.t[k]:g}", traj.t[k], m)
    return traj, project_m(tree, traj.x)


def _tree_doc(tree: ParsedTree) -> dict:
    from .tree import tree_to_document

    return tree_to_document(tree, with_index=True)


# -- sweeps --------------------------------------------------------------------


@dataclass
class SweepSpec:
    """Grid sweep of the common option value ``v`` or of ``sigma``.

    ``fixed`` is the other parameter. ``seeds`` are extra stacked states to
    track alongside the deadlock branch.
    """

    tree: ParsedTree | str | Path | dict
    parameter: str = "v"
    start: float = 1.2
    stop: float = 3.0
    points: int = 200
    fixed: float = 4.0
    seeds: list = field(default_factory=list)
    csv_path: str | Path | None = None

    def __post_init__(self):
        self.tree = _as_tree(self.tree)
        if self.parameter not in ("v", "sigma"):
            raise ValueError("parameter must be 'v' or 'sigma'")
        if not (0 < self.start < self.stop):
            raise ValueError("sweep range must be positive and increasing")
        if self.points < 2:
            raise ValueError("a sweep needs at least two grid points")
        if not self.fixed > 0:
            raise ValueError("fixed parameter must be positive")


@dataclass
class SweepResult:
    grid: np.ndarray
    rows: list
    leading: np.ndarray
    brackets: list[tuple[float, float]]
    critical: list[float]
    lost: dict = field(default_factory=dict)


def _field_at(spec: SweepSpec, p: float):
    v, sigma = (p, spec.fixed) if spec.parameter == "v" else (spec.fixed, p)
    va = assign_values(spec.tree, np.full(spec.tree.n_options, v))
    return va, sigma


def _solve_at(spec: SweepSpec, p: float, guess) -> EquilibriumRecord:
    va, sigma = _field_at(spec, p)
    return find_equilibrium(lambda m: tree_rhs_m(m, va, sigma), guess, jacobian=lambda m: tree_jacobian_m(m, va, sigma))


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Track equilibria across the grid by Newton continuation from the previous point.

    Branch 0 is the symmetric deadlock. A sign change of its leading
    eigenvalue marks the pitchfork; each bracket is polished by root finding
    on the leading eigenvalue.
    """
    grid = np.linspace(spec.start, spec.stop, spec.points)
    va0, sigma0 = _field_at(spec, grid[0])
    branches = {0: np.repeat(deadlock_mbar(va0.vbar, sigma0), 2)}
    for k, s in enumerate(spec.seeds, start=1):
        branches[k] = np.asarray(s, dtype=float)
    rows, leading, lost = [], [], {}
    for p in grid:
        for bid in list(branches):
            try:
                rec = _solve_at(spec, p, branches[bid])
                if not in_simplex(rec.coords, SIMPLEX_SLACK):
                    raise ConvergenceError("Newton converged outside the state space", rec.coords, rec.residual)
            except ConvergenceError as exc:
                lost[bid] = {"parameter": float(p), "last": branches.pop(bid), "reason": str(exc)}
                log.warning("lost branch %d at %s=%g", bid, spec.parameter, p)
                continue
            branches[bid] = rec.coords
            rows.append([float(p), bid, *rec.coords, rec.stability.value, rec.leading])
            if bid == 0:
                leading.append(rec.leading)
    leading = np.array(leading + [np.nan] * (grid.size - len(leading)))

    brackets, critical = [], []
    for k in range(grid.size - 1):
        a, b = leading[k], leading[k + 1]
        if np.isfinite(a) and np.isfinite(b) and np.sign(a) != np.sign(b):
            lo, hi = float(grid[k]), float(grid[k + 1])
            brackets.append((lo, hi))
            guess = [row for row in rows if row[0] == grid[k] and row[1] == 0][0][2:-2]
            guess = np.array(guess, dtype=float)

            def lead(p, guess=guess):
                return _solve_at(spec, p, guess).leading

            critical.append(brentq(lead, lo, hi, xtol=1e-13, rtol=1e-13))

    if spec.csv_path:
        n = 2 * spec.tree.n_internal
        header = [spec.parameter, "equilibrium"] + [f"m_{k + 1}" for k in range(n)] + ["stability", "leading_re"]
        write_csv(spec.csv_path, header, rows)
    return SweepResult(grid, rows, leading, brackets, critical, lost)


def check_sigma_crit_onto(samples=(0.01, 0.5, 4.0, 100.0)) -> bool:
    """Cheap startup check that the critical curve reaches each sample sigma."""
    vs = np.geomspace(1.0 + 1e-6, 1e6, 2000)
    s = sigma_crit(vs)
    return all(s.min() < x < s.max() for x in samples)


# -- equivariance audit --------------------------------------------------------


@dataclass
class AuditReport:
    group_size: int
    trials: int
    permuted_m: float
    permuted_z: float
    fixed_m: float
    fixed_z: float
    symmetric_values: bool
    tol: float = AUDIT_TOL

    @property
    def passed(self) -> bool:
        ok = max(self.permuted_m, self.permuted_z) <= self.tol
        if self.symmetric_values:
            ok = ok and max(self.fixed_m, self.fixed_z) <= self.tol
        return ok

    @property
    def broken_symmetry(self) -> bool:
        return not self.symmetric_values

    def lines(self) -> list[str]:
        out = [
            f"group elements: {self.group_size}, random states: {self.trials}",
            f"value-permuting residual  m: {self.permuted_m:.3e}  z: {self.permuted_z:.3e}",
            f"value-fixed residual      m: {self.fixed_m:.3e}  z: {self.fixed_z:.3e}"
            + ("" if self.symmetric_values else "  (broken symmetry: values are not all equal)"),
            "PASS" if self.passed else "FAIL",
        ]
        return out


def audit_equivariance(tree, values, sigma: float = 4.0, trials: int = 50, seed: int = 0, cap: int = 20) -> AuditReport:
    """Max residuals of ``F_T'(g x, g v) - g F_T(x, v)`` over the whole group.

    ``T'`` is the flipped tree, which equals ``T`` whenever the flip is an
    automorphism of the indexed shape. The value-fixed variant keeps the
    original option values on ``T'``.
    """
    tree = _as_tree(tree)
    values = np.asarray(values, dtype=float)
    va = assign_values(tree, values)
    group = enumerate_group(tree, cap)
    rng = np.random.default_rng(seed)
    states = random_state(tree, rng, size=trials, margin=1e-3)
    zs = m_to_z(tree, states)
    fm = tree_rhs_m(states, va, sigma)
    fz = tree_rhs_z(tree, zs, va, sigma)
    res = dict(pm=0.0, pz=0.0, fm=0.0, fz=0.0)
    for g in group:
        va_perm = assign_values(g.target, g.apply_options(values))
        va_fixed = assign_values(g.target, values)
        gm, gz = g.apply_state(states), g.apply_state(zs)
        want_m, want_z = g.apply_state(fm), g.apply_state(fz)
        res["pm"] = max(res["pm"], float(np.max(np.abs(tree_rhs_m(gm, va_perm, sigma) - want_m))))
        res["pz"] = max(res["pz"], float(np.max(np.abs(tree_rhs_z(g.target, gz, va_perm, sigma) - want_z))))
        res["fm"] = max(res["fm"], float(np.max(np.abs(tree_rhs_m(gm, va_fixed, sigma) - want_m))))
        res["fz"] = max(res["fz"], float(np.max(np.abs(tree_rhs_z(g.target, gz, va_fixed, sigma) - want_z))))
    symmetric = bool(np.all(values == values[0]))
    return AuditReport(len(group), trials, res["pm"], res["pz"], res["fm"], res["fz"], symmetric)


# -- equilibrium tables --------------------------------------------------------


def list_equilibria(tree, values, sigma: float = 4.0, mode: str = "reduced", gain: float = 1.0) -> tuple[list[str], list[list]]:
    """Equilibrium table as ``(header, rows)``.

    ``reduced``: one row per distinct option-simplex equilibrium of the
    singular limit. ``full``: one row per reduced equilibrium, Newton-refined
    in the full model with values scaled by ``gain``, with the sup-norm gap
    between the refined node differences and the reduced ones.
    """
    tree = _as_tree(tree)
    va = assign_values(tree, values)
    n = tree.n_options
    mo_cols = [f"m_o_{k + 1}" for k in range(n)] + ["m_o_U"]
    if mode == "reduced":
        header = ["id", *mo_cols, "stability", "branches", "preimages"]
        rows = []
        for k, eq in enumerate(projected_equilibria(tree, va, sigma)):
            rep = next((r for r in eq.records if r.stability == eq.stability), eq.records[0])
            rows.append([k, *eq.m_o, eq.stability.value, _branch_str(rep.branches), len(eq.records)])
        return header, rows
    if mode == "full":
        x_cols = [f"x_{r + 1}" for r in range(tree.n_internal)]
        header = ["id", "branches", "reduced_stability", *x_cols, *[f"dm_{r + 1}" for r in range(tree.n_internal)], *mo_cols, "stability", "gap", "residual"]
        rows = []
        for k, (red, full) in enumerate(full_equilibria(tree, va, sigma, gain)):
            dm = full.coords[0::2] - full.coords[1::2]
            gap = float(np.max(np.abs(dm - red.coords)))
            rows.append([k, _branch_str(red.branches), red.stability.value, *red.coords, *dm, *project_m(tree, full.coords), full.stability.value, gap, full.residual])
        return header, rows
    raise ValueError(f"unknown mode {mode!r}")


def _branch_str(branches) -> str:
    return " ".join({1: "+", -1: "-", 0: "i"}[b] for b in branches)
