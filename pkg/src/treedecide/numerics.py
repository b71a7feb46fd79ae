"""Integration, equilibrium refinement and linear stability for autonomous fields.

Vector fields are plain callables ``f(x) -> dx/dt`` on 1-D arrays.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

__all__ = [
    "TOL_EIG",
    "Stability",
    "IntegratorConfig",
    "Trajectory",
    "IntegrationError",
    "ConvergenceError",
    "EquilibriumRecord",
    "integrate",
    "numerical_jacobian",
    "eigenvalues",
    "classify",
    "find_equilibrium",
]

TOL_EIG = 1e-8

VectorField = Callable[[np.ndarray], np.ndarray]


class Stability(str, enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    NON_HYPERBOLIC = "non-hyperbolic"

    def __str__(self) -> str:
        return self.value


class IntegrationError(RuntimeError):
    def __init__(self, message: str, t: float | None = None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, state=None, residual: float | None = None):
        super().__init__(message)
        self.state = state
        self.residual = residual


@dataclass
class IntegratorConfig:
    """``method`` is ``"rk4"`` (fixed step ``step``) or ``"rk45"`` (adaptive,
    ``rtol``/``atol``, steps no longer than ``stride``). Samples are stored
    every ``stride`` time units."""

    method: str = "rk45"
    t_final: float = 100.0
    step: float = 1e-3
    rtol: float = 1e-8
    atol: float = 1e-10
    stride: float = 0.1

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown integration method {self.method!r}")
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if not (self.step > 0 and self.rtol > 0 and self.atol > 0 and self.stride > 0):
            raise ValueError("step, tolerances and stride must be positive")


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.x[-1]


def _finite_or_raise(t, x):
    if not np.all(np.isfinite(x)):
        raise IntegrationError(f"non-finite state at t={t:g}", t, np.array(x))


def _rk4(f: VectorField, x0: np.ndarray, cfg: IntegratorConfig) -> Trajectory:
    n_steps = int(round(cfg.t_final / cfg.step))
    h = cfg.t_final / n_steps
    every = max(1, int(round(cfg.stride / h)))
    ts, xs = [0.0], [x0.copy()]
    x = x0.copy()
    # Overflow surfaces as an IntegrationError at the next sample instead of a warning.
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n_steps + 1):
            k1 = f(x)
            k2 = f(x + 0.5 * h * k1)
            k3 = f(x + 0.5 * h * k2)
            k4 = f(x + h * k3)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if k % every == 0 or k == n_steps:
                _finite_or_raise(k * h, x)
                ts.append(k * h)
                xs.append(x.copy())
    return Trajectory(np.array(ts), np.array(xs))


def _rk45(f: VectorField, x0: np.ndarray, cfg: IntegratorConfig) -> Trajectory:
    def rhs(t, x):
        dx = f(x)
        if not np.all(np.isfinite(dx)):
            raise IntegrationError(f"non-finite rate at t={t:g}", t, np.array(x))
        return dx

    n = max(1, int(round(cfg.t_final / cfg.stride)))
    t_eval = np.linspace(0.0, cfg.t_final, n + 1)
    # Capping the step at the output stride stops the controller from taking
    # huge steps near equilibria, where the error estimate is almost zero.
    sol = solve_ivp(
        rhs, (0.0, cfg.t_final), x0, method="RK45", t_eval=t_eval, rtol=cfg.rtol, atol=cfg.atol, max_step=cfg.stride
    )
    if not sol.success:
        t_fail = sol.t[-1] if sol.t.size else 0.0
        state = sol.y[:, -1] if sol.y.size else x0
        raise IntegrationError(f"integration failed at t={t_fail:g}: {sol.message}", t_fail, state)
    return Trajectory(sol.t, sol.y.T.copy())


def integrate(f: VectorField, x0, cfg: IntegratorConfig | None = None, meta: dict | None = None) -> Trajectory:
    """Integrate ``dx/dt = f(x)`` from ``x0`` over ``[0, cfg.t_final]``.

    ``x0`` may be a ``(batch, n)`` array when ``f`` accepts batched states;
    the trajectory then has shape ``(n_samples, batch, n)``.

    Raises IntegrationError on non-finite states or step-size failure.
    """
    cfg = cfg or IntegratorConfig()
    x0 = np.asarray(x0, dtype=float).copy()
    _finite_or_raise(0.0, x0)
    shape = x0.shape
    if x0.ndim == 2:
        # A batch of independent initial states is integrated as one system,
        # so stiff runs pay the step-count cost once for the whole batch.
        flat_f = f

        def f(x):
            return np.asarray(flat_f(x.reshape(shape))).reshape(-1)

        x0 = x0.reshape(-1)
    elif x0.ndim != 1:
        raise ValueError("initial state must be a vector or a (batch, n) array")
    traj = _rk4(f, x0, cfg) if cfg.method == "rk4" else _rk45(f, x0, cfg)
    traj.x = traj.x.reshape((-1,) + shape)
    traj.meta.update(meta or {})
    return traj


def numerical_jacobian(f: VectorField, x, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian."""
    x = np.asarray(x, dtype=float)
    cols = []
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2.0 * h))
    return np.stack(cols, axis=-1)


def eigenvalues(a) -> np.ndarray:
    """Full complex spectrum; closed form for 2x2, LAPACK otherwise."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("eigenvalues needs a square matrix")
    if a.shape == (2, 2):
        # ((a - d)/2)^2 + bc equals tr^2/4 - det without the cancellation.
        half_tr = 0.5 * (a[0, 0] + a[1, 1])
        half_gap = 0.5 * (a[0, 0] - a[1, 1])
        root = np.sqrt(complex(half_gap * half_gap + a[0, 1] * a[1, 0]))
        return np.array([half_tr + root, half_tr - root])
    return np.linalg.eigvals(a).astype(complex)


def classify(eigs, tol: float = TOL_EIG) -> Stability:
    re = np.real(np.asarray(eigs))
    if np.all(re < -tol):
        return Stability.STABLE
    if np.any(re > tol):
        return Stability.UNSTABLE
    return Stability.NON_HYPERBOLIC


@dataclass
class EquilibriumRecord:
    """An equilibrium in reduced (``x``) or full (``m``) coordinates.

    ``branches`` is set for reduced records: per internal node +1, -1, or 0
    for the interior equilibrium.
    """

    coords: np.ndarray
    stability: Stability
    eigenvalues: np.ndarray | None = None
    branches: tuple[int, ...] | None = None
    mode: str = "full"
    residual: float = 0.0
    iterations: int = 0

    @property
    def leading(self) -> float:
        if self.eigenvalues is None or len(self.eigenvalues) == 0:
            return float("nan")
        return float(np.max(np.real(self.eigenvalues)))


def find_equilibrium(
    f: VectorField,
    x_guess,
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None,
    tol: float = 1e-12,
    max_iter: int = 100,
    tol_eig: float = TOL_EIG,
    history: list | None = None,
) -> EquilibriumRecord:
    """Damped Newton refinement with eigenvalue classification.

    Steps are halved until the residual sup-norm does not increase, so
    accepted iterates have non-increasing residual. If ``history`` is a list,
    the residual of every accepted iterate is appended to it.
    """
    jac = jacobian or (lambda y: numerical_jacobian(f, y))
    x = np.asarray(x_guess, dtype=float).copy()
    r = np.asarray(f(x))
    res = float(np.max(np.abs(r)))
    if history is not None:
        history.append(res)
    it = 0
    while res >= tol and it < max_iter:
        it += 1
        J = jac(x)
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(J, -r, rcond=None)[0]
        lam = 1.0
        while True:
            x_new = x + lam * dx
            r_new = np.asarray(f(x_new))
            res_new = float(np.max(np.abs(r_new)))
            if np.isfinite(res_new) and res_new <= res:
                break
            lam *= 0.5
            if lam < 1e-10:
                raise ConvergenceError(f"line search stalled at residual {res:.3e}", x, res)
        x, r, res = x_new, r_new, res_new
        if history is not None:
            history.append(res)
    if res >= tol:
        raise ConvergenceError(f"no convergence after {max_iter} iterations (residual {res:.3e})", x, res)
    eigs = eigenvalues(jac(x))
    return EquilibriumRecord(x, classify(eigs, tol_eig), eigs, residual=res, iterations=it)
