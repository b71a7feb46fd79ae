"""The two-option node model and its pitchfork.

With equal values v the node has a symmetric deadlock (mbar, mbar). Its
antisymmetric eigenvalue crosses zero at v_crit(sigma); beyond that the
deadlock is unstable and the node commits to one option.
"""
import numpy as np

from treedecide import deadlock_eigenvalues, deadlock_mbar, seeley_rhs, sigma_crit, v_crit
from treedecide.numerics import IntegratorConfig, find_equilibrium, integrate

sigma = 4.0
v_star = v_crit(sigma)
print(f"critical value at sigma = {sigma}: v* = {v_star:.10f}")
print(f"round trip sigma_crit(v*) = {sigma_crit(v_star):.15f}")
print(f"sigma_crit(2) = {sigma_crit(2.0):.10f} (32/9 = {32 / 9:.10f})")

print("\n   v      mbar      lambda_1     lambda_2")
for v in (1.25, 1.5, v_star, 2.5, 5.0):
    l1, l2 = deadlock_eigenvalues(v, sigma)
    print(f"{v:6.3f}  {deadlock_mbar(v, sigma):.5f}  {l1:+.3e}  {l2:+.3e}")

# %% Below and above the critical value
for v in (1.25, 5.0):
    f = lambda m, v=v: seeley_rhs(m, [v, v], sigma)  # noqa: E731
    traj = integrate(f, [0.32, 0.30], IntegratorConfig(t_final=100.0))
    print(f"\nv = {v}: a slight lean (0.32, 0.30) ends at {np.round(traj.final, 5)}")
    rec = find_equilibrium(f, traj.final)
    print(f"  Newton refinement: {np.round(rec.coords, 8)} ({rec.stability}), eigenvalues {np.round(rec.eigenvalues.real, 4)}")
