# %% [markdown]
# # From quantum thermal states to the classical Gibbs measure
#
# As eps -> 0 the Gibbs state of the Bose-Hubbard Hamiltonian converges to
# the classical Gibbs measure: characteristic functions omega_eps(W(f))
# approach mu(exp(i sqrt2 Re<f,u>)), and commutators [W(g), W(f)]/(i eps)
# approach Poisson brackets.  This script runs the sweeps on one vertex.

# %%
from kmslab.harness import (
    SweepConfig,
    characteristic_sweep,
    commutator_limit_check,
    loglog_fit,
    main_identity_check,
    moment_convergence_check,
    norm_estimate_check,
)

cfg = SweepConfig(epsilons=(0.2, 0.1, 0.05, 0.025), n_scale=2.0)


def show(title, rows):
    print(title)
    for r in rows:
        print(f"  eps={r.epsilon:<6} quantum {r.quantum_value:.6f}  classical {r.classical_value:.6f}  gap {r.gap:.2e}")


# %%
show("characteristic function, f = 1", characteristic_sweep(cfg, [[1.0]]))
show("first number moment", moment_convergence_check(cfg, 1))

# %% [markdown]
# The commutator gap shrinks linearly in eps.

# %%
rows = commutator_limit_check(cfg, [1.0], [1j])
show("commutator [W(i), W(1)]/(i eps) with cutoffs", rows)
slope, r2 = loglog_fit(rows)
print(f"  log-log slope {slope:.3f} (R^2 {r2:.4f})")

# %% [markdown]
# The main identity holds exactly at every eps (two quantum sides agree to
# roundoff); its common value converges to the classical bracket with h.

# %%
rep = main_identity_check(cfg, [1.0], [1j])
print(f"largest two-sided residual {rep.max_residual:.1e}")
show("main identity common value", rep.convergence)

# %%
norms = norm_estimate_check(cfg, [1.0])
for eps, n in norms:
    print(f"  eps={eps:<6} ||chi [H, W(f)] chi|| = {n:.4f}")
print(f"  slope {loglog_fit(*zip(*norms))[0]:.3f}")
