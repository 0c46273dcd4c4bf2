# %% [markdown]
# # Thermal states of the Bose-Hubbard model on a small graph
#
# We build the truncated Fock space over a two-vertex path, diagonalize the
# Hamiltonian sector by sector and check the finite-dimensional identities
# that every later convergence claim relies on.

# %%
import numpy as np

from kmslab import ModelParams, expectation, kms_pair, path
from kmslab.fock import number_operator, weyl_operator
from kmslab.thermal import bogoliubov_check, model_state, number_moment, saturation_check

graph = path(2)
params = ModelParams(epsilon=0.1, beta=1.0, lam=1.0, kappa=-1.0)
basis, H, state = model_state(graph, params, n_max=80)
print(f"Fock space dimension {basis.dim}, log Z = {state.log_partition:.6f}")

# %% [markdown]
# The cutoff n_max = 80 is generous: the weight of the top sectors is
# negligible, which the saturation guard quantifies by comparing with a
# larger cutoff.

# %%
ok, rel = saturation_check(graph, params, 80)
print(f"saturated: {ok} (relative change in log Z and <N>: {rel:.1e})")
print(f"<N_eps> = {number_moment(state, basis, 0.1, 1):.6f}")
print(f"<N_eps> from the operator = {expectation(state, number_operator(basis, 0.1)).real:.6f}")

# %% [markdown]
# KMS condition: for Weyl operators A = W(f), B = W(g) the state satisfies
# omega(A alpha_{i eps beta}(B)) = omega(B A) up to roundoff.  The stable
# evaluation never forms exp(+beta H).

# %%
A = weyl_operator(basis, [1.0, 0.5j], 0.1, method="projected")
B = weyl_operator(basis, [-0.3j, 0.8], 0.1, method="projected")
lhs, rhs = kms_pair(state, H, 1.0, A, B)
print(f"omega(A alpha(B)) = {lhs:.12f}")
print(f"omega(B A)        = {rhs:.12f}")
print(f"|difference|      = {abs(lhs - rhs):.1e}")

# %% [markdown]
# The interaction only lowers the free energy relative to the quadratic
# part by at most beta eps^2 lam/2 times the free expectation of the
# interaction (a Bogoliubov-type bound).

# %%
small = model_state(graph, params, 30)[0]
for eps in (0.2, 0.1):
    lhs, rhs = bogoliubov_check(small, graph, ModelParams(eps, 1.0, 1.0, -1.0))
    print(f"eps={eps}: ln Z0 - ln Z = {lhs:.5f} <= {rhs:.5f}")
