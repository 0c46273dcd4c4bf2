"""Classical field theory on a finite graph: the discrete nonlinear
Schrodinger Hamiltonian, Wirtinger gradients, Poisson brackets and the
Gibbs density.

Points u are complex arrays whose last axis runs over vertices, so every
function here also accepts a batch of shape (n, |V|).  Inner products are
conjugate-linear in the first slot, <f, u> = sum conj(f_x) u_x, and the
Wirtinger derivatives are d/du = (d/dRe - i d/dIm)/2, d/dubar = (d/dRe + i d/dIm)/2.
The bracket is {F, G} = (1/i) (dF/du . dG/dubar - dG/du . dF/dubar).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .graph import Graph, laplacian

SQRT2 = np.sqrt(2.0)


def _field(u, g: Graph | None = None):
    u = np.asarray(u, dtype=complex)
    if g is not None and u.shape[-1] != g.vertex_count:
        raise ValueError(f"field has {u.shape[-1]} entries but graph has {g.vertex_count} vertices")
    if not np.all(np.isfinite(u)):
        raise ValueError("field has non-finite entries")
    return u


def inner(f, u):
    """<f, u> along the last axis, conjugate-linear in f."""
    return np.sum(np.conj(f) * u, axis=-1)


def hamiltonian_h(g: Graph, lam: float, kappa: float, u):
    """h(u) = sum_edges |u_x - u_y|^2 - kappa |u|^2 + lam/2 sum |u_x|^4."""
    u = _field(u, g)
    kinetic = np.zeros(u.shape[:-1])
    for i, j in g.edges:
        kinetic = kinetic + np.abs(u[..., i] - u[..., j]) ** 2
    r2 = np.abs(u) ** 2
    return kinetic - kappa * r2.sum(axis=-1) + 0.5 * lam * (r2**2).sum(axis=-1)


def grad_h(g: Graph, lam: float, kappa: float, u):
    """Wirtinger pair (dh/du, dh/dubar); dh/dubar = -Lap u - kappa u + lam |u|^2 u."""
    u = _field(u, g)
    dbar = -(u @ laplacian(g).T) - kappa * u + lam * np.abs(u) ** 2 * u
    return np.conj(dbar), dbar


def gibbs_log_density(g: Graph, lam: float, kappa: float, beta: float, u):
    """Unnormalised log density -beta h(u) of the classical Gibbs measure."""
    return -beta * hamiltonian_h(g, lam, kappa, u)


@dataclass(frozen=True)
class CylindricalObservable:
    """u -> exp(i scale Re<f, u>), a pure phase."""

    frequency: np.ndarray
    scale: float = SQRT2

    def __post_init__(self):
        object.__setattr__(self, "frequency", np.asarray(self.frequency, dtype=complex))

    def __call__(self, u):
        return np.exp(1j * self.scale * inner(self.frequency, u).real)

    def gradients(self, u):
        val = self(u)[..., None]
        c = 0.5j * self.scale
        return c * np.conj(self.frequency) * val, c * self.frequency * val


@dataclass(frozen=True)
class SmoothObservable:
    """Observable with optional Wirtinger gradients.

    ``provenance`` is "closed-form" when ``gradients`` is supplied and
    "finite-difference" otherwise.
    """

    evaluator: Callable
    wirtinger_gradients: Callable | None = None
    provenance: str = "closed-form"

    def __post_init__(self):
        if self.wirtinger_gradients is None and self.provenance == "closed-form":
            object.__setattr__(self, "provenance", "finite-difference")

    def __call__(self, u):
        return self.evaluator(u)

    def gradients(self, u):
        if self.wirtinger_gradients is None:
            return finite_difference_gradients(self.evaluator, u)
        return self.wirtinger_gradients(u)


def as_observable(obj) -> SmoothObservable:
    if isinstance(obj, SmoothObservable):
        return obj
    if isinstance(obj, CylindricalObservable):
        return SmoothObservable(obj, obj.gradients)
    if callable(obj):
        return SmoothObservable(obj)
    raise TypeError(f"cannot use {type(obj).__name__} as an observable")


def hamiltonian_observable(g: Graph, lam: float, kappa: float) -> SmoothObservable:
    return SmoothObservable(
        lambda u: hamiltonian_h(g, lam, kappa, u), lambda u: grad_h(g, lam, kappa, u)
    )


def norm_observable() -> SmoothObservable:
    """u -> |u|^2 with gradients (conj u, u)."""
    return SmoothObservable(lambda u: np.sum(np.abs(u) ** 2, axis=-1), lambda u: (np.conj(u), np.asarray(u)))


def finite_difference_gradients(func, u, step: float = 1e-5):
    """Central-difference Wirtinger gradients of a scalar function at one point."""
    u = _field(u)
    d_re = np.zeros(u.shape, dtype=complex)
    d_im = np.zeros(u.shape, dtype=complex)
    for x in range(u.shape[-1]):
        e = np.zeros(u.shape[-1])
        e[x] = step
        d_re[..., x] = (func(u + e) - func(u - e)) / (2 * step)
        d_im[..., x] = (func(u + 1j * e) - func(u - 1j * e)) / (2 * step)
    return 0.5 * (d_re - 1j * d_im), 0.5 * (d_re + 1j * d_im)


def poisson_bracket(F, G, u):
    """{F, G}(u); observables lacking gradients fall back to finite differences."""
    F, G = as_observable(F), as_observable(G)
    du_f, dub_f = F.gradients(u)
    du_g, dub_g = G.gradients(u)
    return -1j * np.sum(du_f * dub_g - du_g * dub_f, axis=-1)


def bracket_provenance(F, G) -> str:
    F, G = as_observable(F), as_observable(G)
    if F.provenance == G.provenance == "closed-form":
        return "closed-form"
    return "finite-difference"


def poisson_cylindrical_pair(g_vec, f_vec, u, scale: float = SQRT2):
    """{exp(i s Re<g,u>), exp(i s Re<f,u>)} = (s^2/2) Im<f,g> exp(i s Re<f+g,u>)."""
    g_vec = np.asarray(g_vec, dtype=complex)
    f_vec = np.asarray(f_vec, dtype=complex)
    u = _field(u)
    return 0.5 * scale**2 * inner(f_vec, g_vec).imag * np.exp(1j * scale * inner(f_vec + g_vec, u).real)


def poisson_cylindrical_with_h(g_vec, u, graph: Graph, lam: float, kappa: float, scale: float = SQRT2):
    """{exp(i s Re<g,u>), h}(u) = i s Im<g, dh/dubar> exp(i s Re<g,u>)."""
    g_vec = np.asarray(g_vec, dtype=complex)
    u = _field(u, graph)
    dbar = grad_h(graph, lam, kappa, u)[1]
    return 1j * scale * inner(g_vec, dbar).imag * np.exp(1j * scale * inner(g_vec, u).real)


def poisson_cylindrical_with_cutoff(g_vec, u, chi_prime, scale: float = SQRT2):
    """{exp(i s Re<g,u>), chi(|u|^2)} = i s chi'(|u|^2) Im<g,u> exp(i s Re<g,u>).

    ``chi_prime`` is the derivative of chi, evaluated at |u|^2.
    """
    g_vec = np.asarray(g_vec, dtype=complex)
    u = _field(u)
    r2 = np.sum(np.abs(u) ** 2, axis=-1)
    return 1j * scale * chi_prime(r2) * inner(g_vec, u).imag * np.exp(1j * scale * inner(g_vec, u).real)


def coercivity_constant(g: Graph, lam: float) -> float:
    """c1 with h(u) >= c1 |u|^4 - c2, from sum |u_x|^4 >= |u|^4 / |V|."""
    return lam / (2 * g.vertex_count)
