"""Penalized energy forms and n-term neuron expansions.

The bilinear form realized here is

    a_delta(u, v) = int_box grad(u).grad(v) + a0*u*v dx
                    + (cbm + 1/delta) * int_bdry u*v ds,

where cbm = 1 when the boundary-mass term is included (the default) and 0
otherwise.  The matching right-hand-side functional is

    F(v) = int_box f0*v dx + (cbm + 1/delta) * int_bdry g*v ds
           - int_bdry lambda*v ds,

with the multiplier lambda stored as trace values at the boundary
quadrature nodes.  Any object with ``evaluate(points)`` and
``gradient(points)`` can appear as an argument: a Neuron, an Expansion, or
a custom field.
"""

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .dictionary import Neuron, relu_pow, relu_pow_prime
from .problem import ProblemSpec
from .quadrature import QuadratureSet

__all__ = ["Expansion", "ConstantField", "EnergyForm"]


@dataclass
class Expansion:
    """An n-term expansion sum_i coeffs[i] * relu(omega_i . x + b_i)^k."""

    neurons: List[Neuron]
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if len(self.neurons) != self.coeffs.shape[0]:
            raise ValueError("neurons and coeffs must have the same length")

    @classmethod
    def empty(cls, d):
        return cls(neurons=[], coeffs=np.zeros(0))

    def __len__(self):
        return len(self.neurons)

    def parameters(self):
        """(omegas (n, d), biases (n,), k) arrays for vectorized evaluation."""
        omegas = np.stack([nu.omega for nu in self.neurons])
        biases = np.array([nu.b for nu in self.neurons])
        return omegas, biases, self.neurons[0].k

    def evaluate(self, points):
        points = np.asarray(points, dtype=float)
        if not self.neurons:
            return np.zeros(points.shape[0])
        omegas, biases, k = self.parameters()
        t = points @ omegas.T + biases[None, :]
        return relu_pow(t, k) @ self.coeffs

    def gradient(self, points):
        points = np.asarray(points, dtype=float)
        if not self.neurons:
            return np.zeros_like(points)
        omegas, biases, k = self.parameters()
        t = points @ omegas.T + biases[None, :]
        return (relu_pow_prime(t, k) * self.coeffs[None, :]) @ omegas


@dataclass(frozen=True)
class ConstantField:
    """Degenerate constant field, mainly for tests of the forms."""

    value: float
    d: int

    def evaluate(self, points):
        return np.full(points.shape[0], self.value)

    def gradient(self, points):
        return np.zeros((points.shape[0], self.d))


def _fdot(a, b):
    return math.fsum((a * b).tolist())


@dataclass(frozen=True)
class EnergyForm:
    """The penalized energy form bound to a problem and a quadrature set."""

    problem: ProblemSpec
    quad: QuadratureSet
    delta: float
    include_boundary_mass: bool = True

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("penalty parameter delta must be > 0")

    @property
    def boundary_coef(self):
        """Total boundary weight cbm + 1/delta in the bilinear form."""
        cbm = 1.0 if self.include_boundary_mass else 0.0
        return cbm + 1.0 / self.delta

    def bilinear(self, u, v):
        """a_delta(u, v) by direct quadrature of the arguments."""
        q = self.quad
        gu = u.gradient(q.interior_nodes)
        gv = v.gradient(q.interior_nodes)
        val = _fdot(np.einsum("qa,qa->q", gu, gv), q.interior_weights)
        if self.problem.a0 != 0.0:
            val += self.problem.a0 * _fdot(
                u.evaluate(q.interior_nodes) * v.evaluate(q.interior_nodes),
                q.interior_weights)
        val += self.boundary_coef * _fdot(
            u.evaluate(q.boundary_nodes) * v.evaluate(q.boundary_nodes),
            q.boundary_weights)
        return val

    def boundary_rhs_values(self, lambda_trace=None):
        """(cbm + 1/delta)*g - lambda at the boundary nodes."""
        q = self.quad
        gvals = np.asarray(self.problem.g(q.boundary_nodes), dtype=float)
        out = self.boundary_coef * gvals
        if lambda_trace is not None:
            lam = np.asarray(lambda_trace, dtype=float)
            if lam.shape[0] != q.boundary_nodes.shape[0]:
                raise ValueError(
                    f"lambda trace has {lam.shape[0]} values for "
                    f"{q.boundary_nodes.shape[0]} boundary nodes")
            out = out - lam
        return out

    def rhs(self, v, lambda_trace=None):
        """F(v) = (f0, v) + (cbm + 1/delta)(g, v)_bdry - (lambda, v)_bdry."""
        q = self.quad
        val = _fdot(np.asarray(self.problem.f0(q.interior_nodes), dtype=float)
                    * v.evaluate(q.interior_nodes), q.interior_weights)
        val += _fdot(self.boundary_rhs_values(lambda_trace)
                     * v.evaluate(q.boundary_nodes), q.boundary_weights)
        return val

    def gram_and_load(self, basis, lambda_trace=None):
        """Gram matrix G_ij = a_delta(g_i, g_j) and load L_i = F(g_i).

        Assembled from neuron preactivations cached at the quadrature nodes
        (one pass per neuron), unlike :meth:`bilinear` which re-evaluates
        its arguments directly.
        """
        if not basis:
            raise ValueError("basis must be nonempty")
        q = self.quad
        k = basis[0].k
        omegas = np.stack([nu.omega for nu in basis])
        biases = np.array([nu.b for nu in basis])
        t = omegas @ q.interior_nodes.T + biases[:, None]
        tb = omegas @ q.boundary_nodes.T + biases[:, None]
        vals = relu_pow(t, k)
        ders = relu_pow_prime(t, k)
        bvals = relu_pow(tb, k)

        wi = q.interior_weights
        gram = (ders * wi[None, :]) @ ders.T * (omegas @ omegas.T)
        if self.problem.a0 != 0.0:
            gram += self.problem.a0 * (vals * wi[None, :]) @ vals.T
        gram += self.boundary_coef * (bvals * q.boundary_weights[None, :]) @ bvals.T
        gram = 0.5 * (gram + gram.T)

        f0v = np.asarray(self.problem.f0(q.interior_nodes), dtype=float)
        load = vals @ (wi * f0v)
        load += bvals @ (q.boundary_weights
                         * self.boundary_rhs_values(lambda_trace))
        return gram, load
