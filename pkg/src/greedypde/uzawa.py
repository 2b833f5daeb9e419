"""Augmented-Lagrangian driver: a sequence of penalized problems.

Each sweep solves the penalized elliptic problem with the current
multiplier trace frozen into the right-hand side, trains the expansion by
the greedy solver, then updates the multiplier from the boundary residual:

    lambda <- lambda + (1/delta) * (u - g)   at every boundary node.

The first sweep with a zero multiplier is exactly the classical penalty
method; the second sweep is the one with the optimal convergence order,
and later sweeps keep contracting until the quadrature/dictionary floor.
The multiplier lives as trace values at the boundary quadrature nodes:
every consumer is the pairing (lambda, v) evaluated by this exact
quadrature, so node-wise storage is the quadrature-exact representation.
"""

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

import numpy as np

from .forms import EnergyForm, Expansion
from .metrics import solution_errors
from .oga import GreedySolver, GreedyTrace

__all__ = [
    "MAX_STEPS",
    "StepRecord",
    "UzawaState",
    "penalty_parameter",
    "penalty_exponent",
    "updated_multiplier",
    "multiplier_deviation",
    "solve_uzawa",
    "solve_penalty",
]

#: The multiplier contracts geometrically; past a handful of sweeps the
#: quadrature/dictionary floor dominates, so cap the step count.
MAX_STEPS = 16


def penalty_exponent(k, d):
    """Exact exponent 1/3 + (2(k-1)+1)/(3d) of the penalty rule."""
    return Fraction(1, 3) + Fraction(2 * (k - 1) + 1, 3 * d)


def penalty_parameter(n, k, d):
    """delta = n^-(1/3 + (2(k-1)+1)/(3d)) for expansion size n."""
    if n < 1 or k < 1 or d < 1:
        raise ValueError("n, k, d must all be >= 1")
    return float(n) ** (-float(penalty_exponent(k, d)))


def updated_multiplier(lambda_trace, u_boundary, g_boundary, delta):
    """lambda + (1/delta)*(u - g) nodewise; the identity when u == g."""
    return lambda_trace + (np.asarray(u_boundary) - np.asarray(g_boundary)) / delta


def multiplier_deviation(lambda_trace, problem, quad):
    """max over boundary nodes of |lambda + grad(u_exact) . n|.

    At the continuous optimum the multiplier equals the negative outward
    flux of the exact solution.
    """
    if problem.exact is None:
        raise ValueError("multiplier diagnostic needs an exact solution")
    grads = problem.exact[1](quad.boundary_nodes)
    flux = np.einsum("qa,qa->q", grads, quad.boundary_normals())
    return float(np.max(np.abs(np.asarray(lambda_trace) + flux)))


@dataclass
class StepRecord:
    """Summary of one penalized sweep at a fixed expansion size."""

    step: int
    n: int
    delta: float
    l2: Optional[float]
    h1_semi: Optional[float]
    h1_full: Optional[float]
    boundary_l2: float
    boundary_max: float
    multiplier_dev: Optional[float]
    wall_ms: float


@dataclass
class UzawaState:
    """Full record of a multi-sweep run at one expansion size n."""

    delta: float
    step: int
    lambda_trace: np.ndarray
    expansions: List[Expansion] = field(default_factory=list)
    histories: List[StepRecord] = field(default_factory=list)
    traces: List[GreedyTrace] = field(default_factory=list)


def solve_uzawa(problem, grid, quad, n, steps=2, delta=None,
                include_boundary_mass=True, normalize=True,
                solver=None, error_quad=None, lambda0=None):
    """Run `steps` penalized sweeps of size n; returns the UzawaState.

    The paper-style u^1 and u^2 columns are ``state.expansions[1]`` and
    ``state.expansions[2]``.  `solver` may carry a prebuilt GreedySolver to
    share cached candidate norms across calls; `error_quad` may point error
    metrology at a refined quadrature.
    """
    if not 1 <= steps <= MAX_STEPS:
        raise ValueError(f"steps must be in 1..{MAX_STEPS}")
    if delta is None:
        delta = penalty_parameter(n, grid.k, problem.dimension)
    if solver is None:
        form = EnergyForm(problem, quad, delta,
                          include_boundary_mass=include_boundary_mass)
        solver = GreedySolver(form, grid, normalize=normalize)
    else:
        if solver.form.delta != delta:
            raise ValueError("prebuilt solver has a different delta")
        quad = solver.form.quad
    if error_quad is None:
        error_quad = quad

    nb = quad.boundary_nodes.shape[0]
    lam = np.zeros(nb) if lambda0 is None else np.asarray(lambda0, float).copy()
    if lam.shape[0] != nb:
        raise ValueError("lambda seed length must match boundary node count")
    g_b = np.asarray(problem.g(quad.boundary_nodes), dtype=float)

    state = UzawaState(delta=delta, step=0, lambda_trace=lam,
                       expansions=[Expansion.empty(problem.dimension)])

    for ell in range(1, steps + 1):
        t0 = time.perf_counter()
        expansion, trace = solver.solve(n, state.lambda_trace)
        u_b = expansion.evaluate(quad.boundary_nodes)
        viol = u_b - g_b
        boundary_l2 = math.sqrt(math.fsum(
            (quad.boundary_weights * viol * viol).tolist()))
        boundary_max = float(np.max(np.abs(viol))) if nb else 0.0

        l2 = h1s = h1f = mdev = None
        if problem.exact is not None:
            l2, h1s, h1f = solution_errors(problem.exact, expansion, error_quad)

        state.lambda_trace = updated_multiplier(state.lambda_trace, u_b,
                                                g_b, delta)
        if problem.exact is not None:
            mdev = multiplier_deviation(state.lambda_trace, problem, quad)

        state.expansions.append(expansion)
        state.traces.append(trace)
        state.histories.append(StepRecord(
            step=ell, n=n, delta=delta, l2=l2, h1_semi=h1s, h1_full=h1f,
            boundary_l2=boundary_l2, boundary_max=boundary_max,
            multiplier_dev=mdev,
            wall_ms=1e3 * (time.perf_counter() - t0)))
        state.step = ell

    return state


def solve_penalty(problem, grid, quad, n, delta, include_boundary_mass=True,
                  normalize=True, solver=None):
    """The plain penalty solve: no multiplier is ever constructed.

    Code-path equivalence contract: the result is bit-identical to the
    first expansion of :func:`solve_uzawa` with a zero multiplier seed.
    """
    if solver is None:
        form = EnergyForm(problem, quad, delta,
                          include_boundary_mass=include_boundary_mass)
        solver = GreedySolver(form, grid, normalize=normalize)
    return solver.solve(n, lambda_trace=None)
