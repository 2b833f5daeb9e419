"""Error norms against exact solutions and dyadic convergence rates."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = ["ErrorRecord", "solution_errors", "error_record", "dyadic_rate"]


def _quad_norm(values, weights):
    return math.sqrt(math.fsum((weights * values * values).tolist()))


def solution_errors(exact, expansion, quad):
    """(l2, h1_semi, h1_full) of expansion against the exact (u, grad_u) pair.

    Both norms are interior quadrature sums; the full H1 norm combines them
    as h1_full = sqrt(l2^2 + h1_semi^2).
    """
    u_exact, grad_exact = exact
    x = quad.interior_nodes
    w = quad.interior_weights
    dv = np.asarray(u_exact(x), dtype=float) - expansion.evaluate(x)
    l2 = _quad_norm(dv, w)
    dg = np.asarray(grad_exact(x), dtype=float) - expansion.gradient(x)
    h1_semi = math.sqrt(math.fsum(
        (w * np.einsum("qa,qa->q", dg, dg)).tolist()))
    h1_full = math.hypot(l2, h1_semi)
    return l2, h1_semi, h1_full


@dataclass
class ErrorRecord:
    """One row of a convergence table."""

    n: int
    l2: float
    h1_semi: float
    h1_full: float
    rate_l2: Optional[float] = None
    rate_h1: Optional[float] = None


def error_record(exact, expansion, quad, previous=None):
    """ErrorRecord for an expansion, with rates against the previous dyadic n.

    Rates are attached only when the previous record exists and n doubled.
    """
    l2, h1_semi, h1_full = solution_errors(exact, expansion, quad)
    rec = ErrorRecord(n=len(expansion), l2=l2, h1_semi=h1_semi,
                      h1_full=h1_full)
    if previous is not None and rec.n == 2 * previous.n:
        rec.rate_l2 = dyadic_rate(previous.l2, l2)
        rec.rate_h1 = dyadic_rate(previous.h1_full, h1_full)
    return rec


def dyadic_rate(e_coarse, e_fine):
    """log2(e_coarse / e_fine) between consecutive dyadic sizes.

    Returns None (the undefined-rate marker) when either error is not
    positive.
    """
    if e_coarse is None or e_fine is None:
        return None
    if e_coarse <= 0.0 or e_fine <= 0.0:
        return None
    return math.log2(e_coarse / e_fine)
