"""ReLU^k ridge neurons and the finite candidate grid over (omega, b).

A neuron is x -> relu(omega . x + b)^k with a unit direction omega and a
bounded bias |b| <= B.  The continuously parameterized dictionary is
discretized by a fixed, deterministic grid: signs for d=1, equispaced
circle angles for d=2 and a Fibonacci lattice on the sphere for d=3,
crossed with equispaced biases.  Enumeration order is omega-major with b
ascending, and is a pure function of (d, n_omega, n_bias, B).
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Neuron",
    "DictionaryGrid",
    "relu_pow",
    "relu_pow_prime",
    "unit_directions",
    "bias_bound",
]


def relu_pow(t, k):
    """max(0, t)^k elementwise; k >= 1."""
    if k < 1:
        raise ValueError("activation power k must be >= 1")
    return np.maximum(t, 0.0) ** k


def relu_pow_prime(t, k):
    """Derivative k*max(0,t)^(k-1), with value 0 for t <= 0 (all k)."""
    if k < 1:
        raise ValueError("activation power k must be >= 1")
    t = np.asarray(t, dtype=float)
    if k == 1:
        return np.where(t > 0.0, 1.0, 0.0)
    return k * np.where(t > 0.0, t, 0.0) ** (k - 1)


@dataclass(frozen=True)
class Neuron:
    """A single ridge unit relu(omega . x + b)^k."""

    omega: np.ndarray
    b: float
    k: int

    def __post_init__(self):
        omega = np.atleast_1d(np.asarray(self.omega, dtype=float))
        object.__setattr__(self, "omega", omega)
        if abs(np.linalg.norm(omega) - 1.0) > 1e-14:
            raise ValueError("omega must be a unit vector")
        if self.k < 1:
            raise ValueError("activation power k must be >= 1")

    def preactivation(self, points):
        return points @ self.omega + self.b

    def evaluate(self, points):
        """Values relu(omega . x + b)^k at points of shape (m, d)."""
        return relu_pow(self.preactivation(points), self.k)

    def gradient(self, points):
        """Gradients k*relu(omega . x + b)^(k-1) * omega, shape (m, d)."""
        p = relu_pow_prime(self.preactivation(points), self.k)
        return p[:, None] * self.omega[None, :]


def unit_directions(d, n_omega):
    """Deterministic unit directions: signs (d=1), equispaced circle angles
    (d=2), Fibonacci sphere lattice (d=3)."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        theta = 2.0 * np.pi * np.arange(n_omega) / n_omega
        return np.stack([np.cos(theta), np.sin(theta)], axis=1)
    if d == 3:
        i = np.arange(n_omega)
        z = 1.0 - (2.0 * i + 1.0) / n_omega
        golden = np.pi * (3.0 - np.sqrt(5.0))
        phi = golden * i
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        omegas = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
        # renormalize so the unit-norm invariant holds to 1e-14
        omegas /= np.linalg.norm(omegas, axis=1, keepdims=True)
        return omegas
    raise ValueError(f"unsupported dimension {d}")


def bias_bound(lo, hi, margin=0.05):
    """sup-norm bound sup_x ||x||_2 over the box plus a small margin.

    Any |b| beyond this makes the neuron polynomial or zero on the whole
    box, adding nothing the grid does not already contain.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    corner = np.maximum(np.abs(lo), np.abs(hi))
    return float(np.linalg.norm(corner) + margin)


#: Default grid sizes (n_omega, n_bias) keyed by dimension.  The 1D bias
#: count makes the bias lattice (step 1e-3 over [-1.05, 1.05]) land exactly
#: on the default 4000-cell quadrature edges (step 5e-4), so every kink
#: sits on a cell boundary and the energy of k=1 expansions is integrated
#: exactly rather than under-sampled.
DEFAULT_GRID_SIZES = {1: (2, 2101), 2: (288, 257), 3: (1024, 129)}


@dataclass(frozen=True)
class DictionaryGrid:
    """Finite candidate grid over (omega, b) for one dimension and power k.

    Biases are equispaced: b_j = -B + j*h with h = 2B/(n_bias-1).  Candidate
    count is n_omega * n_bias; enumeration is omega-major, b ascending.
    """

    d: int
    k: int
    bound: float
    omega_samples: np.ndarray
    b_samples: np.ndarray
    n_omega: int = field(init=False)
    n_bias: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n_omega", self.omega_samples.shape[0])
        object.__setattr__(self, "n_bias", self.b_samples.shape[0])

    @classmethod
    def build(cls, d, k, bound, n_omega=None, n_bias=None):
        if n_omega is None or n_bias is None:
            dflt = DEFAULT_GRID_SIZES[d]
            n_omega = dflt[0] if n_omega is None else n_omega
            n_bias = dflt[1] if n_bias is None else n_bias
        if n_bias < 2:
            raise ValueError("need at least 2 bias samples")
        h = 2.0 * bound / (n_bias - 1)
        # explicit b0 + j*h so scan kernels and grid agree bitwise
        b = -bound + h * np.arange(n_bias)
        return cls(d=d, k=k, bound=float(bound),
                   omega_samples=unit_directions(d, n_omega), b_samples=b)

    @classmethod
    def for_box(cls, lo, hi, k, n_omega=None, n_bias=None, bound=None):
        d = np.atleast_1d(np.asarray(lo)).shape[0]
        if bound is None:
            bound = bias_bound(lo, hi)
        return cls.build(d, k, bound, n_omega, n_bias)

    def __len__(self):
        return self.n_omega * self.n_bias

    def neuron(self, index):
        """Candidate at flat `index` in enumeration order."""
        iw, ib = divmod(index, self.n_bias)
        return Neuron(omega=self.omega_samples[iw],
                      b=float(self.b_samples[ib]), k=self.k)

    def __iter__(self):
        for iw in range(self.n_omega):
            omega = self.omega_samples[iw]
            for b in self.b_samples:
                yield Neuron(omega=omega, b=float(b), k=self.k)
