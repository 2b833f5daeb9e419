"""Composite Gauss-Legendre quadrature on axis-aligned boxes and their boundaries.

Every integral in the energy forms, right-hand sides and error norms is
realized through a :class:`QuadratureSet`: a fixed list of interior nodes
and weights on the box plus boundary nodes and weights on its faces.

Boundary convention: for d=1 the "boundary integral" is the counting
measure over the two endpoints (two nodes with unit weight), so a single
code path serves all dimensions.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuadratureSet",
    "gauss_rule",
    "interior_rule",
    "boundary_rule",
    "build_quadrature",
    "integrate",
    "integrate_boundary",
    "face_normal",
]

#: Default interior resolution (cells per axis) keyed by dimension.
DEFAULT_INTERIOR_CELLS = {1: 4000, 2: 100, 3: 25}
#: Default interior Gauss points per axis keyed by dimension.
DEFAULT_INTERIOR_GAUSS = {1: 2, 2: 2, 3: 2}
#: Default boundary panels per edge (d=2) / per face axis (d=3).
DEFAULT_BOUNDARY_PANELS = {1: 1, 2: 250, 3: 40}
#: Default Gauss points per boundary panel (total; 2x2 for a 3D face panel).
DEFAULT_BOUNDARY_GAUSS = {1: 1, 2: 2, 3: 4}


@dataclass(frozen=True)
class QuadratureSet:
    """Interior and boundary quadrature bound to one axis-aligned box.

    Attributes
    ----------
    lo, hi : ndarray, shape (d,)
        Box corners, lo < hi componentwise.
    interior_nodes : ndarray, shape (m, d)
    interior_weights : ndarray, shape (m,)
        Positive weights summing to the box volume.
    boundary_nodes : ndarray, shape (s, d)
        Points lying exactly on the box faces.
    boundary_weights : ndarray, shape (s,)
        Positive weights summing to the boundary measure (2 endpoints with
        unit weight for d=1, perimeter for d=2, surface area for d=3).
    face_index : ndarray of int, shape (s,)
        Face id per boundary node: ``2*axis + side`` with side 0 = lo face,
        side 1 = hi face.
    """

    lo: np.ndarray
    hi: np.ndarray
    interior_nodes: np.ndarray
    interior_weights: np.ndarray
    boundary_nodes: np.ndarray
    boundary_weights: np.ndarray
    face_index: np.ndarray

    @property
    def dimension(self):
        return self.lo.shape[0]

    def volume(self):
        return float(np.prod(self.hi - self.lo))

    def boundary_measure(self):
        d = self.dimension
        if d == 1:
            return 2.0
        sides = self.hi - self.lo
        vol = float(np.prod(sides))
        return float(sum(2.0 * vol / sides[a] for a in range(d)))

    def boundary_normals(self):
        """Outward unit normal per boundary node, derived from face_index."""
        d = self.dimension
        normals = np.zeros((self.boundary_nodes.shape[0], d))
        axis = self.face_index // 2
        side = self.face_index % 2
        normals[np.arange(len(axis)), axis] = np.where(side == 1, 1.0, -1.0)
        return normals


def gauss_rule(npts):
    """Gauss-Legendre nodes/weights on [-1, 1] for npts in 1..5."""
    if not 1 <= npts <= 5:
        raise ValueError(f"gauss points per axis must be in 1..5, got {npts}")
    return np.polynomial.legendre.leggauss(npts)


def _composite_1d(a, b, cells, npts):
    """Composite Gauss-Legendre rule with `cells` equal cells on [a, b]."""
    xg, wg = gauss_rule(npts)
    h = (b - a) / cells
    edges = a + h * np.arange(cells)
    nodes = (edges[:, None] + 0.5 * h * (xg[None, :] + 1.0)).ravel()
    weights = np.tile(0.5 * h * wg, cells)
    return nodes, weights


def interior_rule(lo, hi, cells_per_axis, gauss_pts_per_axis):
    """Tensor-product composite Gauss-Legendre rule over the box [lo, hi].

    Node/weight count is ``(cells_per_axis * gauss_pts_per_axis)**d``.
    Ordering is lexicographic over axes (last axis fastest).
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if cells_per_axis < 1:
        raise ValueError("cells_per_axis must be >= 1")
    d = lo.shape[0]
    axes = [_composite_1d(lo[a], hi[a], cells_per_axis, gauss_pts_per_axis)
            for a in range(d)]
    grids = np.meshgrid(*[ax[0] for ax in axes], indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    wgrids = np.meshgrid(*[ax[1] for ax in axes], indexing="ij")
    weights = np.ones(nodes.shape[0])
    for wg in wgrids:
        weights = weights * wg.ravel()
    return nodes, weights


def boundary_rule(lo, hi, panels_per_edge, gauss_pts):
    """Quadrature over the boundary of the box [lo, hi].

    d=1: the two endpoints with unit weight (counting measure; parameters
    ignored).  d=2: each of the 4 edges split into `panels_per_edge` panels
    carrying a `gauss_pts`-point Gauss rule.  d=3: each of the 6 faces gets a
    panels_per_edge x panels_per_edge panel grid; `gauss_pts` must be a
    perfect square and is split per axis (default 4 = 2x2).

    Returns (nodes, weights, face_index).
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    d = lo.shape[0]
    if d == 1:
        nodes = np.array([[lo[0]], [hi[0]]])
        weights = np.array([1.0, 1.0])
        face = np.array([0, 1], dtype=np.int64)
        return nodes, weights, face

    if d == 2:
        t = {}
        for a in range(2):
            t[a] = _composite_1d(lo[a], hi[a], panels_per_edge, gauss_pts)
        chunks = []
        for axis in range(2):
            other = 1 - axis
            tn, tw = t[other]
            for side in range(2):
                xyz = np.empty((tn.size, 2))
                xyz[:, axis] = lo[axis] if side == 0 else hi[axis]
                xyz[:, other] = tn
                chunks.append((xyz, tw, 2 * axis + side))
        return _stack_boundary(chunks)

    if d == 3:
        root = math.isqrt(gauss_pts)
        if root * root != gauss_pts:
            raise ValueError(
                f"gauss_pts must be a perfect square for d=3, got {gauss_pts}")
        rules = {a: _composite_1d(lo[a], hi[a], panels_per_edge, root)
                 for a in range(3)}
        chunks = []
        for axis in range(3):
            u_ax, v_ax = [a for a in range(3) if a != axis]
            un, uw = rules[u_ax]
            vn, vw = rules[v_ax]
            U, V = np.meshgrid(un, vn, indexing="ij")
            W = np.outer(uw, vw).ravel()
            for side in range(2):
                xyz = np.empty((U.size, 3))
                xyz[:, axis] = lo[axis] if side == 0 else hi[axis]
                xyz[:, u_ax] = U.ravel()
                xyz[:, v_ax] = V.ravel()
                chunks.append((xyz, W, 2 * axis + side))
        return _stack_boundary(chunks)

    raise ValueError(f"unsupported dimension {d}")


def _stack_boundary(chunks):
    nodes = np.concatenate([c[0] for c in chunks])
    weights = np.concatenate([c[1] for c in chunks])
    face = np.concatenate([np.full(c[0].shape[0], c[2], dtype=np.int64)
                           for c in chunks])
    return nodes, weights, face


def build_quadrature(lo, hi, cells_per_axis=None, gauss_pts_per_axis=None,
                     boundary_panels=None, boundary_gauss=None):
    """Build the full QuadratureSet for the box [lo, hi] with per-d defaults."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if not np.all(lo < hi):
        raise ValueError("box must satisfy lo < hi componentwise")
    d = lo.shape[0]
    cells = DEFAULT_INTERIOR_CELLS[d] if cells_per_axis is None else cells_per_axis
    gpts = DEFAULT_INTERIOR_GAUSS[d] if gauss_pts_per_axis is None else gauss_pts_per_axis
    panels = DEFAULT_BOUNDARY_PANELS[d] if boundary_panels is None else boundary_panels
    bgauss = DEFAULT_BOUNDARY_GAUSS[d] if boundary_gauss is None else boundary_gauss
    xi, wi = interior_rule(lo, hi, cells, gpts)
    xb, wb, face = boundary_rule(lo, hi, panels, bgauss)
    return QuadratureSet(lo=lo, hi=hi,
                         interior_nodes=xi, interior_weights=wi,
                         boundary_nodes=xb, boundary_weights=wb,
                         face_index=face)


def _weighted_sum(values, weights):
    # math.fsum: exactly rounded, order-independent result.
    return math.fsum((values * weights).tolist())


def integrate(quad, field):
    """Integral of a scalar field over the box interior (compensated sum)."""
    vals = np.asarray(field(quad.interior_nodes), dtype=float)
    return _weighted_sum(vals, quad.interior_weights)


def integrate_boundary(quad, field):
    """Integral of a scalar field over the boundary (compensated sum)."""
    vals = np.asarray(field(quad.boundary_nodes), dtype=float)
    return _weighted_sum(vals, quad.boundary_weights)


def face_normal(d, face):
    """Outward unit normal of face id ``2*axis + side`` on a d-box."""
    n = np.zeros(d)
    n[face // 2] = 1.0 if face % 2 == 1 else -1.0
    return n
