"""Induced velocity u(x) = sum_j K(x, x_j) Gamma_j: direct summation and a
Chebyshev-cluster treecode.

Both paths share the branch kernel in _fast; per-target summation order is
fixed, so repeated evaluations are bitwise identical (parallelism is across
targets only).  The treecode approximates a well-separated cell by kernel
evaluations at tensor Chebyshev nodes weighted with the cell's anterpolated
circulation; the opening angle theta = diameter/distance is the accuracy
dial.  Monopole aggregates (total Gamma, Gamma-weighted centroid) are kept
on every node for the acceptance test and cell bookkeeping.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _fast
from .cloud import Cloud
from .kernels import KernelConfig, KernelPoint, KernelSingularityError

R_MIN_FACTOR = 1e-6


class AxisProximityError(ValueError):
    """Target closer to the axis than r_min = 1e-6 * r0."""


@dataclass(frozen=True)
class VelocitySample:
    u_r: float
    u_z: float


def _target_arrays(targets):
    if isinstance(targets, np.ndarray):
        t = np.asarray(targets, dtype=float)
        return t[:, 0].copy(), t[:, 1].copy(), False
    rt = np.array([p.r for p in targets], dtype=float)
    zt = np.array([p.z for p in targets], dtype=float)
    return rt, zt, True


def _check_targets(rt, r0):
    if np.any(rt < R_MIN_FACTOR * r0):
        raise AxisProximityError(
            f"target r below r_min = {R_MIN_FACTOR * r0:g}; refusing to clamp")


def _postcheck(ur, uz, delta):
    if not (np.all(np.isfinite(ur)) and np.all(np.isfinite(uz))):
        if delta == 0.0:
            raise KernelSingularityError(
                "target coincides with a source particle and delta = 0")
        raise FloatingPointError("non-finite velocity")


def velocity_direct(c: Cloud, targets=None, cfg: KernelConfig = KernelConfig(),
                    self_indices=None):
    """Direct O(N_t * N_s) sum.

    targets: None evaluates at the particles themselves with self-term
    exclusion by particle identity; otherwise a (n, 2) array or a list of
    KernelPoint (no exclusion unless self_indices is given).
    Returns an (n, 2) array, or a list of VelocitySample for list input.
    """
    if targets is None:
        rt, zt = c.r, c.z
        want_list = False
        self_idx = np.arange(c.n, dtype=np.int64)
    else:
        rt, zt, want_list = _target_arrays(targets)
        if self_indices is None:
            self_idx = np.full(rt.size, -1, dtype=np.int64)
        else:
            self_idx = np.asarray(self_indices, dtype=np.int64)
    _check_targets(rt, c.r0)
    ur = np.empty(rt.size)
    uz = np.empty(rt.size)
    _fast.velocity_targets(rt, zt, self_idx, c.r, c.z, c.gamma,
                           np.sqrt(c.r), cfg.delta ** 2, ur, uz)
    _postcheck(ur, uz, cfg.delta)
    if want_list:
        return [VelocitySample(float(a), float(b)) for a, b in zip(ur, uz)]
    return np.column_stack([ur, uz])


# ----------------------------------------------------------------------
# tree construction
# ----------------------------------------------------------------------

@dataclass
class TreeNode:
    """View of one node: bounding box, monopole aggregates, children."""

    tree: "Tree"
    index: int

    @property
    def bbox(self):
        return tuple(self.tree.bbox[self.index])

    @property
    def gamma_total(self) -> float:
        return float(self.tree.node_gamma[self.index])

    @property
    def centroid(self):
        return tuple(self.tree.centroid[self.index])

    @property
    def is_leaf(self) -> bool:
        return self.tree.child[self.index, 0] < 0

    @property
    def left(self) -> Optional["TreeNode"]:
        i = self.tree.child[self.index, 0]
        return None if i < 0 else TreeNode(self.tree, int(i))

    @property
    def right(self) -> Optional["TreeNode"]:
        i = self.tree.child[self.index, 1]
        return None if i < 0 else TreeNode(self.tree, int(i))

    @property
    def leaf_range(self):
        lo, hi = self.tree.prange[self.index]
        return int(lo), int(hi)

    def leaf_indices(self):
        lo, hi = self.leaf_range
        return self.tree.perm[lo:hi]


class Tree:
    """Balanced spatial bisection tree over (r, z) with per-node Chebyshev
    equivalent weights for the far-field approximation."""

    def __init__(self, c: Cloud, leaf_capacity: int = 64, cheb_order: int = 6):
        if c.n == 0:
            raise ValueError("cannot build a tree over an empty cloud")
        if leaf_capacity < 1:
            raise ValueError("leaf_capacity must be >= 1")
        self.leaf_capacity = leaf_capacity
        self.cheb_order = cheb_order
        n = c.n
        perm = np.arange(n, dtype=np.int64)
        boxes, children, ranges = [], [], []

        def build(lo, hi):
            idx = len(boxes)
            sel = perm[lo:hi]
            rmin, rmax = c.r[sel].min(), c.r[sel].max()
            zmin, zmax = c.z[sel].min(), c.z[sel].max()
            boxes.append((rmin, rmax, zmin, zmax))
            children.append([-1, -1])
            ranges.append((lo, hi))
            if hi - lo > leaf_capacity:
                # median split along the wider extent, stable order
                if rmax - rmin >= zmax - zmin:
                    order = np.argsort(c.r[sel], kind="stable")
                else:
                    order = np.argsort(c.z[sel], kind="stable")
                perm[lo:hi] = sel[order]
                mid = lo + (hi - lo) // 2
                children[idx][0] = build(lo, mid)
                children[idx][1] = build(mid, hi)
            return idx

        import sys
        old_limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old_limit, 10000))
        try:
            build(0, n)
        finally:
            sys.setrecursionlimit(old_limit)

        self.bbox = np.array(boxes, dtype=float)
        self.child = np.array(children, dtype=np.int64)
        self.prange = np.array(ranges, dtype=np.int64)
        self.perm = perm
        self.pr = c.r[perm].copy()
        self.pz = c.z[perm].copy()
        self.pgam = c.gamma[perm].copy()
        self.psqrt_r = np.sqrt(self.pr)

        m = self.bbox.shape[0]
        self.node_gamma = np.empty(m)
        self.centroid = np.empty((m, 2))
        for i in range(m):
            lo, hi = self.prange[i]
            g = self.pgam[lo:hi]
            tot = math.fsum(g)
            self.node_gamma[i] = tot
            if tot != 0.0:
                self.centroid[i, 0] = math.fsum(g * self.pr[lo:hi]) / tot
                self.centroid[i, 1] = math.fsum(g * self.pz[lo:hi]) / tot
            else:
                self.centroid[i, 0] = 0.5 * (self.bbox[i, 0] + self.bbox[i, 1])
                self.centroid[i, 1] = 0.5 * (self.bbox[i, 2] + self.bbox[i, 3])

        self._build_cheb()

    def _build_cheb(self):
        n = self.cheb_order
        m = self.bbox.shape[0]
        k = np.arange(n)
        t = np.cos(np.pi * (2 * k + 1) / (2 * n))       # Chebyshev-Gauss nodes
        w = (-1.0) ** k * np.sin(np.pi * (2 * k + 1) / (2 * n))  # barycentric
        self.cheb_r = np.empty((m, n))
        self.cheb_z = np.empty((m, n))
        self.cheb_w = np.zeros((m, n * n))

        def basis(xs, a, b):
            half = 0.5 * (b - a)
            if half <= 0.0:
                half = max(abs(a), 1.0) * 1e-12
            mid = 0.5 * (a + b)
            nodes = mid + half * t
            diff = xs[:, None] - nodes[None, :]
            hit = diff == 0.0
            diff = np.where(hit, 1.0, diff)
            q = w[None, :] / diff
            lag = q / q.sum(axis=1, keepdims=True)
            rows = hit.any(axis=1)
            if rows.any():
                lag[rows] = hit[rows].astype(float)
            return nodes, lag

        for i in range(m):
            lo, hi = self.prange[i]
            rn, lr = basis(self.pr[lo:hi], self.bbox[i, 0], self.bbox[i, 1])
            zn, lz = basis(self.pz[lo:hi], self.bbox[i, 2], self.bbox[i, 3])
            self.cheb_r[i] = rn
            self.cheb_z[i] = zn
            if self.child[i, 0] >= 0:  # leaves are always summed directly
                self.cheb_w[i] = np.einsum("ia,ib,i->ab", lr, lz,
                                           self.pgam[lo:hi]).ravel()

    @property
    def root(self) -> TreeNode:
        return TreeNode(self, 0)

    @property
    def n_nodes(self) -> int:
        return self.bbox.shape[0]


def build_tree(c: Cloud, leaf_capacity: int = 64, cheb_order: int = 6) -> TreeNode:
    """Build the bisection tree; returns its root node."""
    return Tree(c, leaf_capacity, cheb_order).root


def velocity_treecode(c: Cloud, targets=None, theta: float = 0.5,
                      cfg: KernelConfig = KernelConfig(), tree=None,
                      self_indices=None):
    """Treecode-accelerated velocity; same calling conventions as
    velocity_direct.  theta in (0, 1) is the opening angle: cells with
    diameter <= theta * distance are approximated, theta -> 0 degenerates
    to the direct sum."""
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    if tree is None:
        tree = Tree(c)
    elif isinstance(tree, TreeNode):
        tree = tree.tree
    if targets is None:
        rt, zt = c.r, c.z
        want_list = False
        self_idx = np.arange(c.n, dtype=np.int64)
    else:
        rt, zt, want_list = _target_arrays(targets)
        if self_indices is None:
            self_idx = np.full(rt.size, -1, dtype=np.int64)
        else:
            self_idx = np.asarray(self_indices, dtype=np.int64)
    _check_targets(rt, c.r0)
    ur = np.empty(rt.size)
    uz = np.empty(rt.size)
    _fast.treecode_eval(rt, zt, self_idx, tree.pr, tree.pz, tree.pgam,
                        tree.psqrt_r, tree.perm, tree.bbox, tree.child,
                        tree.prange, tree.cheb_r, tree.cheb_z, tree.cheb_w,
                        theta, cfg.delta ** 2, ur, uz)
    _postcheck(ur, uz, cfg.delta)
    if want_list:
        return [VelocitySample(float(a), float(b)) for a, b in zip(ur, uz)]
    return np.column_stack([ur, uz])
