"""The module contains the bounding-volume hierarchy used for ray casting.

The hierarchy is built once per scene with median splits along the widest
centroid extent and flattened into arrays. Traversal is breadth-first over
(ray, node) pairs so that a whole batch of rays advances with array
operations.
"""

import numpy as np

LEAF_SIZE = 4
BARYCENTRIC_TOLERANCE = 1e-9


class BVH:
    """The class represents an axis-aligned bounding-volume hierarchy over
    triangles.
    """

    def __init__(self, triangles, leaf_size=LEAF_SIZE):
        """Initialize a BVH object.

        The ``triangles`` argument is an array of shape ``(F, 3, 3)``.
        """
        triangles = np.asarray(triangles, dtype=np.float64)
        self._v0 = triangles[:, 0]
        self._e1 = triangles[:, 1] - triangles[:, 0]
        self._e2 = triangles[:, 2] - triangles[:, 0]

        lo = triangles.min(axis=1)
        hi = triangles.max(axis=1)
        scale = float(np.max(hi.max(axis=0) - lo.min(axis=0))) if len(triangles) else 1.0
        self.scale = scale or 1.0
        self.t_epsilon = 1e-9 * self.scale

        pad = 1e-9 * self.scale
        self._lo = lo - pad
        self._hi = hi + pad
        self._centroids = triangles.mean(axis=1)
        self._order = np.arange(len(triangles))
        self._leaf_size = leaf_size

        self._nodes = []
        if len(triangles):
            self._add_node(0, len(triangles))

        nodes = self._nodes or [(np.zeros(3), np.zeros(3), -1, -1, 0, 0)]
        self._min = np.array([n[0] for n in nodes])
        self._max = np.array([n[1] for n in nodes])
        self._left = np.array([n[2] for n in nodes], dtype=np.int64)
        self._right = np.array([n[3] for n in nodes], dtype=np.int64)
        self._start = np.array([n[4] for n in nodes], dtype=np.int64)
        self._count = np.array([n[5] for n in nodes], dtype=np.int64)
        del self._nodes

    #
    # Internal methods.
    #

    def _add_node(self, begin, end):
        """Append the node covering ``_order[begin:end]`` and return its index."""
        index = len(self._nodes)
        members = self._order[begin:end]
        box = (self._lo[members].min(axis=0), self._hi[members].max(axis=0))
        self._nodes.append(None)

        centroids = self._centroids[members]
        extent = centroids.max(axis=0) - centroids.min(axis=0)
        axis = int(np.argmax(extent))
        if end - begin <= self._leaf_size or extent[axis] == 0.0:
            self._nodes[index] = (*box, -1, -1, begin, end - begin)
            return index

        self._order[begin:end] = members[np.argsort(centroids[:, axis], kind='stable')]
        middle = (begin + end) // 2
        left = self._add_node(begin, middle)
        right = self._add_node(middle, end)
        self._nodes[index] = (*box, left, right, begin, 0)
        return index

    def _triangle_distance(self, origins, directions, facets):
        """Return the ray parameter of the Moller-Trumbore intersection, or
        infinity on a miss.
        """
        e1 = self._e1[facets]
        e2 = self._e2[facets]
        p = np.cross(directions, e2)
        det = np.einsum('ij,ij->i', e1, p)
        usable = np.abs(det) > 1e-300
        inv_det = np.divide(1.0, det, out=np.zeros_like(det), where=usable)

        s = origins - self._v0[facets]
        u = np.einsum('ij,ij->i', s, p) * inv_det
        q = np.cross(s, e1)
        v = np.einsum('ij,ij->i', directions, q) * inv_det
        t = np.einsum('ij,ij->i', e2, q) * inv_det

        tol = BARYCENTRIC_TOLERANCE
        hit = usable & (u >= -tol) & (v >= -tol) & (u + v <= 1.0 + tol)
        return np.where(hit, t, np.inf)

    def _test_leaves(self, rays, nodes, origins, directions, skip, best_t, best_f):
        """Intersect every ray with the triangles of its leaf and keep the
        nearest hit, breaking ties by the smallest facet index.
        """
        counts = self._count[nodes]
        pair_ray = np.repeat(rays, counts)
        offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        pair_facet = self._order[np.repeat(self._start[nodes], counts) + offsets]

        t = self._triangle_distance(origins[pair_ray], directions[pair_ray], pair_facet)
        valid = (t > self.t_epsilon) & np.isfinite(t) & (pair_facet != skip[pair_ray])
        if not valid.any():
            return

        ray, t, facet = pair_ray[valid], t[valid], pair_facet[valid]
        order = np.lexsort((facet, t, ray))
        ray, t, facet = ray[order], t[order], facet[order]
        first = np.ones(len(ray), dtype=bool)
        first[1:] = ray[1:] != ray[:-1]
        ray, t, facet = ray[first], t[first], facet[first]

        better = (t < best_t[ray]) | ((t == best_t[ray]) & (facet < best_f[ray]))
        best_t[ray[better]] = t[better]
        best_f[ray[better]] = facet[better]

    #
    # User visible methods.
    #

    def intersect(self, origins, directions, skip=None):
        """Cast rays and return ``(t, facet)`` of the nearest hits.

        Rays that hit nothing get ``t = inf`` and ``facet = -1``. The
        ``skip`` argument holds, per ray, a facet index that must be ignored
        (the facet the ray leaves), or -1.
        """
        origins = np.asarray(origins, dtype=np.float64)
        directions = np.asarray(directions, dtype=np.float64)
        n = len(origins)
        best_t = np.full(n, np.inf)
        best_f = np.full(n, -1, dtype=np.int64)
        if n == 0 or not len(self._v0):
            return best_t, best_f

        skip = np.full(n, -1, dtype=np.int64) if skip is None else np.asarray(skip)
        safe = np.where(directions == 0.0, 1e-300, directions)
        inverse = 1.0 / safe

        rays = np.arange(n)
        nodes = np.zeros(n, dtype=np.int64)
        with np.errstate(over='ignore', invalid='ignore'):
            while rays.size:
                o = origins[rays]
                iv = inverse[rays]
                t0 = (self._min[nodes] - o) * iv
                t1 = (self._max[nodes] - o) * iv
                t_near = np.fmin(t0, t1).max(axis=1)
                t_far = np.fmax(t0, t1).min(axis=1)
                keep = (t_near <= t_far) & (t_far >= 0.0) & (t_near <= best_t[rays])
                rays, nodes = rays[keep], nodes[keep]

                leaf = self._count[nodes] > 0
                if leaf.any():
                    self._test_leaves(
                        rays[leaf], nodes[leaf], origins, directions, skip, best_t, best_f,
                    )

                inner_rays = rays[~leaf]
                inner_nodes = nodes[~leaf]
                rays = np.concatenate((inner_rays, inner_rays))
                nodes = np.concatenate((self._left[inner_nodes], self._right[inner_nodes]))

        return best_t, best_f
