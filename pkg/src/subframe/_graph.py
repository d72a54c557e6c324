"""Compiled bounded Dijkstra for the many small searches of lattice construction.

scipy's csgraph routines revalidate the whole graph on every call, which
dominates when thousands of searches each touch a few hundred vertices.
"""

from __future__ import annotations

import heapq

import numba
import numpy as np


@numba.njit(cache=True)
def _bounded(indptr, indices, weights, source, limit, dist):
    heap = [(0.0, source)]
    dist[source] = 0.0
    seen = [source]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for p in range(indptr[v], indptr[v + 1]):
            u = indices[p]
            nd = d + weights[p]
            if nd < dist[u] and nd < limit:
                if dist[u] == np.inf:
                    seen.append(u)
                dist[u] = nd
                heapq.heappush(heap, (nd, u))
    out_v = np.empty(len(seen), dtype=np.int64)
    out_d = np.empty(len(seen))
    for i in range(len(seen)):
        out_v[i] = seen[i]
        out_d[i] = dist[seen[i]]
        dist[seen[i]] = np.inf
    return out_v, out_d


class BoundedSearch:
    """Repeated ``{v : d(source, v) < limit}`` queries on one CSR graph."""

    def __init__(self, graph):
        g = graph.tocsr()
        self.indptr = g.indptr.astype(np.int64)
        self.indices = g.indices.astype(np.int64)
        self.weights = g.data.astype(np.float64)
        self._dist = np.full(g.shape[0], np.inf)

    def __call__(self, source: int, limit: float):
        """Return ``(vertices, distances)`` reached strictly below ``limit``."""
        return _bounded(self.indptr, self.indices, self.weights, int(source), float(limit), self._dist)
