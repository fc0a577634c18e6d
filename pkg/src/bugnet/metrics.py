"""Node-level embeddedness measures on window networks.

Measures restricted to the largest connected component (eigenvector,
betweenness, closeness, clustering, coreness) operate on its undirected
simple projection; in/out degree use the directed simple graph.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import astuple, dataclass, fields

import numpy as np
from scipy import sparse

from .netbuild import CollaborationNetwork, largest_connected_component

FEATURES = (
    "in_lcc",
    "eigenvector",
    "betweenness",
    "closeness",
    "clustering",
    "coreness",
    "degree_in",
    "degree_out",
    "degree_total",
)


class NoConvergence(RuntimeError):
    pass


@dataclass(frozen=True)
class NodeMetrics:
    in_lcc: bool = False
    eigenvector: float = 0.0
    betweenness: float = 0.0
    closeness: float = 0.0
    clustering: float = 0.0
    coreness: int = 0
    degree_in: int = 0
    degree_out: int = 0
    degree_total: int = 0

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_array(cls, values) -> "NodeMetrics":
        v = list(values)
        types = [f.type for f in fields(cls)]
        conv = {"bool": bool, "int": int, "float": float}
        return cls(*(conv[t](x) for t, x in zip(types, v)))


ABSENT = NodeMetrics()


@dataclass
class CentralitySolve:
    values: np.ndarray
    eigenvalue: float
    iterations: int
    residual: float


def _csr(adj) -> sparse.csr_matrix:
    return sparse.csr_matrix(adj, dtype=float)


# -- degrees ------------------------------------------------------------------

def _degree_table(net: CollaborationNetwork) -> dict:
    cached = net.cache.get("degrees")
    if cached is not None:
        return cached
    din, dout, nbrs = Counter(), Counter(), {}
    for a, b in net.edges:
        dout[a] += 1
        din[b] += 1
        nbrs.setdefault(a, set()).add(b)
        nbrs.setdefault(b, set()).add(a)
    table = {u: (din[u], dout[u], len(nbrs.get(u, ()))) for u in net.nodes}
    net.cache["degrees"] = table
    return table


def degree_metrics(net: CollaborationNetwork, node) -> tuple[int, int, int]:
    return _degree_table(net).get(node, (0, 0, 0))


# -- eigenvector centrality ---------------------------------------------------

def eigenvector_centrality(adj, tol: float = 1e-10, max_iter: int = 10000) -> CentralitySolve:
    """Power iteration on A + I, scaled so the largest entry is 1.

    The unit shift keeps the iteration from oscillating on bipartite graphs
    and leaves the eigenvectors unchanged.
    """
    A = _csr(adj)
    n = A.shape[0]
    if n == 0:
        raise ValueError("empty graph")
    if A.nnz == 0:
        if n > 1:
            raise ValueError("graph must be connected")
        return CentralitySolve(np.ones(1), 0.0, 0, 0.0)
    v = np.ones(n)
    residual = np.inf
    for it in range(1, max_iter + 1):
        w = A @ v + v
        v = w / w.max()
        Av = A @ v
        lam = float(v @ Av) / float(v @ v)
        residual = float(np.abs(Av - lam * v).max())
        if residual <= tol:
            return CentralitySolve(v, lam, it, residual)
    raise NoConvergence(f"power iteration did not converge in {max_iter} iterations (residual {residual:.3g})")


# -- shortest-path measures ---------------------------------------------------

def shortest_path_measures(adj, chunk: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Betweenness and closeness from one batched BFS sweep.

    Brandes' dependency accumulation, run level-synchronously for a block of
    sources at a time. Unordered pairs count once; endpoints are excluded.
    """
    A = _csr(adj)
    n = A.shape[0]
    bc = np.zeros(n)
    dist_sum = np.zeros(n)
    # arrays are node-major (n, k): column j belongs to source start + j
    for start in range(0, n, chunk):
        src = np.arange(start, min(n, start + chunk))
        k = len(src)
        cols = np.arange(k)
        first = np.zeros((n, k), dtype=bool)
        first[src, cols] = True
        levels = [first]
        seen = first.copy()
        sigma = first.astype(float)
        frontier = sigma.copy()
        while True:
            reach = A @ frontier
            new = reach > 0
            new &= ~seen
            if not new.any():
                break
            seen |= new
            frontier = reach * new
            sigma += frontier
            levels.append(new)
        for depth, mask in enumerate(levels[1:], start=1):
            dist_sum[src] += depth * mask.sum(axis=0)

        inv_sigma = np.divide(1.0, sigma, out=np.zeros_like(sigma), where=sigma > 0)
        delta = np.zeros((n, k))
        for depth in range(len(levels) - 1, 0, -1):
            coef = (1.0 + delta) * inv_sigma * levels[depth]
            delta += sigma * (A @ coef) * levels[depth - 1]
        delta[src, cols] = 0.0
        bc += delta.sum(axis=1)

    closeness = np.divide(1.0, dist_sum, out=np.zeros(n), where=dist_sum > 0)
    return bc / 2.0, closeness


def betweenness(adj) -> np.ndarray:
    return shortest_path_measures(adj)[0]


def closeness(adj) -> np.ndarray:
    return shortest_path_measures(adj)[1]


# -- local structure ----------------------------------------------------------

def clustering_coefficient(adj) -> np.ndarray:
    A = _csr(adj)
    deg = np.asarray(A.sum(axis=1)).ravel()
    links = np.asarray((A @ A).multiply(A).sum(axis=1)).ravel() / 2.0
    possible = deg * (deg - 1) / 2.0
    return np.divide(links, possible, out=np.zeros_like(links), where=deg >= 2)


def coreness(adj) -> np.ndarray:
    """Core numbers by bucketed minimum-degree peeling."""
    A = _csr(adj)
    n = A.shape[0]
    indptr, indices = A.indptr, A.indices
    deg = np.diff(indptr).astype(np.int64)
    if n == 0:
        return deg
    max_deg = int(deg.max())
    # vertices ordered by degree, with bucket start offsets
    bin_start = np.zeros(max_deg + 2, dtype=np.int64)
    np.add.at(bin_start, deg + 1, 1)
    bin_start = np.cumsum(bin_start)
    order = np.argsort(deg, kind="stable")
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    deg = deg.tolist()
    order = order.tolist()
    pos = pos.tolist()
    bins = bin_start.tolist()
    for i in range(n):
        v = order[i]
        dv = deg[v]
        for u in indices[indptr[v]:indptr[v + 1]].tolist():
            du = deg[u]
            if du > dv:
                # move u to the front of its bucket, then shrink it
                pu, pw = pos[u], bins[du]
                w = order[pw]
                if u != w:
                    order[pu], order[pw] = w, u
                    pos[u], pos[w] = pw, pu
                bins[du] += 1
                deg[u] = du - 1
    return np.array(deg, dtype=np.int64)


# -- per-window assembly ------------------------------------------------------

@dataclass
class LccMeasures:
    nodes: list
    index: dict
    eigen: CentralitySolve
    betweenness: np.ndarray
    closeness: np.ndarray
    clustering: np.ndarray
    coreness: np.ndarray


def lcc_measures(net: CollaborationNetwork, tol: float = 1e-10, max_iter: int = 10000,
                 with_paths: bool = True) -> LccMeasures:
    """All LCC-restricted measures for one network (memoized on the network)."""
    cached = net.cache.get("lcc_full") or (None if with_paths else net.cache.get("lcc_eigen"))
    if cached is not None:
        return cached
    lcc = largest_connected_component(net)
    nodes = [u for u in net.nodes if u in lcc]
    n = len(nodes)
    if n == 0:
        empty = np.zeros(0)
        out = LccMeasures([], {}, CentralitySolve(empty, 0.0, 0, 0.0), empty, empty, empty,
                          np.zeros(0, dtype=np.int64))
    else:
        A = net.undirected_adjacency(nodes)
        eig = eigenvector_centrality(A, tol=tol, max_iter=max_iter)
        if with_paths:
            bc, cl = shortest_path_measures(A)
            clus = clustering_coefficient(A)
            core = coreness(A)
        else:
            bc = cl = clus = np.zeros(n)
            core = np.zeros(n, dtype=np.int64)
        out = LccMeasures(nodes, {u: i for i, u in enumerate(nodes)}, eig, bc, cl, clus, core)
    net.cache["lcc_full" if with_paths else "lcc_eigen"] = out
    return out


def eigenvector_of(net: CollaborationNetwork, node) -> float:
    """Eigenvector score of ``node`` in the LCC, 0 when outside it."""
    m = lcc_measures(net, with_paths=False)
    i = m.index.get(node)
    return 0.0 if i is None else float(m.eigen.values[i])


def feature_vector(net: CollaborationNetwork, node) -> NodeMetrics:
    if node not in net.component_id:
        return ABSENT
    din, dout, dtot = degree_metrics(net, node)
    if net.component_id[node] != net.lcc_id:
        return NodeMetrics(False, 0.0, 0.0, 0.0, 0.0, 0, din, dout, dtot)
    m = lcc_measures(net)
    i = m.index[node]
    return NodeMetrics(
        True,
        float(m.eigen.values[i]),
        float(m.betweenness[i]),
        float(m.closeness[i]),
        float(m.clustering[i]),
        int(m.coreness[i]),
        din,
        dout,
        dtot,
    )
