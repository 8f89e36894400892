"""Leader-follower communication graphs.

Convention: ``a[i, j] > 0`` means follower ``i`` receives information from
follower ``j``; ``b[i] > 0`` means follower ``i`` receives from the leader.
Undirected graphs are stored as symmetric ``a``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

__all__ = [
    "Network",
    "PinningCertificate",
    "laplacian",
    "leader_rooted",
    "pinning_certificate",
    "topological_order",
    "ring",
    "chain",
]

_INVERTIBLE_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class Network:
    adjacency: np.ndarray
    leader_adjacency: np.ndarray
    directed: bool = True

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=float)
        b = np.array(self.leader_adjacency, dtype=float).reshape(-1)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {a.shape}")
        if b.shape[0] != a.shape[0]:
            raise ValueError(f"leader adjacency has length {b.shape[0]}, expected {a.shape[0]}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("graph weights must be finite")
        if np.any(a < 0) or np.any(b < 0):
            raise ValueError("graph weights must be nonnegative")
        if np.any(np.diag(a) != 0):
            raise ValueError("self-loops are not allowed (a_ii must be 0)")
        if not self.directed and not np.array_equal(a, a.T):
            raise ValueError("undirected network requires a symmetric adjacency")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "adjacency", a)
        object.__setattr__(self, "leader_adjacency", b)

    @classmethod
    def from_edges(
        cls,
        n_agents: int,
        edges: Iterable[tuple[int, int, float]],
        leader_edges: Iterable[tuple[int, float]],
        directed: bool = True,
    ) -> "Network":
        """Build from 0-based ``(sender, receiver, weight)`` edges.

        For undirected graphs each edge is added in both directions.
        """
        a = np.zeros((n_agents, n_agents))
        for src, dst, w in edges:
            if src == dst:
                raise ValueError(f"self-loop on agent {src}")
            a[dst, src] = w
            if not directed:
                a[src, dst] = w
        b = np.zeros(n_agents)
        for dst, w in leader_edges:
            b[dst] = w
        return cls(a, b, directed=directed)

    @property
    def N(self) -> int:
        return self.adjacency.shape[0]

    @property
    def a(self) -> np.ndarray:
        return self.adjacency

    @property
    def b(self) -> np.ndarray:
        return self.leader_adjacency

    @property
    def L(self) -> np.ndarray:
        return laplacian(self)

    @property
    def M(self) -> np.ndarray:
        return np.diag(self.leader_adjacency)

    @property
    def m(self) -> np.ndarray:
        return self.M @ np.ones(self.N)

    @property
    def beta_degree(self) -> np.ndarray:
        """In-degree sums ``beta_i = b_i + sum_j a_ij``."""
        return self.leader_adjacency + self.adjacency.sum(axis=1)

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[i])

    def edge_list(self) -> list[tuple[int, int, float]]:
        """0-based ``(sender, receiver, weight)``; undirected edges listed once with sender < receiver."""
        out = []
        for dst, src in zip(*np.nonzero(self.adjacency)):
            if not self.directed and src > dst:
                continue
            out.append((int(src), int(dst), float(self.adjacency[dst, src])))
        return sorted(out)


def laplacian(net: Network) -> np.ndarray:
    a = net.adjacency
    L = -a.copy()
    # diagonal is the row sum so that rows sum to zero in floating point too
    np.fill_diagonal(L, 0.0)
    np.fill_diagonal(L, -L.sum(axis=1))
    return L


def leader_rooted(net: Network) -> bool:
    """True iff every follower is reachable from the leader along directed edges."""
    seen = np.zeros(net.N, dtype=bool)
    queue = deque(int(i) for i in np.flatnonzero(net.leader_adjacency > 0))
    for i in queue:
        seen[i] = True
    while queue:
        j = queue.popleft()
        for i in np.flatnonzero(net.adjacency[:, j] > 0):
            if not seen[i]:
                seen[i] = True
                queue.append(int(i))
    return bool(seen.all())


class PinningCertificate(NamedTuple):
    invertible: bool
    identity_residual: float


def pinning_certificate(net: Network) -> PinningCertificate:
    """Check that ``L + M`` is nonsingular and that ``(L + M) 1 = m``.

    Invertibility is decided by solving ``(L + M) y = m`` and accepting only if
    the relative solve residual is below ``1e-10`` and the matrix is not
    numerically rank deficient.
    """
    G = laplacian(net) + np.diag(net.leader_adjacency)
    m = net.leader_adjacency.copy()
    ones = np.ones(net.N)
    identity_residual = float(np.max(np.abs(G @ ones - m)))

    scale = max(float(np.max(np.abs(G))), 1.0)
    invertible = False
    try:
        y = np.linalg.solve(G, m)
    except np.linalg.LinAlgError:
        y = None
    if y is not None and np.all(np.isfinite(y)):
        resid = np.max(np.abs(G @ y - m)) / (scale * max(np.max(np.abs(y)), 1.0))
        sv = np.linalg.svd(G, compute_uv=False)
        invertible = bool(resid < _INVERTIBLE_RTOL and sv[-1] > _INVERTIBLE_RTOL * sv[0])
    return PinningCertificate(invertible, identity_residual)


def topological_order(net: Network) -> list[int]:
    """Order in which every follower comes after all its follower neighbours.

    Raises ``ValueError`` if the follower subgraph has a cycle (undirected
    graphs always do once they have an edge).
    """
    a = net.adjacency > 0
    indeg = a.sum(axis=1)
    queue = deque(int(i) for i in np.flatnonzero(indeg == 0))
    order = []
    while queue:
        j = queue.popleft()
        order.append(j)
        for i in np.flatnonzero(a[:, j]):
            indeg[i] -= 1
            if indeg[i] == 0:
                queue.append(int(i))
    if len(order) != net.N:
        raise ValueError("follower graph has a cycle; zero-delay evaluation needs an acyclic graph")
    return order


def ring(n_agents: int, weight: float = 1.0, leader_weight: float = 1.0) -> Network:
    """Undirected cycle ``i ~ i-1, i+1`` with the leader linked to follower 0."""
    a = np.zeros((n_agents, n_agents))
    for i in range(n_agents):
        for j in ((i - 1) % n_agents, (i + 1) % n_agents):
            if j != i:
                a[i, j] = weight
    b = np.zeros(n_agents)
    b[0] = leader_weight
    return Network(a, b, directed=False)


def chain(n_agents: int, weight: float = 1.0) -> Network:
    """Directed path leader -> 0 -> 1 -> ... -> N-1."""
    a = np.zeros((n_agents, n_agents))
    for i in range(1, n_agents):
        a[i, i - 1] = weight
    b = np.zeros(n_agents)
    b[0] = weight
    return Network(a, b, directed=True)
