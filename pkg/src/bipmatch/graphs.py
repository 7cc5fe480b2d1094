"""Bipartite multigraphs: storage, uniform half-edge pairing, edge-list I/O.

Nodes are indexed 0..n-1 on each side.  Edges are kept as per-plus-node
multiplicity maps; the minus view is derived on demand.  The edge-list text
format is one header line ``n=<n>`` followed by lines ``i j m`` (plus index,
minus index, multiplicity), zero-based.
"""

from __future__ import annotations

import numpy as np

from ._rand import make_rng
from .degrees import DegreeSample
from .errors import GraphFormatError, InvalidParameter

__all__ = ["BipartiteMultigraph", "pair_uniform"]


class BipartiteMultigraph:
    """A bipartite multigraph with n nodes on each side."""

    __slots__ = ("n", "plus_adj")

    def __init__(self, n: int, plus_adj: list[dict[int, int]] | None = None):
        if n < 1:
            raise InvalidParameter("graph needs at least one node per side")
        self.n = n
        self.plus_adj = plus_adj if plus_adj is not None else [dict() for _ in range(n)]

    @classmethod
    def from_edges(cls, n: int, edges) -> "BipartiteMultigraph":
        """Build from an iterable of (plus, minus) or (plus, minus, mult)."""
        g = cls(n)
        for edge in edges:
            i, j, m = edge if len(edge) == 3 else (*edge, 1)
            g.add_edge(i, j, m)
        return g

    def add_edge(self, i: int, j: int, mult: int = 1) -> None:
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise InvalidParameter(f"edge ({i},{j}) out of range for n={self.n}")
        if mult < 1:
            raise InvalidParameter("edge multiplicity must be positive")
        adj = self.plus_adj[i]
        adj[j] = adj.get(j, 0) + mult

    # -- views ---------------------------------------------------------------

    def minus_adj(self) -> list[dict[int, int]]:
        """Mirrored adjacency keyed by minus node."""
        out = [dict() for _ in range(self.n)]
        for i, adj in enumerate(self.plus_adj):
            for j, m in adj.items():
                out[j][i] = m
        return out

    def neighbor_sets(self) -> tuple[list[set[int]], list[set[int]]]:
        """Distinct-neighbor sets for both sides (multiplicities collapsed)."""
        plus = [set(adj) for adj in self.plus_adj]
        minus = [set() for _ in range(self.n)]
        for i, adj in enumerate(self.plus_adj):
            for j in adj:
                minus[j].add(i)
        return plus, minus

    def degree_sequences(self) -> DegreeSample:
        """Degrees counted with multiplicity, as a DegreeSample."""
        dp = np.zeros(self.n, dtype=int)
        dm = np.zeros(self.n, dtype=int)
        for i, adj in enumerate(self.plus_adj):
            for j, m in adj.items():
                dp[i] += m
                dm[j] += m
        return DegreeSample(plus=dp, minus=dm)

    def edge_count(self) -> int:
        """Total number of edges counted with multiplicity."""
        return sum(sum(adj.values()) for adj in self.plus_adj)

    def is_simple(self) -> bool:
        return all(m == 1 for adj in self.plus_adj for m in adj.values())

    def edges(self):
        """Iterate (i, j, mult) in deterministic (i, j) order."""
        for i, adj in enumerate(self.plus_adj):
            for j in sorted(adj):
                yield i, j, adj[j]

    def __eq__(self, other):
        if not isinstance(other, BipartiteMultigraph):
            return NotImplemented
        return self.n == other.n and self.plus_adj == other.plus_adj

    def __repr__(self):
        return f"BipartiteMultigraph(n={self.n}, edges={self.edge_count()})"

    # -- edge-list text format -------------------------------------------------

    def dumps(self) -> str:
        lines = [f"n={self.n}"]
        lines.extend(f"{i} {j} {m}" for i, j, m in self.edges())
        return "\n".join(lines) + "\n"

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "BipartiteMultigraph":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not lines or not lines[0].startswith("n="):
            raise GraphFormatError("edge list must start with a 'n=<n>' header")
        try:
            n = int(lines[0][2:])
        except ValueError as exc:
            raise GraphFormatError(f"bad header line: {lines[0]!r}") from exc
        g = cls(n)
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 3:
                raise GraphFormatError(f"expected 'i j m', got {ln!r}")
            try:
                i, j, m = (int(p) for p in parts)
                g.add_edge(i, j, m)
            except (ValueError, InvalidParameter) as exc:
                raise GraphFormatError(f"bad edge line {ln!r}: {exc}") from exc
        return g

    @classmethod
    def load(cls, path) -> "BipartiteMultigraph":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.loads(fh.read())


def pair_uniform(sample: DegreeSample, rng) -> BipartiteMultigraph:
    """Pair all half-edges uniformly at random: the bipartite configuration model.

    A uniformly random assignment of the two half-edge sets has the same law
    as pairing them one at a time without replacement, so a single shuffle of
    the minus half-edges against the plus half-edges suffices.  ``rng`` is a
    numpy Generator or an integer seed.
    """
    if not isinstance(rng, np.random.Generator):
        rng = make_rng(int(rng))
    if int(sample.plus.sum()) != int(sample.minus.sum()):
        raise InvalidParameter("half-edge totals differ: the pairing is impossible")
    n = sample.n
    stubs_p = np.repeat(np.arange(n), sample.plus)
    stubs_m = np.repeat(np.arange(n), sample.minus)
    stubs_m = stubs_m[rng.permutation(stubs_m.size)]
    g = BipartiteMultigraph(n)
    adj = g.plus_adj
    for i, j in zip(stubs_p.tolist(), stubs_m.tolist()):
        a = adj[i]
        a[j] = a.get(j, 0) + 1
    return g
