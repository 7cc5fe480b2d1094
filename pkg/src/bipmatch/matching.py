"""The two matching constructions on bipartite (multi)graphs.

``ExplorationChain`` runs a local online matching on a fixed graph: at each
step a uniformly random undetermined plus node is drawn, matched to one of
its undetermined neighbors chosen by the criterion from their residual
degrees (or isolated if it has none), and the matched pair is deleted with
all incident edges.

``JointChain`` builds the graph and the matching simultaneously: nodes
start as bundles of unpaired half-edges, the drawn plus node completes its
neighborhood by uniform pairing against the open minus half-edges, the
criterion picks the match from the neighbors' availabilities, and the
match's remaining half-edges are then completed against the open plus
half-edges.  Only per-node availabilities are needed, which is what makes
the side measures a Markov chain.

Both chains maintain the point measures counting undetermined nodes by
residual degree / availability; ``coupled_pair_run`` replays the joint
construction's decisions through an exploration run on the generated graph
and checks that the two trajectories coincide whenever the graph is simple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._rand import BufferedUniforms, make_rng
from .degrees import DegreeSample
from .errors import EmptyNeighborhood, HalfEdgeImbalance, InvalidParameter
from .graphs import BipartiteMultigraph
from .measures import PointMeasure

__all__ = [
    "Criterion",
    "RunRecord",
    "ExplorationChain",
    "JointChain",
    "CoupledRunResult",
    "select_match",
    "explore_match",
    "joint_construct",
    "coupled_pair_run",
]

UNDETERMINED, MATCHED, ISOLATED = 0, 1, 2


# ---------------------------------------------------------------------------
# matching criteria
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Criterion:
    """A local matching criterion.

    ``greedy`` picks a uniformly random candidate; ``minres`` picks
    uniformly among the candidates of minimal residual degree.  A custom
    rule supplies a deterministic map from a tuple of residual degrees to a
    1-based index; it is applied behind a uniformly random permutation of
    the candidates, so ties are broken uniformly.
    """

    kind: str
    phi: object = None
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("greedy", "minres", "custom"):
            raise InvalidParameter(f"unknown criterion kind: {self.kind!r}")
        if self.kind == "custom" and not callable(self.phi):
            raise InvalidParameter("a custom criterion needs a callable rule")
        if not self.name:
            object.__setattr__(self, "name", self.kind)

    @classmethod
    def greedy(cls) -> "Criterion":
        return cls(kind="greedy")

    @classmethod
    def minres(cls) -> "Criterion":
        return cls(kind="minres")

    @classmethod
    def custom(cls, phi, name: str = "custom") -> "Criterion":
        return cls(kind="custom", phi=phi, name=name)

    @classmethod
    def parse(cls, token: str) -> "Criterion":
        if token == "greedy":
            return cls.greedy()
        if token == "minres":
            return cls.minres()
        raise InvalidParameter(f"unknown criterion: {token!r}")


# Decision draws flow through a tiny channel abstraction so a run can be
# recorded and replayed: uniform index draws are the only randomness the
# criteria consume.

class _PlainDraws:
    __slots__ = ("_u",)

    def __init__(self, uniforms: BufferedUniforms):
        self._u = uniforms

    def index(self, bound: int) -> int:
        return self._u.index(bound)


class _RecordingDraws:
    __slots__ = ("_u", "trace")

    def __init__(self, uniforms: BufferedUniforms, trace: list[int]):
        self._u = uniforms
        self.trace = trace

    def index(self, bound: int) -> int:
        i = self._u.index(bound)
        self.trace.append(i)
        return i


class _ReplayDraws:
    __slots__ = ("_trace", "_pos")

    def __init__(self, trace: list[int]):
        self._trace = trace
        self._pos = 0

    def index(self, bound: int) -> int:
        if self._pos >= len(self._trace):
            raise RuntimeError("replay ran out of recorded decisions")
        v = self._trace[self._pos]
        self._pos += 1
        if not 0 <= v < bound:
            raise RuntimeError(f"replay desync: recorded draw {v} out of range {bound}")
        return v


def _choose(criterion: Criterion, values, draws) -> int:
    """Position of the selected candidate among ``values`` (0-based)."""
    k = len(values)
    if k == 0:
        raise EmptyNeighborhood("the criterion needs at least one candidate")
    if criterion.kind == "greedy":
        return draws.index(k)
    if criterion.kind == "minres":
        lo = min(values)
        mins = [i for i, v in enumerate(values) if v == lo]
        return mins[draws.index(len(mins))]
    # custom rule: uniform permutation, then the deterministic 1-based map
    sigma = list(range(k))
    for i in range(k - 1, 0, -1):
        j = draws.index(i + 1)
        sigma[i], sigma[j] = sigma[j], sigma[i]
    j = criterion.phi(tuple(values[s] for s in sigma))
    if not 1 <= j <= k:
        raise InvalidParameter(f"custom rule returned {j}, expected an index in 1..{k}")
    return sigma[j - 1]


def select_match(criterion: Criterion, neighbor_degrees, rng: np.random.Generator) -> int:
    """Pick a candidate position from a tuple of residual degrees.

    In the exploration construction the entries are remaining-graph degrees
    (all positive); in the joint construction they are availabilities after
    the pairing step and an entry can be 0 when multi-edges consumed all of
    a neighbor's half-edges.
    """
    return _choose(criterion, list(neighbor_degrees), _PlainDraws(BufferedUniforms(rng, 8)))


# ---------------------------------------------------------------------------
# run records
# ---------------------------------------------------------------------------

@dataclass
class RunRecord:
    """Outcome of one construction run."""

    n: int
    criterion: str
    coverage: float
    matched_count: int
    isolated_count: int
    seed: int | None = None
    trajectory: list[tuple[int, PointMeasure, PointMeasure]] | None = None
    final_graph: BipartiteMultigraph | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        out = {
            "n": self.n,
            "criterion": self.criterion,
            "coverage": self.coverage,
            "matched_count": self.matched_count,
            "isolated_count": self.isolated_count,
            "seed": self.seed,
        }
        if self.trajectory is not None:
            out["trajectory"] = [
                {"t": t, "plus": mp.masses.tolist(), "minus": mm.masses.tolist()}
                for t, mp, mm in self.trajectory
            ]
        return out


def _snapshot_cadence(n: int) -> int:
    return max(1, math.ceil(n / 1000))


def _resolve_rng(rng) -> tuple[np.random.Generator, int | None]:
    if isinstance(rng, np.random.Generator):
        return rng, None
    seed = int(rng)
    return make_rng(seed), seed


# ---------------------------------------------------------------------------
# exploration on a fixed graph
# ---------------------------------------------------------------------------

class ExplorationChain:
    """Step-by-step state of the exploration construction on a fixed graph.

    Degrees are counted as distinct undetermined neighbors, so parallel
    edges of a multigraph collapse; on simple graphs this is the ordinary
    degree.  The measures ``mu_plus`` / ``mu_minus`` histogram the
    undetermined nodes of each side by their current degree and are
    maintained incrementally.
    """

    def __init__(self, graph: BipartiteMultigraph, criterion: Criterion,
                 rng: np.random.Generator | None = None,
                 decisions: list[int] | None = None,
                 record_decisions: list[int] | None = None):
        self.n = graph.n
        self.criterion = criterion
        self.adj_plus, self.adj_minus = graph.neighbor_sets()
        d = 0
        for s in self.adj_plus:
            d = max(d, len(s))
        for s in self.adj_minus:
            d = max(d, len(s))
        self.max_degree = d
        self.mu_plus = [0] * (d + 1)
        self.mu_minus = [0] * (d + 1)
        for s in self.adj_plus:
            self.mu_plus[len(s)] += 1
        for s in self.adj_minus:
            self.mu_minus[len(s)] += 1
        self.status_plus = [UNDETERMINED] * self.n
        self.status_minus = [UNDETERMINED] * self.n
        self.partner_plus = [-1] * self.n
        self.partner_minus = [-1] * self.n
        self._undet_plus = list(range(self.n))
        self.matched_pairs = 0
        self.isolated_plus = 0
        self.t = 0
        if decisions is not None:
            self._draws = _ReplayDraws(decisions)
        else:
            if rng is None:
                raise InvalidParameter("either an rng or a decision trace is required")
            u = BufferedUniforms(rng)
            self._draws = (_RecordingDraws(u, record_decisions)
                           if record_decisions is not None else _PlainDraws(u))

    @property
    def done(self) -> bool:
        return self.t >= self.n

    def step(self) -> None:
        """Process one plus node: match it or isolate it."""
        undet = self._undet_plus
        q = self._draws.index(len(undet))
        jp = undet[q]
        last = undet.pop()
        if q < len(undet):
            undet[q] = last
        self.t += 1

        nbr_set = self.adj_plus[jp]
        if not nbr_set:
            self.status_plus[jp] = ISOLATED
            self.isolated_plus += 1
            self.mu_plus[0] -= 1
            return

        nbrs = sorted(nbr_set)
        adj_minus = self.adj_minus
        degs = [len(adj_minus[w]) for w in nbrs]
        jm = nbrs[_choose(self.criterion, degs, self._draws)]

        self.mu_plus[len(nbr_set)] -= 1
        self.mu_minus[len(adj_minus[jm])] -= 1
        mu_m = self.mu_minus
        for w in nbr_set:
            if w != jm:
                s = adj_minus[w]
                deg = len(s)
                s.remove(jp)
                mu_m[deg] -= 1
                mu_m[deg - 1] += 1
        mu_p = self.mu_plus
        adj_plus = self.adj_plus
        for x in adj_minus[jm]:
            if x != jp:
                s = adj_plus[x]
                deg = len(s)
                s.remove(jm)
                mu_p[deg] -= 1
                mu_p[deg - 1] += 1
        self.adj_plus[jp] = set()
        self.adj_minus[jm] = set()
        self.status_plus[jp] = MATCHED
        self.status_minus[jm] = MATCHED
        self.partner_plus[jp] = jm
        self.partner_minus[jm] = jp
        self.matched_pairs += 1

    def measures(self) -> tuple[PointMeasure, PointMeasure]:
        return (PointMeasure(np.array(self.mu_plus, dtype=float)),
                PointMeasure(np.array(self.mu_minus, dtype=float)))

    def finish(self) -> RunRecord:
        """Terminal accounting once all plus nodes have been processed."""
        if not self.done:
            raise InvalidParameter("the chain still has steps to run")
        remaining = self.n - self.matched_pairs
        # the leftover undetermined minus nodes all have degree zero
        assert self.mu_minus[0] == remaining
        matched = 2 * self.matched_pairs
        isolated = 2 * self.n - matched
        return RunRecord(
            n=self.n,
            criterion=self.criterion.name,
            coverage=matched / (2 * self.n),
            matched_count=matched,
            isolated_count=isolated,
        )


def explore_match(graph: BipartiteMultigraph, criterion: Criterion, rng,
                  record_trajectory: bool = False,
                  snapshot_every: int | None = None,
                  decisions: list[int] | None = None) -> RunRecord:
    """Run the exploration construction for exactly n steps.

    ``rng`` is a numpy Generator or an integer seed.  With
    ``record_trajectory`` the side measures are snapshot every
    ``snapshot_every`` steps (default: ceil(n/1000)) plus the final step.
    ``decisions`` replays a recorded decision trace instead of drawing.
    """
    generator, seed = (None, None) if decisions is not None else _resolve_rng(rng)
    chain = ExplorationChain(graph, criterion, rng=generator, decisions=decisions)
    cadence = snapshot_every or _snapshot_cadence(chain.n)
    trajectory = None
    if record_trajectory:
        trajectory = [(0, *chain.measures())]
    for t in range(chain.n):
        chain.step()
        if record_trajectory and ((t + 1) % cadence == 0 or t + 1 == chain.n):
            trajectory.append((t + 1, *chain.measures()))
    record = chain.finish()
    record.seed = seed
    record.trajectory = trajectory
    return record


# ---------------------------------------------------------------------------
# joint construction with the configuration model
# ---------------------------------------------------------------------------

class JointChain:
    """Step-by-step state of the simultaneous graph-and-matching build.

    Open half-edges live in one flat owner array per side; a uniform draw
    plus swap-remove gives exact without-replacement pairing in O(1).  When
    a node's half-edges are consumed wholesale (the drawn node's own, or
    the match's remainder), its availability is zeroed and its stale pool
    entries are discarded on contact, which keeps the total work linear.

    Availabilities are decremented live as half-edges pair, so the
    criterion sees each neighbor's availability net of the edges just drawn
    towards the current plus node.  Under multi-edges an entry can reach 0;
    on simple outcomes the values are the neighbors' remaining-graph
    degrees minus one, which leaves both built-in criteria unchanged.
    """

    def __init__(self, sample: DegreeSample, criterion: Criterion,
                 rng: np.random.Generator,
                 record_decisions: list[int] | None = None,
                 track_edges: bool = True):
        if int(sample.plus.sum()) != int(sample.minus.sum()):
            raise InvalidParameter("half-edge totals differ: pairing is impossible")
        self.n = sample.n
        self.criterion = criterion
        self.avail_plus = sample.plus.tolist()
        self.avail_minus = sample.minus.tolist()
        self.total_plus = int(sample.plus.sum())
        self.total_minus = int(sample.minus.sum())
        self.pool_plus = [i for i, d in enumerate(self.avail_plus) for _ in range(d)]
        self.pool_minus = [j for j, d in enumerate(self.avail_minus) for _ in range(d)]
        d = sample.max_degree
        self.max_degree = d
        self.mu_plus = [0] * (d + 1)
        self.mu_minus = [0] * (d + 1)
        for a in self.avail_plus:
            self.mu_plus[a] += 1
        for a in self.avail_minus:
            self.mu_minus[a] += 1
        self.status_plus = [UNDETERMINED] * self.n
        self.status_minus = [UNDETERMINED] * self.n
        self.partner_plus = [-1] * self.n
        self.partner_minus = [-1] * self.n
        self._undet_plus = list(range(self.n))
        self.matched_pairs = 0
        self.isolated_plus = 0
        self.t = 0
        self.edges: list[dict[int, int]] | None = (
            [dict() for _ in range(self.n)] if track_edges else None)
        self._u = BufferedUniforms(rng)
        self._draws = (_RecordingDraws(self._u, record_decisions)
                       if record_decisions is not None else _PlainDraws(self._u))

    @property
    def done(self) -> bool:
        return self.t >= self.n

    def _draw_open(self, pool: list[int], avail: list[int], mu: list[int]) -> int:
        """Consume one uniformly random open half-edge; return its owner."""
        u = self._u
        while True:
            i = int(u.next() * len(pool))
            owner = pool[i]
            last = pool.pop()
            if i < len(pool):
                pool[i] = last
            a = avail[owner]
            if a:
                avail[owner] = a - 1
                mu[a] -= 1
                mu[a - 1] += 1
                return owner
            # stale entry of a wholesale-consumed owner: drop it and redraw

    def step(self) -> None:
        """Draw one plus node, complete its neighborhood, match or isolate it."""
        undet = self._undet_plus
        q = self._draws.index(len(undet))
        jp = undet[q]
        last = undet.pop()
        if q < len(undet):
            undet[q] = last
        self.t += 1

        k = self.avail_plus[jp]
        if k == 0:
            # fully attached already but never matched
            self.status_plus[jp] = ISOLATED
            self.isolated_plus += 1
            self.mu_plus[0] -= 1
            if self.total_plus != self.total_minus:
                raise HalfEdgeImbalance(f"{self.total_plus} != {self.total_minus} at t={self.t}")
            return

        # the drawn node will be matched; its own half-edges pair right now
        self.mu_plus[k] -= 1
        self.avail_plus[jp] = 0
        self.total_plus -= k

        nbr_mult: dict[int, int] = {}
        for _ in range(k):
            w = self._draw_open(self.pool_minus, self.avail_minus, self.mu_minus)
            nbr_mult[w] = nbr_mult.get(w, 0) + 1
        self.total_minus -= k

        nbrs = sorted(nbr_mult)
        avail_minus = self.avail_minus
        jm = nbrs[_choose(self.criterion, [avail_minus[w] for w in nbrs], self._draws)]

        # the match leaves the undetermined set; its remaining half-edges
        # pair against the open plus half-edges (the drawn node holds none)
        rem = avail_minus[jm]
        self.mu_minus[rem] -= 1
        avail_minus[jm] = 0
        self.total_minus -= rem

        plus_mult: dict[int, int] = {}
        for _ in range(rem):
            x = self._draw_open(self.pool_plus, self.avail_plus, self.mu_plus)
            plus_mult[x] = plus_mult.get(x, 0) + 1
        self.total_plus -= rem

        if self.edges is not None:
            edges = self.edges
            adj = edges[jp]
            for w, m in nbr_mult.items():
                adj[w] = adj.get(w, 0) + m
            for x, m in plus_mult.items():
                a = edges[x]
                a[jm] = a.get(jm, 0) + m

        self.status_plus[jp] = MATCHED
        self.status_minus[jm] = MATCHED
        self.partner_plus[jp] = jm
        self.partner_minus[jm] = jp
        self.matched_pairs += 1

        if self.total_plus != self.total_minus:
            raise HalfEdgeImbalance(f"{self.total_plus} != {self.total_minus} at t={self.t}")

    def clone(self) -> "JointChain":
        """Copy with independent state; the randomness stream stays shared.

        Stepping a clone advances the shared stream (convenient for
        resampling one-step transitions from a frozen state); call
        ``reseed`` on the clone for a fully independent run.
        """
        other = object.__new__(JointChain)
        other.n = self.n
        other.criterion = self.criterion
        other.avail_plus = self.avail_plus.copy()
        other.avail_minus = self.avail_minus.copy()
        other.total_plus = self.total_plus
        other.total_minus = self.total_minus
        other.pool_plus = self.pool_plus.copy()
        other.pool_minus = self.pool_minus.copy()
        other.max_degree = self.max_degree
        other.mu_plus = self.mu_plus.copy()
        other.mu_minus = self.mu_minus.copy()
        other.status_plus = self.status_plus.copy()
        other.status_minus = self.status_minus.copy()
        other.partner_plus = self.partner_plus.copy()
        other.partner_minus = self.partner_minus.copy()
        other._undet_plus = self._undet_plus.copy()
        other.matched_pairs = self.matched_pairs
        other.isolated_plus = self.isolated_plus
        other.t = self.t
        other.edges = None if self.edges is None else [d.copy() for d in self.edges]
        other._u = self._u
        other._draws = self._draws
        return other

    def reseed(self, rng: np.random.Generator) -> None:
        """Point the chain at a fresh randomness source."""
        self._u = BufferedUniforms(rng)
        self._draws = _PlainDraws(self._u)

    def measures(self) -> tuple[PointMeasure, PointMeasure]:
        return (PointMeasure(np.array(self.mu_plus, dtype=float)),
                PointMeasure(np.array(self.mu_minus, dtype=float)))

    def final_graph(self) -> BipartiteMultigraph:
        if self.edges is None:
            raise InvalidParameter("this chain was built with track_edges=False")
        if not self.done:
            raise InvalidParameter("the graph is only complete after the last step")
        return BipartiteMultigraph(self.n, self.edges)

    def finish(self) -> RunRecord:
        if not self.done:
            raise InvalidParameter("the chain still has steps to run")
        remaining = self.n - self.matched_pairs
        assert self.mu_minus[0] == remaining
        matched = 2 * self.matched_pairs
        return RunRecord(
            n=self.n,
            criterion=self.criterion.name,
            coverage=matched / (2 * self.n),
            matched_count=matched,
            isolated_count=2 * self.n - matched,
            final_graph=self.final_graph() if self.edges is not None else None,
        )


def joint_construct(sample: DegreeSample, criterion: Criterion, rng,
                    record_trajectory: bool = False,
                    snapshot_every: int | None = None) -> RunRecord:
    """Run the joint construction; the record carries the generated multigraph."""
    generator, seed = _resolve_rng(rng)
    chain = JointChain(sample, criterion, generator)
    cadence = snapshot_every or _snapshot_cadence(chain.n)
    trajectory = None
    if record_trajectory:
        trajectory = [(0, *chain.measures())]
    for t in range(chain.n):
        chain.step()
        if record_trajectory and ((t + 1) % cadence == 0 or t + 1 == chain.n):
            trajectory.append((t + 1, *chain.measures()))
    record = chain.finish()
    record.seed = seed
    record.trajectory = trajectory
    return record


# ---------------------------------------------------------------------------
# coupling of the two constructions
# ---------------------------------------------------------------------------

@dataclass
class CoupledRunResult:
    """A joint run and, when the generated graph is simple, its replay."""

    joint: RunRecord
    explore: RunRecord | None
    simple: bool
    identical: bool | None

    @property
    def skipped(self) -> bool:
        return not self.simple


def coupled_pair_run(sample: DegreeSample, criterion: Criterion, rng) -> CoupledRunResult:
    """Run the joint construction, then replay its decisions by exploration.

    The joint run records its uniform draws (node choices and tie-breaks).
    If the generated graph is simple, an exploration run on that graph
    consumes the same draws; the two runs must then produce identical
    measure trajectories and coverage.  On a multigraph the replay is not
    meaningful and is skipped.
    """
    generator, seed = _resolve_rng(rng)
    trace: list[int] = []
    chain = JointChain(sample, criterion, generator, record_decisions=trace)
    joint_traj = [(0, *chain.measures())]
    for _ in range(chain.n):
        chain.step()
        joint_traj.append((chain.t, *chain.measures()))
    joint = chain.finish()
    joint.seed = seed
    joint.trajectory = joint_traj

    graph = joint.final_graph
    if not graph.is_simple():
        return CoupledRunResult(joint=joint, explore=None, simple=False, identical=None)

    explore = explore_match(graph, criterion, rng=None,
                            record_trajectory=True, snapshot_every=1,
                            decisions=trace)
    identical = (
        explore.coverage == joint.coverage
        and len(explore.trajectory) == len(joint.trajectory)
        and all(
            te == tj and pe == pj and me == mj
            for (te, pe, me), (tj, pj, mj) in zip(explore.trajectory, joint.trajectory)
        )
    )
    return CoupledRunResult(joint=joint, explore=explore, simple=True, identical=identical)
