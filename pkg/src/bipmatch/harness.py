"""Experiment harness: convergence studies, distribution sweeps, topology
comparisons and simulation-vs-ODE reports.

Every experiment is a deterministic function of its spec and seed.  Each
replication derives its own child seed, so replications can run in any
order or in parallel and still aggregate to identical results; output files
are byte-stable across reruns.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._rand import child_seed, make_rng
from .degrees import DistributionSpec, sample_conditioned
from .errors import InvalidParameter
from .graphs import BipartiteMultigraph, pair_uniform
from .hydro import HydroState, MatchKernel, integrate
from .matching import Criterion, explore_match, joint_construct

__all__ = [
    "Stats",
    "StreamingStats",
    "ExperimentSpec",
    "ConvergenceResult",
    "SweepResult",
    "TopologyResult",
    "OdeSimReport",
    "run_convergence",
    "run_sweep",
    "run_topology",
    "run_topology_comparison",
    "make_triangular_graph",
    "ode_vs_sim_report",
    "run_experiment",
    "write_csv",
]


# ---------------------------------------------------------------------------
# summary statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Stats:
    """Sample statistics (standard deviation uses the N-1 divisor)."""

    mean: float
    std_dev: float
    min: float
    max: float
    count: int

    @classmethod
    def from_values(cls, values) -> "Stats":
        """Two-pass mean and variance."""
        xs = [float(x) for x in values]
        n = len(xs)
        if n == 0:
            raise InvalidParameter("cannot summarize zero values")
        mean = sum(xs) / n
        var = sum((x - mean) ** 2 for x in xs) / (n - 1) if n > 1 else 0.0
        return cls(mean=mean, std_dev=math.sqrt(var), min=min(xs), max=max(xs), count=n)

    @property
    def std_err(self) -> float:
        return self.std_dev / math.sqrt(self.count)


class StreamingStats:
    """Single-pass aggregation (Welford's recurrence)."""

    __slots__ = ("count", "_mean", "_m2", "_min", "_max")

    def __init__(self):
        self.count = 0
        self._mean = 0.0
        self._m2 = 0.0
        self._min = math.inf
        self._max = -math.inf

    def push(self, x: float) -> None:
        x = float(x)
        self.count += 1
        delta = x - self._mean
        self._mean += delta / self.count
        self._m2 += delta * (x - self._mean)
        self._min = min(self._min, x)
        self._max = max(self._max, x)

    def stats(self) -> Stats:
        if self.count == 0:
            raise InvalidParameter("cannot summarize zero values")
        var = self._m2 / (self.count - 1) if self.count > 1 else 0.0
        return Stats(mean=self._mean, std_dev=math.sqrt(var),
                     min=self._min, max=self._max, count=self.count)


# ---------------------------------------------------------------------------
# experiment specification
# ---------------------------------------------------------------------------

@dataclass
class ExperimentSpec:
    """A declarative experiment: what to run, at which sizes, how often."""

    name: str
    kind: str  # convergence | sweep | topology
    criteria: list[str] = field(default_factory=lambda: ["greedy", "minres"])
    n_values: list[int] = field(default_factory=list)
    replications: int = 50
    seed: int = 0
    xi_plus: DistributionSpec | None = None
    xi_minus: DistributionSpec | None = None
    distributions: list[DistributionSpec] = field(default_factory=list)
    target_avg_degree: float = 5.0
    regenerate_per_run: bool = False
    ode_h: float = 1e-4
    ode_epsilon: float = 1e-3
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("convergence", "sweep", "topology"):
            raise InvalidParameter(f"unknown experiment kind: {self.kind!r}")
        if self.replications < 1:
            raise InvalidParameter("replications must be at least 1")
        if not self.n_values:
            raise InvalidParameter("n_values must not be empty")
        for c in self.criteria:
            Criterion.parse(c)

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentSpec":
        ode = data.get("ode_settings", {})
        return cls(
            name=data["name"],
            kind=data["kind"],
            criteria=list(data.get("criteria", ["greedy", "minres"])),
            n_values=[int(n) for n in data["n_values"]],
            replications=int(data.get("replications", 50)),
            seed=int(data.get("seed", 0)),
            xi_plus=DistributionSpec.from_json(data["xi_plus"]) if "xi_plus" in data else None,
            xi_minus=DistributionSpec.from_json(data["xi_minus"]) if "xi_minus" in data else None,
            distributions=[DistributionSpec.from_json(d) for d in data.get("distributions", [])],
            target_avg_degree=float(data.get("target_avg_degree", 5.0)),
            regenerate_per_run=bool(data.get("regenerate_per_run", False)),
            ode_h=float(ode.get("h", 1e-4)),
            ode_epsilon=float(ode.get("epsilon", 1e-3)),
            outputs=dict(data.get("outputs", {})),
        )

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "kind": self.kind,
            "criteria": list(self.criteria),
            "n_values": list(self.n_values),
            "replications": self.replications,
            "seed": self.seed,
            "ode_settings": {"h": self.ode_h, "epsilon": self.ode_epsilon},
            "outputs": dict(self.outputs),
        }
        if self.xi_plus is not None:
            out["xi_plus"] = self.xi_plus.to_json()
        if self.xi_minus is not None:
            out["xi_minus"] = self.xi_minus.to_json()
        if self.distributions:
            out["distributions"] = [d.to_json() for d in self.distributions]
        if self.kind == "topology":
            out["target_avg_degree"] = self.target_avg_degree
        if self.kind == "sweep":
            out["regenerate_per_run"] = self.regenerate_per_run
        return out

    def header_comment(self) -> str:
        spec_json = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return f"experiment={self.name} seed={self.seed} spec={spec_json}"


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(path, header_comment: str, columns, rows) -> None:
    """UTF-8, '\\n' endings, '.' decimals; one comment line, then data."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {header_comment}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _run_tasks(fn, args, workers: int):
    if workers <= 1:
        return [fn(a) for a in args]
    chunk = max(1, len(args) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args, chunksize=chunk))


# ---------------------------------------------------------------------------
# convergence study
# ---------------------------------------------------------------------------

def _convergence_task(arg):
    xi_plus, xi_minus, criteria, n, rep, seed = arg
    rng = make_rng(child_seed(seed, "convergence", n, rep, "graph"))
    sample = sample_conditioned(xi_plus, xi_minus, n, rng)
    graph = pair_uniform(sample, rng)
    rows = []
    for crit in criteria:
        run_seed = child_seed(seed, "convergence", n, rep, crit)
        record = explore_match(graph, Criterion.parse(crit), run_seed)
        rows.append((n, rep, crit, record.coverage))
    return rows


@dataclass
class ConvergenceResult:
    spec: ExperimentSpec
    rows: list  # (n, replication, criterion, coverage)
    stats: dict  # (n, criterion) -> Stats
    ode_reference: dict  # criterion -> float

    COLUMNS = ("n", "replication", "criterion", "coverage")

    def write_csv(self, path) -> None:
        refs = " ".join(f"ode_{c}={v!r}" for c, v in self.ode_reference.items())
        write_csv(path, self.spec.header_comment() + " " + refs, self.COLUMNS, self.rows)


def run_convergence(spec: ExperimentSpec, workers: int = 1) -> ConvergenceResult:
    """Fresh graph per replication, one exploration run per criterion."""
    if spec.xi_plus is None or spec.xi_minus is None:
        raise InvalidParameter("a convergence spec needs xi_plus and xi_minus")
    args = [(spec.xi_plus, spec.xi_minus, tuple(spec.criteria), n, rep, spec.seed)
            for n in spec.n_values for rep in range(spec.replications)]
    rows = [row for chunk in _run_tasks(_convergence_task, args, workers) for row in chunk]
    stats = _group_stats(rows, key=lambda r: (r[0], r[2]))
    ode_reference = {}
    for crit in spec.criteria:
        result = integrate(HydroState.from_specs(spec.xi_plus, spec.xi_minus),
                           MatchKernel.for_criterion(crit),
                           h=spec.ode_h, end_epsilon=spec.ode_epsilon)
        ode_reference[crit] = result.coverage_estimate()
    return ConvergenceResult(spec=spec, rows=rows, stats=stats, ode_reference=ode_reference)


def _group_stats(rows, key) -> dict:
    acc: dict = {}
    for row in rows:
        acc.setdefault(key(row), StreamingStats()).push(row[-1])
    return {k: v.stats() for k, v in acc.items()}


# ---------------------------------------------------------------------------
# distribution sweep
# ---------------------------------------------------------------------------

def _sweep_task(arg):
    dist, criteria, n, rep, seed, regenerate = arg
    graph_key = rep if regenerate else 0
    rng = make_rng(child_seed(seed, "sweep", dist.label(), n, "graph", graph_key))
    sample = sample_conditioned(dist, dist, n, rng)
    graph = pair_uniform(sample, rng)
    rows = []
    for crit in criteria:
        run_seed = child_seed(seed, "sweep", dist.label(), n, rep, crit)
        record = explore_match(graph, Criterion.parse(crit), run_seed)
        rows.append((dist.kind, _dist_param(dist), crit, rep, record.coverage))
    return rows


def _dist_param(dist: DistributionSpec):
    if dist.kind in ("dirac", "poisson"):
        return dist.param
    return dist.label()


@dataclass
class SweepResult:
    spec: ExperimentSpec
    rows: list  # (dist_kind, param, criterion, replication, coverage)
    stats: dict  # (dist_label, criterion) -> Stats

    COLUMNS = ("dist_kind", "param", "criterion", "replication", "coverage")

    def write_csv(self, path) -> None:
        write_csv(path, self.spec.header_comment(), self.COLUMNS, self.rows)


def run_sweep(spec: ExperimentSpec, workers: int = 1) -> SweepResult:
    """One large graph per distribution, many exploration runs on it.

    With ``regenerate_per_run`` a fresh graph is drawn per replication
    (sensitivity variant); by default all replications share the graph.
    """
    if not spec.distributions:
        raise InvalidParameter("a sweep spec needs a distributions list")
    n = spec.n_values[0]
    args = [(dist, tuple(spec.criteria), n, rep, spec.seed, spec.regenerate_per_run)
            for dist in spec.distributions for rep in range(spec.replications)]
    rows = [row for chunk in _run_tasks(_sweep_task, args, workers) for row in chunk]
    stats = _group_stats(rows, key=lambda r: (r[0], r[1], r[2]))
    return SweepResult(spec=spec, rows=rows, stats=stats)


# ---------------------------------------------------------------------------
# triangular-adjacency topology comparison
# ---------------------------------------------------------------------------

def make_triangular_graph(n: int, target_avg_degree: float, rng) -> BipartiteMultigraph:
    """Random graph from an upper-triangular adjacency matrix.

    Every diagonal entry is set, so a perfect matching always exists; the
    strict upper entries are independent Bernoulli(p) with p chosen so the
    expected average degree hits the target: 1 + p(n-1)/2 = target.
    """
    if not isinstance(rng, np.random.Generator):
        rng = make_rng(int(rng))
    if n < 2:
        raise InvalidParameter("n must be at least 2")
    p = 2.0 * (target_avg_degree - 1.0) / (n - 1)
    if not 0.0 <= p <= 1.0:
        raise InvalidParameter(
            f"target average degree {target_avg_degree} needs p={p:g} outside [0,1]")
    g = BipartiteMultigraph(n)
    counts = rng.binomial(np.arange(n - 1, -1, -1), p) if p > 0 else np.zeros(n, dtype=int)
    for i in range(n):
        g.add_edge(i, i)
        span = n - 1 - i
        k = int(counts[i])
        if k == 0:
            continue
        if k == span:
            cols = range(i + 1, n)
        else:
            chosen: set[int] = set()
            while len(chosen) < k:
                c = int(rng.integers(i + 1, n))
                chosen.add(c)
            cols = sorted(chosen)
        for j in cols:
            g.add_edge(i, j)
    return g


def _topology_task(arg):
    n, target, criteria, rep, seed = arg
    rng = make_rng(child_seed(seed, "topology", n, rep, "graph"))
    graph = make_triangular_graph(n, target, rng)
    sample = graph.degree_sequences()
    rows = []
    for crit in criteria:
        record = explore_match(graph, Criterion.parse(crit),
                               child_seed(seed, "topology", n, rep, "explore", crit))
        rows.append(("exploration", crit, rep, record.coverage))
    for crit in criteria:
        record = joint_construct(sample, Criterion.parse(crit),
                                 child_seed(seed, "topology", n, rep, "cm", crit))
        rows.append(("cm", crit, rep, record.coverage))
    return rows


@dataclass
class TopologyResult:
    spec: ExperimentSpec
    rows: list  # (construction, criterion, replication, coverage)
    stats: dict  # (construction, criterion) -> Stats

    COLUMNS = ("construction", "criterion", "replication", "coverage")

    def write_csv(self, path) -> None:
        write_csv(path, self.spec.header_comment(), self.COLUMNS, self.rows)


def run_topology(spec: ExperimentSpec, workers: int = 1) -> TopologyResult:
    """Exploration on a triangular graph vs the joint construction on its
    degree sequences, per replication."""
    n = spec.n_values[0]
    args = [(n, spec.target_avg_degree, tuple(spec.criteria), rep, spec.seed)
            for rep in range(spec.replications)]
    rows = [row for chunk in _run_tasks(_topology_task, args, workers) for row in chunk]
    stats = _group_stats(rows, key=lambda r: (r[0], r[1]))
    return TopologyResult(spec=spec, rows=rows, stats=stats)


def run_topology_comparison(n: int, target_avg_degree: float, criteria,
                            replications: int, seed: int = 0,
                            workers: int = 1) -> TopologyResult:
    """Direct-arguments variant of ``run_topology``."""
    spec = ExperimentSpec(
        name="topology", kind="topology", criteria=list(criteria),
        n_values=[n], replications=replications, seed=seed,
        target_avg_degree=target_avg_degree,
    )
    return run_topology(spec, workers=workers)


# ---------------------------------------------------------------------------
# simulation vs ODE
# ---------------------------------------------------------------------------

@dataclass
class OdeSimReport:
    criterion: str
    n: int
    sim: Stats
    ode_estimate: float
    gap: float
    threshold: float
    passed: bool

    def to_json(self) -> dict:
        return {
            "criterion": self.criterion,
            "n": self.n,
            "sim_mean": self.sim.mean,
            "sim_std_dev": self.sim.std_dev,
            "sim_count": self.sim.count,
            "ode_estimate": self.ode_estimate,
            "gap": self.gap,
            "threshold": self.threshold,
            "passed": self.passed,
        }


def ode_vs_sim_report(xi_plus: DistributionSpec, xi_minus: DistributionSpec,
                      criterion: str, n: int, replications: int,
                      ode_settings: tuple[float, float] = (1e-4, 1e-3),
                      seed: int = 0, workers: int = 1) -> OdeSimReport:
    """Compare the empirical coverage with the fluid estimate.

    The pass threshold combines statistical error (three standard errors)
    with a 2e-3 floor covering the integration cutoff and finite-size bias.
    """
    spec = ExperimentSpec(
        name="ode_vs_sim", kind="convergence", criteria=[criterion],
        n_values=[n], replications=replications, seed=seed,
        xi_plus=xi_plus, xi_minus=xi_minus,
        ode_h=ode_settings[0], ode_epsilon=ode_settings[1],
    )
    result = run_convergence(spec, workers=workers)
    sim = result.stats[(n, criterion)]
    ode_estimate = result.ode_reference[criterion]
    gap = abs(sim.mean - ode_estimate)
    threshold = max(3.0 * sim.std_err, 2e-3)
    return OdeSimReport(criterion=criterion, n=n, sim=sim, ode_estimate=ode_estimate,
                        gap=gap, threshold=threshold, passed=gap <= threshold)


# ---------------------------------------------------------------------------
# dispatcher
# ---------------------------------------------------------------------------

def run_experiment(spec: ExperimentSpec, out_dir=".", workers: int = 1):
    """Run a spec and write its declared outputs; returns the result object."""
    import os

    runner = {"convergence": run_convergence, "sweep": run_sweep, "topology": run_topology}
    result = runner[spec.kind](spec, workers=workers)
    csv_name = spec.outputs.get("csv")
    if csv_name:
        result.write_csv(os.path.join(out_dir, csv_name))
    return result
