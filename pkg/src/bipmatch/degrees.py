"""Degree distributions and conditioned degree-sequence sampling.

Both sides of the bipartition draw i.i.d. degrees from prescribed
distributions, conditioned on the two samples having the same total so the
half-edges can be paired.  Conditioning is realized by rejection: the plus
sample is drawn once and the whole minus sample is redrawn until the totals
match, which preserves exchangeability of the conditioned law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConditioningFailed, InvalidParameter

__all__ = [
    "DistributionSpec",
    "DegreeSample",
    "GraphicalCheck",
    "sample_conditioned",
    "graphical_check",
    "bipartite_gale_ryser",
]

DEFAULT_MAX_ATTEMPTS = 10_000


@dataclass(frozen=True)
class DistributionSpec:
    """A degree distribution: point mass, truncated Poisson, or explicit pmf.

    Unbounded distributions are truncated at ``truncation`` (chosen so the
    discarded tail is far below Monte Carlo noise) and renormalized.
    """

    kind: str
    param: float = 0.0
    probs: tuple[float, ...] = field(default=())
    truncation: int | None = None

    # -- constructors ------------------------------------------------------

    @classmethod
    def dirac(cls, p: int) -> "DistributionSpec":
        if p < 0 or p != int(p):
            raise InvalidParameter(f"dirac degree must be a non-negative integer, got {p}")
        return cls(kind="dirac", param=int(p))

    @classmethod
    def poisson(cls, lam: float, truncation: int | None = None) -> "DistributionSpec":
        if lam < 0:
            raise InvalidParameter(f"poisson rate must be non-negative, got {lam}")
        if truncation is None:
            # tail mass beyond lam + 12*sqrt(lam) is < 1e-12
            truncation = max(50, math.ceil(lam + 12.0 * math.sqrt(lam)))
        return cls(kind="poisson", param=float(lam), truncation=truncation)

    @classmethod
    def explicit(cls, probs) -> "DistributionSpec":
        probs = tuple(float(p) for p in probs)
        if not probs or any(p < 0 for p in probs):
            raise InvalidParameter("pmf entries must be non-negative and non-empty")
        total = sum(probs)
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
            raise InvalidParameter(f"pmf must sum to 1, got {total}")
        return cls(kind="pmf", probs=probs)

    # -- pmf and sampling ---------------------------------------------------

    def pmf(self) -> np.ndarray:
        """Probability vector over degrees 0..D (sums to 1)."""
        if self.kind == "dirac":
            arr = np.zeros(int(self.param) + 1)
            arr[int(self.param)] = 1.0
            return arr
        if self.kind == "poisson":
            lam = self.param
            d = int(self.truncation)
            if lam == 0.0:
                return np.array([1.0])
            k = np.arange(d + 1)
            logs = k * math.log(lam) - lam - np.array([math.lgamma(i + 1) for i in k])
            arr = np.exp(logs)
            return arr / arr.sum()
        if self.kind == "pmf":
            return np.asarray(self.probs, dtype=float)
        raise InvalidParameter(f"unknown distribution kind: {self.kind!r}")

    def mean(self) -> float:
        p = self.pmf()
        return float(np.arange(p.size) @ p)

    def max_degree(self) -> int:
        p = self.pmf()
        return int(np.max(np.nonzero(p)[0], initial=0))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw n i.i.d. degrees (always consumes the generator)."""
        return rng.choice(self.pmf().size, size=n, p=self.pmf())

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        if self.kind == "dirac":
            return {"kind": "dirac", "p": int(self.param)}
        if self.kind == "poisson":
            return {"kind": "poisson", "lambda": self.param}
        return {"kind": "pmf", "probs": list(self.probs)}

    @classmethod
    def from_json(cls, data: dict) -> "DistributionSpec":
        kind = data.get("kind")
        if kind == "dirac":
            return cls.dirac(data["p"])
        if kind == "poisson":
            return cls.poisson(data["lambda"])
        if kind == "pmf":
            return cls.explicit(data["probs"])
        raise InvalidParameter(f"unknown distribution kind: {kind!r}")

    @classmethod
    def parse(cls, token: str) -> "DistributionSpec":
        """Parse a shell token: ``dirac:3``, ``poisson:2.5`` or ``pmf:0.5,0.5``."""
        kind, sep, arg = token.partition(":")
        if not sep:
            raise InvalidParameter(f"malformed distribution token: {token!r}")
        if kind == "dirac":
            return cls.dirac(int(arg))
        if kind == "poisson":
            return cls.poisson(float(arg))
        if kind == "pmf":
            return cls.explicit(float(x) for x in arg.split(","))
        raise InvalidParameter(f"unknown distribution kind: {kind!r}")

    def label(self) -> str:
        if self.kind == "dirac":
            return f"dirac:{int(self.param)}"
        if self.kind == "poisson":
            return f"poisson:{self.param:g}"
        return "pmf:" + ",".join(f"{p:g}" for p in self.probs)


@dataclass(frozen=True)
class DegreeSample:
    """Degree sequences for the two sides of the bipartition.

    Samples produced by ``sample_conditioned`` always have equal totals;
    hand-built samples may not, and ``graphical_check`` reports it.
    """

    plus: np.ndarray
    minus: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "plus", np.asarray(self.plus, dtype=int))
        object.__setattr__(self, "minus", np.asarray(self.minus, dtype=int))
        if self.plus.size != self.minus.size:
            raise InvalidParameter("the two sides must have the same number of nodes")
        if np.any(self.plus < 0) or np.any(self.minus < 0):
            raise InvalidParameter("degrees must be non-negative")

    @property
    def n(self) -> int:
        return self.plus.size

    @property
    def total(self) -> int:
        return int(self.plus.sum())

    @property
    def max_degree(self) -> int:
        return int(max(self.plus.max(initial=0), self.minus.max(initial=0)))


def sample_conditioned(
    xi_plus: DistributionSpec,
    xi_minus: DistributionSpec,
    n: int,
    rng: np.random.Generator,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> DegreeSample:
    """Sample i.i.d. degree sequences conditioned on equal totals.

    Raises ConditioningFailed after ``max_attempts`` rejected minus samples,
    which typically signals incompatible specs (e.g. disjoint achievable
    totals).
    """
    if n < 1:
        raise InvalidParameter("n must be at least 1")
    plus = xi_plus.sample(n, rng)
    target = int(plus.sum())
    for _ in range(max_attempts):
        minus = xi_minus.sample(n, rng)
        if int(minus.sum()) == target:
            return DegreeSample(plus=plus, minus=minus)
    raise ConditioningFailed(
        f"no matching total after {max_attempts} attempts "
        f"(plus total {target}, specs {xi_plus.label()} / {xi_minus.label()})"
    )


class GraphicalCheck(NamedTuple):
    multigraph_ok: bool
    simple_ok: bool


def bipartite_gale_ryser(deg_plus, deg_minus) -> bool:
    """Whether a simple bipartite graph with these degree sequences exists.

    Gale-Ryser: with the minus degrees sorted non-increasingly, a simple
    realization exists iff the totals agree and for every k,
    sum of the k largest minus degrees <= sum_j min(plus_j, k).
    """
    dp = np.asarray(deg_plus, dtype=int)
    dm = np.sort(np.asarray(deg_minus, dtype=int))[::-1]
    if dp.sum() != dm.sum():
        return False
    if dm.size == 0:
        return True
    if dm[0] > dp.size or dp.max(initial=0) > dm.size:
        return False
    lhs = np.cumsum(dm)
    # rhs[k-1] = sum_j min(dp_j, k) = sum_{i<=k} #{j : dp_j >= i}
    counts = np.bincount(np.minimum(dp, dm.size), minlength=dm.size + 1)
    at_least = counts[::-1].cumsum()[::-1]  # at_least[i] = #{j : dp_j >= i}
    rhs = np.cumsum(at_least[1 : dm.size + 1])
    return bool(np.all(lhs <= rhs))


def graphical_check(sample: DegreeSample) -> GraphicalCheck:
    """Feasibility flags: multigraph pairing and simple-graph realization."""
    multigraph_ok = int(sample.plus.sum()) == int(sample.minus.sum())
    simple_ok = multigraph_ok and bipartite_gale_ryser(sample.plus, sample.minus)
    return GraphicalCheck(multigraph_ok=multigraph_ok, simple_ok=simple_ok)
