"""Fluid limit of the joint construction: coupled ODEs for the side measures.

Scaled in time and space by the graph size, the availability measures of
the two sides approach a deterministic pair of measure trajectories on
s in [0, 1).  With finitely supported initial data the system closes on the
point masses, so it is integrated directly in the indicator basis: the
state is a pair of real mass vectors over degrees 0..D.

The matching criterion enters through a kernel giving the distribution
q(a | k) of the chosen match's availability when the arriving node has k
half-edges.  For the greedy rule this is the size-biased law of the minus
measure; for the minimal-residual rule it is the law of the minimum of k
size-biased draws.  Writing m = <mu+, 1>, E = <mu, X> and B_j(mu) =
j*mu(j) - (j+1)*mu(j+1), the mass at degree j evolves as

    d mu+(j)/ds = -mu+(j)/m - (<mu+, F_X>/m) * B_j(mu+)/E+
    d mu-(j)/ds = -<mu+, F_{j}>/m - (E+/m) * B_j(mu-)/E-

with F_X(k) = sum_a (a-1) q(a|k) and F_{j}(k) = q(j+1|k) for k >= 1 (zero
for k = 0).  Total plus mass decreases at unit rate, and the two first
moments decay identically, mirroring the half-edge balance of the chain.

Integration is classical fixed-step fourth-order Runge-Kutta, stopped at
s = 1 - epsilon short of the terminal singularity where the total mass
vanishes.  The matching coverage estimate is one minus the terminal mass
of the minus side at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .degrees import DistributionSpec
from .errors import DegenerateMeasure, InvalidParameter, StepTooLarge

__all__ = [
    "MOMENT_FLOOR",
    "HydroState",
    "MatchKernel",
    "HydroResult",
    "kernel_pmf",
    "rhs",
    "integrate",
    "coverage_estimate",
]

MOMENT_FLOOR = 1e-12
DEFAULT_STEP = 1e-4
DEFAULT_EPSILON = 1e-3
MAX_MASS_MOVE = 0.5


@dataclass
class HydroState:
    """Scaled mass vectors of the two sides at time s."""

    plus: np.ndarray
    minus: np.ndarray
    s: float = 0.0

    def __post_init__(self):
        self.plus = np.asarray(self.plus, dtype=float)
        self.minus = np.asarray(self.minus, dtype=float)
        if self.plus.ndim != 1 or self.minus.ndim != 1:
            raise InvalidParameter("mass vectors must be one-dimensional")
        if self.plus.size != self.minus.size:
            d = max(self.plus.size, self.minus.size)
            self.plus = np.pad(self.plus, (0, d - self.plus.size))
            self.minus = np.pad(self.minus, (0, d - self.minus.size))

    @classmethod
    def from_specs(cls, xi_plus: DistributionSpec, xi_minus: DistributionSpec) -> "HydroState":
        """Initial condition: one unit of mass per side, split by the pmfs."""
        return cls(plus=xi_plus.pmf(), minus=xi_minus.pmf(), s=0.0)

    @property
    def max_degree(self) -> int:
        return self.plus.size - 1

    def copy(self) -> "HydroState":
        return HydroState(self.plus.copy(), self.minus.copy(), self.s)


@dataclass(frozen=True)
class MatchKernel:
    """Availability law of the selected match, per arriving half-edge count.

    ``evaluator`` (custom kind only) maps (k, minus-vector) to a pmf over
    availabilities indexed 0..D with zero mass at 0.
    """

    kind: str
    evaluator: object = None

    def __post_init__(self):
        if self.kind not in ("greedy", "minres", "custom"):
            raise InvalidParameter(f"unknown kernel kind: {self.kind!r}")
        if self.kind == "custom" and not callable(self.evaluator):
            raise InvalidParameter("a custom kernel needs a callable evaluator")

    @classmethod
    def greedy(cls) -> "MatchKernel":
        return cls(kind="greedy")

    @classmethod
    def minres(cls) -> "MatchKernel":
        return cls(kind="minres")

    @classmethod
    def custom(cls, evaluator) -> "MatchKernel":
        return cls(kind="custom", evaluator=evaluator)

    @classmethod
    def for_criterion(cls, name: str) -> "MatchKernel":
        if name in ("greedy", "minres"):
            return cls(kind=name)
        raise InvalidParameter(f"no kernel for criterion {name!r}")


def _first_moment(vec: np.ndarray) -> float:
    return float(np.arange(vec.size) @ vec)


def _pmf_matrix(kernel: MatchKernel, minus: np.ndarray) -> np.ndarray:
    """Matrix Q[k-1, a-1] = q(a | k) for k, a in 1..D."""
    d = minus.size - 1
    em = _first_moment(minus)
    if em <= MOMENT_FLOOR:
        raise DegenerateMeasure(f"first moment of the minus side is {em:g}")
    if kernel.kind == "greedy":
        row = np.arange(1, d + 1) * minus[1:] / em
        return np.broadcast_to(row, (d, d))
    if kernel.kind == "minres":
        weighted = np.arange(minus.size) * minus
        tails = np.append(np.cumsum(weighted[::-1])[::-1], 0.0)  # tails[a] = S_a, a=0..D+1
        ratios = tails[1:] / em  # a = 1..D+1; ratios[0] = 1
        powers = np.multiply.accumulate(np.broadcast_to(ratios, (d, d + 1)), axis=0)
        return powers[:, :-1] - powers[:, 1:]
    rows = np.zeros((d, d))
    for k in range(1, d + 1):
        q = np.asarray(kernel.evaluator(k, minus), dtype=float)
        rows[k - 1] = q[1 : d + 1]
    return rows


def kernel_pmf(kernel: MatchKernel, k: int, minus: np.ndarray) -> np.ndarray:
    """The pmf of the match's availability given k >= 1, indexed 0..D."""
    if k < 1:
        raise InvalidParameter("the kernel is only defined for k >= 1")
    minus = np.asarray(minus, dtype=float)
    d = minus.size - 1
    em = _first_moment(minus)
    if em <= MOMENT_FLOOR:
        raise DegenerateMeasure(f"first moment of the minus side is {em:g}")
    if kernel.kind == "greedy":
        return np.concatenate(([0.0], np.arange(1, d + 1) * minus[1:] / em))
    if kernel.kind == "minres":
        weighted = np.arange(minus.size) * minus
        tails = np.append(np.cumsum(weighted[::-1])[::-1], 0.0)
        ratios = tails[1:] / em
        powers = ratios**k
        return np.concatenate(([0.0], powers[:-1] - powers[1:]))
    q = np.asarray(kernel.evaluator(k, minus), dtype=float)
    return q


def rhs(state: HydroState, kernel: MatchKernel) -> tuple[np.ndarray, np.ndarray]:
    """Time derivative of the two mass vectors."""
    u, v = state.plus, state.minus
    idx = np.arange(u.size)
    m = float(u.sum())
    ep = float(idx @ u)
    em = float(idx @ v)
    if m <= MOMENT_FLOOR or ep <= MOMENT_FLOOR or em <= MOMENT_FLOOR:
        raise DegenerateMeasure(
            f"moments too small at s={state.s:g}: mass {m:g}, first moments {ep:g}/{em:g}"
        )
    qmat = _pmf_matrix(kernel, v)
    d = qmat.shape[0]
    # F_X(k) = sum_a (a-1) q(a|k); g[j] = sum_{k>=1} u(k) q(j+1|k)
    f_x = qmat @ np.arange(d, dtype=float)
    u_fx = float(u[1:] @ f_x)
    g = np.append(u[1:] @ qmat, 0.0)

    wu = idx * u
    bu = wu - np.append(wu[1:], 0.0)
    wv = idx * v
    bv = wv - np.append(wv[1:], 0.0)

    du = -u / m - (u_fx / m) * bu / ep
    dv = -g / m - (ep / m) * bv / em
    return du, dv


@dataclass
class HydroResult:
    """A sampled trajectory and its endpoint."""

    kernel: str
    h: float
    epsilon: float
    states: list[HydroState]
    final: HydroState

    def coverage_estimate(self) -> float:
        return coverage_estimate(self.final)

    def mass_identity_residual(self) -> float:
        """Largest deviation of the plus total mass from 1 - s."""
        return max(abs(float(st.plus.sum()) - (1.0 - st.s)) for st in self.states)

    def first_moment_gap(self) -> float:
        """Largest gap between the two first moments along the trajectory."""
        idx = np.arange(self.states[0].plus.size)
        return max(abs(float(idx @ st.plus) - float(idx @ st.minus)) for st in self.states)

    def summary(self, initial_label: str = "") -> dict:
        return {
            "kernel": self.kernel,
            "initial_spec": initial_label,
            "h": self.h,
            "epsilon": self.epsilon,
            "coverage_estimate": self.coverage_estimate(),
            "mass_identity_residual": self.mass_identity_residual(),
        }

    def trajectory_rows(self):
        """Yield (s, plus..., minus...) tuples for CSV export."""
        for st in self.states:
            yield (st.s, *st.plus.tolist(), *st.minus.tolist())


def coverage_estimate(final: HydroState) -> float:
    """Matching coverage: one minus the terminal minus mass at zero."""
    return min(1.0, max(0.0, 1.0 - float(final.minus[0])))


def integrate(initial: HydroState, kernel: MatchKernel,
              h: float = DEFAULT_STEP, end_epsilon: float = DEFAULT_EPSILON) -> HydroResult:
    """Integrate from s=0 to s=1-epsilon with fixed-step fourth-order RK.

    Negative masses produced by roundoff are clipped to zero after each
    step.  The trajectory is sampled every max(h, 1e-3) units of s plus the
    final state.  Raises StepTooLarge if a single step moves any mass by
    more than 0.5, which signals an unreasonable step size.
    """
    if not 0.0 < h <= 0.01:
        raise InvalidParameter(f"step size must be in (0, 0.01], got {h}")
    if not 0.0 < end_epsilon <= 0.05:
        raise InvalidParameter(f"epsilon must be in (0, 0.05], got {end_epsilon}")
    if abs(initial.s) > 1e-12:
        raise InvalidParameter("integration starts at s=0")
    if abs(float(initial.plus.sum()) - 1.0) > 1e-9 or abs(float(initial.minus.sum()) - 1.0) > 1e-9:
        raise InvalidParameter("initial masses must be normalized to 1 on each side")

    span = 1.0 - end_epsilon
    nsteps = int(math.floor(span / h + 1e-9))
    remainder = span - nsteps * h
    sample_stride = max(1, int(round(max(h, 1e-3) / h)))

    u = initial.plus.astype(float).copy()
    v = initial.minus.astype(float).copy()
    states = [HydroState(u.copy(), v.copy(), 0.0)]

    def rk4_step(u, v, s, dt):
        k1u, k1v = rhs(HydroState(u, v, s), kernel)
        k2u, k2v = rhs(HydroState(u + 0.5 * dt * k1u, v + 0.5 * dt * k1v, s + 0.5 * dt), kernel)
        k3u, k3v = rhs(HydroState(u + 0.5 * dt * k2u, v + 0.5 * dt * k2v, s + 0.5 * dt), kernel)
        k4u, k4v = rhs(HydroState(u + dt * k3u, v + dt * k3v, s + dt), kernel)
        nu = u + (dt / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        nv = v + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        move = max(float(np.abs(nu - u).max()), float(np.abs(nv - v).max()))
        if move > MAX_MASS_MOVE:
            raise StepTooLarge(f"a step of {dt:g} moved mass by {move:g} at s={s:g}")
        np.clip(nu, 0.0, None, out=nu)
        np.clip(nv, 0.0, None, out=nv)
        return nu, nv

    for i in range(nsteps):
        u, v = rk4_step(u, v, i * h, h)
        if (i + 1) % sample_stride == 0:
            states.append(HydroState(u.copy(), v.copy(), (i + 1) * h))
    s = nsteps * h
    if remainder > 1e-12:
        u, v = rk4_step(u, v, s, remainder)
        s = span
    if states[-1].s != s:
        states.append(HydroState(u.copy(), v.copy(), s))

    final = HydroState(u.copy(), v.copy(), s)
    return HydroResult(kernel=kernel.kind, h=h, epsilon=end_epsilon,
                       states=states, final=final)
