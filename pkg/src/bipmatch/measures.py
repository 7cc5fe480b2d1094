"""Finite point measures on the non-negative integers.

A measure is stored as a dense mass vector indexed by degree 0..D.  The
simulation chains use integer masses (one unit per node); the fluid limit
reuses the same type with real masses.  Only finitely many functionals are
ever evaluated, so ``moment`` accepts a small set of named test functions
plus arbitrary callables.
"""

from __future__ import annotations

import json

import numpy as np

__all__ = ["PointMeasure"]


def _as_mass_array(masses) -> np.ndarray:
    arr = np.asarray(masses, dtype=float)
    if arr.ndim != 1:
        raise ValueError("masses must be a one-dimensional vector")
    if arr.size == 0:
        arr = np.zeros(1)
    if np.any(arr < 0):
        raise ValueError("masses must be non-negative")
    return arr


class PointMeasure:
    """Finite measure on {0, 1, ..., D} with non-negative masses.

    Value semantics: every operation returns a new instance; instances are
    safe to share across threads.
    """

    __slots__ = ("masses",)

    def __init__(self, masses):
        self.masses = _as_mass_array(masses)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, size: int) -> "PointMeasure":
        """The null measure on 0..size-1."""
        return cls(np.zeros(max(size, 1)))

    @classmethod
    def dirac(cls, k: int, mass: float = 1.0, size: int | None = None) -> "PointMeasure":
        """``mass`` units at degree ``k``, optionally padded to ``size``."""
        if k < 0:
            raise ValueError("degree must be non-negative")
        n = max(k + 1, size or 0)
        arr = np.zeros(n)
        arr[k] = mass
        return cls(arr)

    @classmethod
    def from_degrees(cls, degrees, size: int | None = None) -> "PointMeasure":
        """Empirical measure of an integer sequence (one unit per entry)."""
        degrees = np.asarray(degrees, dtype=int)
        top = int(degrees.max(initial=0))
        n = max(top + 1, size or 0)
        return cls(np.bincount(degrees, minlength=n).astype(float))

    # -- functionals -------------------------------------------------------

    def moment(self, phi) -> float:
        """Evaluate sum_k phi(k) * mass(k).

        ``phi`` is either a callable on integers or one of the tags
        ``"one"`` (constant 1), ``"x"``, ``"x2"``, ``"positive"``
        (indicator of k >= 1).
        """
        m = self.masses
        k = np.arange(m.size)
        if phi == "one":
            return float(m.sum())
        if phi == "x":
            return float(k @ m)
        if phi == "x2":
            return float((k * k) @ m)
        if phi == "positive":
            return float(m[1:].sum())
        if callable(phi):
            vals = np.array([phi(int(i)) for i in k], dtype=float)
            return float(vals @ m)
        raise ValueError(f"unknown test function: {phi!r}")

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @property
    def first_moment(self) -> float:
        return float(np.arange(self.masses.size) @ self.masses)

    @property
    def second_moment(self) -> float:
        k = np.arange(self.masses.size)
        return float((k * k) @ self.masses)

    def mass_at(self, k: int) -> float:
        return float(self.masses[k]) if 0 <= k < self.masses.size else 0.0

    # -- atom updates ------------------------------------------------------

    def add_atom(self, k: int) -> "PointMeasure":
        """One more unit of mass at degree ``k``."""
        n = max(self.masses.size, k + 1)
        arr = np.zeros(n)
        arr[: self.masses.size] = self.masses
        arr[k] += 1.0
        return PointMeasure(arr)

    def remove_atom(self, k: int) -> "PointMeasure":
        """One unit of mass less at degree ``k``; the mass must be there."""
        if not (0 <= k < self.masses.size) or self.masses[k] < 1.0:
            raise ValueError(f"cannot remove an atom at {k}: mass {self.mass_at(k)}")
        arr = self.masses.copy()
        arr[k] -= 1.0
        return PointMeasure(arr)

    # -- algebra and comparison --------------------------------------------

    def __add__(self, other: "PointMeasure") -> "PointMeasure":
        n = max(self.masses.size, other.masses.size)
        arr = np.zeros(n)
        arr[: self.masses.size] += self.masses
        arr[: other.masses.size] += other.masses
        return PointMeasure(arr)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointMeasure):
            return NotImplemented
        n = max(self.masses.size, other.masses.size)
        a = np.zeros(n)
        b = np.zeros(n)
        a[: self.masses.size] = self.masses
        b[: other.masses.size] = other.masses
        return bool(np.array_equal(a, b))

    def __hash__(self):
        return hash(tuple(np.trim_zeros(self.masses, "b").tolist()))

    def __repr__(self):
        atoms = [f"{m:g}*d{k}" for k, m in enumerate(self.masses) if m != 0.0]
        return f"PointMeasure({' + '.join(atoms) or '0'})"

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {"masses": self.masses.tolist()}

    @classmethod
    def from_json(cls, data) -> "PointMeasure":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(data["masses"])
