"""Ground sets, element sets, fractional points and the two matroid classes.

Elements are dense 0-based indices.  Every type here is immutable; the
module-level functions are pure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

DEFAULT_TOL = 1e-9


class GroundSetMismatch(ValueError):
    """An element set or point lives on a different ground set."""


class PolytopeViolation(ValueError):
    """A fractional point lies outside the matroid polytope."""


@dataclass(frozen=True)
class GroundSet:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"ground set size must be a positive integer, got {self.n!r}")

    def full(self) -> "ElementSet":
        return ElementSet(range(self.n), self)

    def empty(self) -> "ElementSet":
        return ElementSet((), self)


@dataclass(frozen=True, init=False)
class ElementSet:
    """Sorted, duplicate-free subset of a ground set."""

    members: tuple
    ground: GroundSet

    def __init__(self, members: Iterable[int], ground: Union[GroundSet, int]):
        if not isinstance(ground, GroundSet):
            ground = GroundSet(ground)
        ms = tuple(sorted({int(i) for i in members}))
        if ms and (ms[0] < 0 or ms[-1] >= ground.n):
            raise ValueError(f"element indices {ms} out of range 0..{ground.n - 1}")
        object.__setattr__(self, "members", ms)
        object.__setattr__(self, "ground", ground)

    @classmethod
    def from_mask(cls, mask: int, ground: Union[GroundSet, int]) -> "ElementSet":
        n = ground.n if isinstance(ground, GroundSet) else ground
        return cls((i for i in range(n) if mask >> i & 1), ground)

    @property
    def mask(self) -> int:
        # the exact enumeration code relies on n <= 64 for this to be a machine word
        m = 0
        for i in self.members:
            m |= 1 << i
        return m

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, i):
        return i in self.members

    def issubset(self, other: "ElementSet") -> bool:
        return set(self.members) <= set(other.members)

    def union(self, other: Iterable[int]) -> "ElementSet":
        return ElementSet(self.members + tuple(other), self.ground)

    def difference(self, other: Iterable[int]) -> "ElementSet":
        drop = set(other)
        return ElementSet((i for i in self.members if i not in drop), self.ground)

    def __repr__(self):
        return f"ElementSet({list(self.members)}, n={self.ground.n})"


@dataclass(frozen=True, init=False)
class FractionalPoint:
    """A vector in [0,1]^N.  ``coords`` is a read-only float array."""

    coords: np.ndarray = field(compare=False)

    def __init__(self, coords: Sequence[float]):
        arr = np.array(coords, dtype=float).reshape(-1)
        if arr.size == 0:
            raise ValueError("a fractional point needs at least one coordinate")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("coordinates must lie in [0, 1]")
        arr.flags.writeable = False
        object.__setattr__(self, "coords", arr)

    @classmethod
    def constant(cls, n: int, value: float) -> "FractionalPoint":
        return cls(np.full(n, float(value)))

    @property
    def ground(self) -> GroundSet:
        return GroundSet(self.coords.size)

    @property
    def n(self) -> int:
        return self.coords.size

    def total(self, A: Iterable[int] | None = None) -> float:
        """x(A); the whole ground set when ``A`` is None."""
        if A is None:
            return float(self.coords.sum())
        idx = list(A)
        return float(self.coords[idx].sum()) if idx else 0.0

    def __getitem__(self, i):
        return self.coords[i]

    def __len__(self):
        return self.coords.size

    def __eq__(self, other):
        if not isinstance(other, FractionalPoint):
            return NotImplemented
        return np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash(self.coords.tobytes())

    def __repr__(self):
        return f"FractionalPoint({self.coords.tolist()})"


def as_point(x) -> FractionalPoint:
    return x if isinstance(x, FractionalPoint) else FractionalPoint(x)


@dataclass(frozen=True, init=False)
class UniformMatroid:
    """U^k_n: independent sets are the subsets of size at most k."""

    ground: GroundSet
    k: int

    def __init__(self, ground: Union[GroundSet, int], k: int):
        if not isinstance(ground, GroundSet):
            ground = GroundSet(ground)
        if int(k) != k or not 0 <= k <= ground.n:
            raise ValueError(f"rank bound k={k!r} must satisfy 0 <= k <= n={ground.n}")
        object.__setattr__(self, "ground", ground)
        object.__setattr__(self, "k", int(k))

    @property
    def n(self) -> int:
        return self.ground.n

    def as_partition(self) -> "PartitionMatroid":
        return PartitionMatroid([self.ground.full()], [self.k])


@dataclass(frozen=True, init=False)
class PartitionMatroid:
    """Blocks D_1..D_m partitioning the ground set, with capacities d_i.

    Capacities above the block size are capped to the block size.
    """

    blocks: tuple
    capacities: tuple

    def __init__(self, blocks: Sequence[ElementSet], capacities: Sequence[int]):
        blocks = tuple(blocks)
        if not blocks:
            raise ValueError("a partition matroid needs at least one block")
        if len(capacities) != len(blocks):
            raise ValueError("capacities and blocks differ in length")
        ground = blocks[0].ground
        seen = []
        for b in blocks:
            if b.ground != ground:
                raise GroundSetMismatch("blocks live on different ground sets")
            seen.extend(b.members)
        if sorted(seen) != list(range(ground.n)):
            raise ValueError("blocks must be pairwise disjoint and cover the ground set")
        caps = []
        for b, d in zip(blocks, capacities):
            if int(d) != d or d < 0:
                raise ValueError(f"capacity {d!r} must be a non-negative integer")
            caps.append(min(int(d), len(b)))
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "capacities", tuple(caps))

    @classmethod
    def from_sizes(cls, sizes_caps: Sequence[tuple[int, int]]) -> "PartitionMatroid":
        """Consecutive blocks: ``[(2, 1), (3, 1)]`` gives D_1={0,1}, D_2={2,3,4}."""
        n = sum(s for s, _ in sizes_caps)
        ground = GroundSet(n)
        blocks, start = [], 0
        for size, _ in sizes_caps:
            if size < 1:
                raise ValueError("blocks must be non-empty")
            blocks.append(ElementSet(range(start, start + size), ground))
            start += size
        return cls(blocks, [d for _, d in sizes_caps])

    @classmethod
    def from_spec(cls, spec: str) -> "PartitionMatroid":
        """Parse ``"2:1,3:1"`` (block size : capacity, blocks laid out consecutively)."""
        pairs = []
        try:
            for part in spec.split(","):
                size, cap = part.split(":")
                pairs.append((int(size), int(cap)))
        except ValueError:
            raise ValueError(f"malformed partition spec {spec!r}; expected e.g. '2:1,3:1'") from None
        return cls.from_sizes(pairs)

    @property
    def ground(self) -> GroundSet:
        return self.blocks[0].ground

    @property
    def n(self) -> int:
        return self.ground.n

    def block_of(self, e: int) -> int:
        for i, b in enumerate(self.blocks):
            if e in b:
                return i
        raise ValueError(f"element {e} not in ground set")


Matroid = Union[UniformMatroid, PartitionMatroid]


def _check_ground(matroid: Matroid, ground: GroundSet):
    if matroid.ground != ground:
        raise GroundSetMismatch(
            f"ground set of size {ground.n} does not match matroid ground set of size {matroid.n}")


def rank(matroid: Matroid, s: ElementSet) -> int:
    _check_ground(matroid, s.ground)
    if isinstance(matroid, UniformMatroid):
        return min(len(s), matroid.k)
    members = set(s.members)
    return sum(min(len(members.intersection(b.members)), d)
               for b, d in zip(matroid.blocks, matroid.capacities))


def is_independent(matroid: Matroid, s: ElementSet) -> bool:
    return rank(matroid, s) == len(s)


def in_polytope(matroid: Matroid, x, tol: float = DEFAULT_TOL) -> bool:
    """Box and sum constraints of the matroid polytope, each up to ``tol``."""
    if tol < 0:
        raise ValueError("tolerance must be non-negative")
    coords = np.asarray(x.coords if isinstance(x, FractionalPoint) else x, dtype=float)
    if coords.shape != (matroid.n,):
        return False
    if np.any(coords < -tol) or np.any(coords > 1 + tol):
        return False
    if isinstance(matroid, UniformMatroid):
        return coords.sum() <= matroid.k + tol
    return all(coords[list(b.members)].sum() <= d + tol
               for b, d in zip(matroid.blocks, matroid.capacities))


def require_in_polytope(matroid: Matroid, x, tol: float = DEFAULT_TOL):
    if not in_polytope(matroid, x, tol):
        raise PolytopeViolation("fractional point lies outside the matroid polytope")


def support(x) -> ElementSet:
    x = as_point(x)
    return ElementSet(np.flatnonzero(x.coords > 0), x.ground)
