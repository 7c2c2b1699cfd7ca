"""Exact finite permutation groups: closure, conjugacy classes, cosets.

Points are 0-based internally; cycle notation in strings is 1-based,
matching the usual convention. All objects are immutable after
construction and safe to share between threads.
"""

from __future__ import annotations

import re
from functools import cached_property
from typing import Iterable, Sequence

DEFAULT_CLOSURE_CAP = 10**6

_CYCLE_RE = re.compile(r"\(([^()]*)\)")


class ClosureCapExceeded(Exception):
    """Group closure grew past the configured element cap."""


class Permutation:
    """A permutation of {0, .., n-1} stored as its image tuple."""

    __slots__ = ("images",)

    def __init__(self, images: Iterable[int]):
        imgs = tuple(images)
        if sorted(imgs) != list(range(len(imgs))):
            raise ValueError(f"not a bijection on 0..{len(imgs) - 1}: {imgs}")
        object.__setattr__(self, "images", imgs)

    @property
    def degree(self) -> int:
        return len(self.images)

    @classmethod
    def identity(cls, degree: int) -> "Permutation":
        return cls(range(degree))

    @classmethod
    def from_cycles(cls, cycles: Sequence[Sequence[int]], degree: int) -> "Permutation":
        """Build from 0-based disjoint cycles; unmentioned points are fixed."""
        images = list(range(degree))
        seen = set()
        for cyc in cycles:
            for a, b in zip(cyc, cyc[1:] + type(cyc)([cyc[0]])):
                if a in seen:
                    raise ValueError(f"point {a} appears in two cycles")
                seen.add(a)
                if not 0 <= a < degree:
                    raise ValueError(f"point {a} out of range for degree {degree}")
                images[a] = b
        return cls(images)

    def __call__(self, point: int) -> int:
        return self.images[point]

    def __mul__(self, other: "Permutation") -> "Permutation":
        """Composition a*b: apply b first, then a."""
        if self.degree != other.degree:
            raise ValueError(f"degree mismatch: {self.degree} vs {other.degree}")
        return Permutation(self.images[j] for j in other.images)

    def inverse(self) -> "Permutation":
        inv = [0] * self.degree
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(inv)

    def __pow__(self, n: int) -> "Permutation":
        if n < 0:
            return self.inverse() ** (-n)
        result = Permutation.identity(self.degree)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def conjugate_by(self, a: "Permutation") -> "Permutation":
        """a * self * a^{-1}."""
        return a * self * a.inverse()

    def cycles(self, include_fixed: bool = False) -> list[tuple[int, ...]]:
        """Disjoint cycles, each starting at its minimal point, sorted."""
        seen = [False] * self.degree
        out = []
        for start in range(self.degree):
            if seen[start]:
                continue
            cyc = [start]
            seen[start] = True
            cur = self.images[start]
            while cur != start:
                cyc.append(cur)
                seen[cur] = True
                cur = self.images[cur]
            if len(cyc) > 1 or include_fixed:
                out.append(tuple(cyc))
        return out

    def cycle_type(self) -> tuple[int, ...]:
        """Multiset of cycle lengths incl. fixed points, descending."""
        return tuple(sorted((len(c) for c in self.cycles(include_fixed=True)), reverse=True))

    def order(self) -> int:
        from math import lcm

        return lcm(*(len(c) for c in self.cycles(include_fixed=True)))

    def support(self) -> frozenset[int]:
        return frozenset(i for i, j in enumerate(self.images) if i != j)

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.images))

    def to_cycle_string(self) -> str:
        """1-based cycle string; points are space-separated when degree >= 10."""
        cycs = self.cycles()
        if not cycs:
            return "()"
        sep = " " if self.degree >= 10 else ""
        return "".join("(" + sep.join(str(p + 1) for p in cyc) + ")" for cyc in cycs)

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and self.images == other.images

    def __hash__(self) -> int:
        return hash(self.images)

    def __lt__(self, other: "Permutation") -> bool:
        return self.images < other.images

    def __repr__(self) -> str:
        return f"Permutation({self.to_cycle_string()!r}, degree={self.degree})"


def parse_cycles(text: str, degree: int | None = None) -> Permutation:
    """Parse a 1-based cycle string like "(12)(34)" or "(1 2)(3 4)".

    Inside a cycle, points separated by whitespace or commas are read as
    multi-digit numbers; with no separators each digit is one point.
    """
    stripped = text.replace(" ", "").replace(",", "").replace("\t", "")
    if stripped in ("", "()", "e", "id"):
        if degree is None:
            raise ValueError("identity string needs an explicit degree")
        return Permutation.identity(degree)
    cycles = []
    consumed = _CYCLE_RE.sub("", text).strip()
    if consumed:
        raise ValueError(f"unparsable cycle text: {text!r}")
    for body in _CYCLE_RE.findall(text):
        body = body.strip()
        if not body:
            continue
        if re.search(r"[\s,]", body):
            points = [int(tok) for tok in re.split(r"[\s,]+", body) if tok]
        else:
            points = [int(ch) for ch in body]
        if any(p < 1 for p in points):
            raise ValueError(f"cycle points are 1-based, got {points}")
        cycles.append([p - 1 for p in points])
    n = degree if degree is not None else 1 + max(p for cyc in cycles for p in cyc)
    return Permutation.from_cycles(cycles, n)


class PermutationGroup:
    """A finite permutation group with its full, canonically sorted element list."""

    def __init__(self, degree: int, generators: Sequence[Permutation], elements: Sequence[Permutation]):
        self.degree = degree
        self.generators = tuple(generators)
        self.elements = tuple(sorted(elements))
        self._index = {p.images: i for i, p in enumerate(self.elements)}

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def identity(self) -> Permutation:
        return Permutation.identity(self.degree)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, p: Permutation) -> bool:
        return isinstance(p, Permutation) and p.images in self._index

    def index(self, p: Permutation) -> int:
        """Position of p in the canonical element list."""
        try:
            return self._index[p.images]
        except KeyError:
            raise ValueError(f"{p!r} is not in the group") from None

    def is_subgroup_of(self, other: "PermutationGroup") -> bool:
        return self.degree == other.degree and all(g in other for g in self.elements)

    @cached_property
    def is_abelian(self) -> bool:
        gens = self.generators or self.elements
        return all(a * b == b * a for a in gens for b in gens)

    @cached_property
    def classes(self) -> tuple[tuple[Permutation, ...], ...]:
        """Conjugacy classes as sorted tuples, ordered by their representatives.

        The representative of a class is its lexicographically smallest member,
        i.e. the first entry of each tuple.
        """
        # Orbits under conjugation by generators; generators suffice since
        # conjugation by a word is iterated conjugation by its letters.
        gens = self.generators or (self.identity,)
        unassigned = dict.fromkeys(self.elements)
        classes = []
        for g in self.elements:
            if g not in unassigned:
                continue
            orbit = {g}
            frontier = [g]
            while frontier:
                h = frontier.pop()
                for a in gens:
                    c = h.conjugate_by(a)
                    if c not in orbit:
                        orbit.add(c)
                        frontier.append(c)
            for h in orbit:
                del unassigned[h]
            classes.append(tuple(sorted(orbit)))
        return tuple(sorted(classes, key=lambda cls: cls[0]))

    def class_index_of(self, p: Permutation) -> int:
        return self._class_lookup[p.images]

    @cached_property
    def _class_lookup(self) -> dict[tuple[int, ...], int]:
        return {p.images: i for i, cls in enumerate(self.classes) for p in cls}

    def class_of(self, p: Permutation) -> tuple[Permutation, ...]:
        return self.classes[self.class_index_of(p)]

    def element_orders(self) -> dict[int, int]:
        """Census {element order: count}."""
        census: dict[int, int] = {}
        for g in self.elements:
            o = g.order()
            census[o] = census.get(o, 0) + 1
        return census

    def __repr__(self) -> str:
        gens = ", ".join(g.to_cycle_string() for g in self.generators) or "()"
        return f"PermutationGroup(degree={self.degree}, order={self.order}, gens=<{gens}>)"


def generate_group(
    generators: Sequence[Permutation],
    degree: int | None = None,
    cap: int = DEFAULT_CLOSURE_CAP,
) -> PermutationGroup:
    """Breadth-first closure of a generating set.

    An empty generating set with an explicit degree yields the trivial group.
    Raises ClosureCapExceeded if the closure grows past `cap` elements.
    """
    gens = list(generators)
    if gens:
        degrees = {g.degree for g in gens}
        if len(degrees) != 1:
            raise ValueError(f"generators of mixed degree: {sorted(degrees)}")
        n = degrees.pop()
        if degree is not None and degree != n:
            raise ValueError(f"explicit degree {degree} != generator degree {n}")
    elif degree is None:
        raise ValueError("empty generating set needs an explicit degree")
    else:
        n = degree
    ident = Permutation.identity(n)
    seen = {ident.images: ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for h in frontier:
            for g in gens:
                prod = g * h
                if prod.images not in seen:
                    if len(seen) >= cap:
                        raise ClosureCapExceeded(f"closure exceeds cap of {cap} elements")
                    seen[prod.images] = prod
                    nxt.append(prod)
        frontier = nxt
    return PermutationGroup(n, gens, list(seen.values()))


class SubgroupEmbedding:
    """A subgroup G inside an ambient group G+ with left-coset bookkeeping."""

    def __init__(self, ambient: PermutationGroup, sub: PermutationGroup):
        if not sub.is_subgroup_of(ambient):
            raise ValueError("sub is not a subgroup of ambient")
        self.ambient = ambient
        self.sub = sub
        self.coset_reps = self._left_coset_reps()

    def _left_coset_reps(self) -> tuple[Permutation, ...]:
        # Greedy sweep over the canonical element list: first unseen element
        # starts the next coset a*G.
        covered: set[tuple[int, ...]] = set()
        reps = []
        for a in self.ambient.elements:
            if a.images in covered:
                continue
            reps.append(a)
            for h in self.sub.elements:
                covered.add((a * h).images)
        assert len(covered) == self.ambient.order
        return tuple(reps)

    @property
    def index(self) -> int:
        return len(self.coset_reps)

    def __repr__(self) -> str:
        return f"SubgroupEmbedding(|G+|={self.ambient.order}, |G|={self.sub.order}, index={self.index})"
