"""Splitting of a rational prime into prime ideals of the fixed field.

Given the Frobenius element sigma at p (an element of G+) and a subgroup
G <= G+, the primes of the intermediate field above p correspond to orbits
of right multiplication by sigma on the right cosets of G. The orbit length
is the residue degree f, and the Frobenius class over the intermediate
field is the G-class of tau * sigma^f * tau^{-1} for a coset representative
tau in the orbit.
"""

from __future__ import annotations

from dataclasses import dataclass

from .classfn import ClassFunction, GaussianRational, induce
from .permgroup import Permutation, SubgroupEmbedding


@dataclass(frozen=True)
class SplittingPattern:
    """How one rational prime splits: (class_id in G, residue degree f, multiplicity)."""

    entries: tuple[tuple[int, int, int], ...]

    @property
    def total_degree(self) -> int:
        return sum(f * mult for _, f, mult in self.entries)

    def __iter__(self):
        return iter(self.entries)


def split_prime(sigma: Permutation, emb: SubgroupEmbedding) -> SplittingPattern:
    """Decompose the coset action of sigma into the splitting pattern at p."""
    Gp = emb.ambient
    G = emb.sub
    if sigma not in Gp:
        raise ValueError("sigma is not in the ambient group")
    # right cosets G*a, labeled by the first element of each coset in canonical order
    coset_id: dict[tuple[int, ...], int] = {}
    coset_rep: list[Permutation] = []
    for a in Gp.elements:
        if a.images in coset_id:
            continue
        cid = len(coset_rep)
        coset_rep.append(a)
        for h in G.elements:
            coset_id[(h * a).images] = cid
    # orbits of G*a -> G*a*sigma
    nxt = [coset_id[(coset_rep[c] * sigma).images] for c in range(len(coset_rep))]
    seen = [False] * len(coset_rep)
    tally: dict[tuple[int, int], int] = {}
    for start in range(len(coset_rep)):
        if seen[start]:
            continue
        length = 0
        c = start
        while not seen[c]:
            seen[c] = True
            c = nxt[c]
            length += 1
        tau = coset_rep[start]
        frob = tau * (sigma**length) * tau.inverse()
        assert frob in G, "orbit closed but conjugated power left the subgroup"
        key = (G.class_index_of(frob), length)
        tally[key] = tally.get(key, 0) + 1
    entries = tuple(sorted((cid, f, mult) for (cid, f), mult in tally.items()))
    pattern = SplittingPattern(entries)
    assert pattern.total_degree == emb.index
    return pattern


class PatternTable:
    """Splitting patterns cached per conjugacy class of the ambient group.

    Patterns are class functions of sigma, so one computation per class of G+
    turns the per-prime lookup into indexing by the class of sigma.
    """

    def __init__(self, emb: SubgroupEmbedding):
        self.emb = emb
        self.patterns = tuple(
            split_prime(cls[0], emb) for cls in emb.ambient.classes
        )

    def for_class(self, ambient_class_id: int) -> SplittingPattern:
        return self.patterns[ambient_class_id]

    def for_element(self, sigma: Permutation) -> SplittingPattern:
        return self.patterns[self.emb.ambient.class_index_of(sigma)]


def ideal_side_weight(
    pattern: SplittingPattern, emb: SubgroupEmbedding, t: ClassFunction, m: int
) -> GaussianRational:
    """Exact t-weight contributed at prime-power level p^m by one pattern.

    An ideal of residue degree f reaches level p^m only when f divides m, in
    which case it contributes f * t(Frob^(m/f)) per ideal.
    """
    acc = GaussianRational(0)
    for class_id, f, mult in pattern:
        if m % f == 0:
            rep = emb.sub.classes[class_id][0]
            acc = acc + (f * mult) * t(rep ** (m // f))
    return acc


def transfer_identity_check(
    emb: SubgroupEmbedding, t: ClassFunction, sigma: Permutation, m: int
) -> bool:
    """Exact per-prime, per-power form of the induction identity.

    Both sides are computed independently: the ideal side sums
    f * mult * t(class^(m/f)) over pattern entries with f | m; the rational
    side evaluates the induced class function at sigma^m.
    """
    pattern = split_prime(sigma, emb)
    lhs = ideal_side_weight(pattern, emb, t, m)
    rhs = induce(t, emb)(sigma**m)
    return lhs == rhs
