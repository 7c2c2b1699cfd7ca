"""Bias criteria: certificate checking and instance search.

A bias certificate records a subgroup pair (G inside G+) together with two
classes of G that fuse in G+ but have different square-root counts; the
theorem then predicts a fully one-sided prime race between them. The
subgroup criterion (commuting subgroups H, K with a non-square h conjugate
to a square k) is a recipe for producing such pairs inside symmetric groups.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .classfn import class_plus, square_root_count
from .permgroup import (
    Permutation,
    PermutationGroup,
    SubgroupEmbedding,
    generate_group,
)

SEARCH_DEGREE_CAP = 12
SEARCH_GROUP_CAP = 10**4

__all__ = [
    "SubgroupEmbedding",
    "BiasCertificate",
    "LemmaReport",
    "check_theorem",
    "check_lemma_criterion",
    "search_sn_instances",
    "build_paper_example",
]


@dataclass(frozen=True)
class BiasCertificate:
    """Verdict of the fused-classes / square-root-gap test for one class pair."""

    embedding: SubgroupEmbedding
    c1_rep: Permutation
    c2_rep: Permutation
    r1: int
    r2: int
    fused: bool
    predicted_normalized_limit: Fraction

    @property
    def valid(self) -> bool:
        return self.fused and self.r1 < self.r2

    def signature(self) -> tuple:
        """Dedup key: orders, class cycle types, and the square-root gap."""
        return (
            self.embedding.ambient.order,
            self.embedding.sub.order,
            self.c1_rep.cycle_type(),
            self.c2_rep.cycle_type(),
            self.r2 - self.r1,
        )

    def describe(self) -> str:
        status = "VALID" if self.valid else "invalid"
        return (
            f"{status}: |G+|={self.embedding.ambient.order} |G|={self.embedding.sub.order} "
            f"C1={self.c1_rep.to_cycle_string()} C2={self.c2_rep.to_cycle_string()} "
            f"fused={self.fused} r1={self.r1} r2={self.r2} "
            f"limit={self.predicted_normalized_limit}"
        )


def check_theorem(emb: SubgroupEmbedding, c1_rep: Permutation, c2_rep: Permutation) -> BiasCertificate:
    """Check the bias hypotheses for the classes of c1_rep and c2_rep in G.

    Valid when the two classes fuse in the ambient group while the class of
    c2_rep has strictly more square roots in G. The predicted limit of the
    normalized count difference is |C1| * (r2 - r1) / |G| (classes of equal
    size; this is what the plotted series converges to).
    """
    G = emb.sub
    if c1_rep not in G or c2_rep not in G:
        raise ValueError("class representatives must lie in the subgroup")
    rG = square_root_count(G)
    r1 = int(rG(c1_rep).re)
    r2 = int(rG(c2_rep).re)
    fused = class_plus(c1_rep, emb) == class_plus(c2_rep, emb)
    size_c1 = len(G.class_of(c1_rep))
    limit = Fraction(size_c1 * (r2 - r1), G.order)
    return BiasCertificate(emb, c1_rep, c2_rep, r1, r2, fused, limit)


@dataclass
class LemmaReport:
    """Outcome of the commuting-subgroup criterion with its proof counts."""

    trivial_intersection: bool = False
    centralizing: bool = False
    h_nonsquare_in_H: bool = False
    k_square_in_K: bool = False
    conjugate_in_ambient: bool = False
    product_group: PermutationGroup | None = None
    sq_roots_of_k_in_G: int = 0
    sq_roots_of_k_expected: int = 0
    sq_roots_of_h_in_G: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _count_square_roots(group: PermutationGroup, target: Permutation) -> int:
    return sum(1 for x in group.elements if x * x == target)


def check_lemma_criterion(
    Gplus: PermutationGroup,
    H: PermutationGroup,
    K: PermutationGroup,
    h: Permutation,
    k: Permutation,
) -> LemmaReport:
    """Verify the subgroup criterion and the counting identities behind it.

    Requires H, K <= G+ with trivial intersection, H centralizing K, h a
    non-square of H, k a square of K, and h conjugate to k in G+. On success
    also brute-force checks, over G = HK, that the square roots of k number
    #{x in K : x^2 = k} * #{x in H : x^2 = 1} > 0 while h has none.
    """
    if not H.is_subgroup_of(Gplus) or not K.is_subgroup_of(Gplus):
        raise ValueError("H and K must be subgroups of the ambient group")
    if h not in H or k not in K:
        raise ValueError("h must lie in H and k in K")
    rep = LemmaReport()

    inter = set(H.elements) & set(K.elements)
    rep.trivial_intersection = inter == {Gplus.identity}
    if not rep.trivial_intersection:
        rep.failures.append(f"H and K intersect in {len(inter)} elements")

    rep.centralizing = all(a * b == b * a for a in H.elements for b in K.elements)
    if not rep.centralizing:
        rep.failures.append("H does not centralize K")

    rep.h_nonsquare_in_H = _count_square_roots(H, h) == 0
    if not rep.h_nonsquare_in_H:
        rep.failures.append("h is a square in H")

    rep.k_square_in_K = _count_square_roots(K, k) > 0
    if not rep.k_square_in_K:
        rep.failures.append("k is not a square in K")

    rep.conjugate_in_ambient = any(h.conjugate_by(a) == k for a in Gplus.elements)
    if not rep.conjugate_in_ambient:
        rep.failures.append("h and k are not conjugate in the ambient group")

    if rep.failures:
        return rep

    G = generate_group(list(H.generators) + list(K.generators), degree=Gplus.degree)
    if G.order != H.order * K.order:
        rep.failures.append("|HK| != |H|*|K| despite trivial intersection")
        return rep
    rep.product_group = G
    rep.sq_roots_of_k_in_G = _count_square_roots(G, k)
    rep.sq_roots_of_k_expected = _count_square_roots(K, k) * _count_square_roots(H, Gplus.identity)
    rep.sq_roots_of_h_in_G = _count_square_roots(G, h)
    if rep.sq_roots_of_k_in_G != rep.sq_roots_of_k_expected:
        rep.failures.append("square-root product formula for k fails")
    if rep.sq_roots_of_k_in_G == 0:
        rep.failures.append("k has no square roots in G")
    if rep.sq_roots_of_h_in_G != 0:
        rep.failures.append("h unexpectedly has square roots in G")
    return rep


def _reduced_cycle_types(support: int, max_order: int) -> list[tuple[int, ...]]:
    """Partitions of `support` into parts >= 2 with lcm divisible by 4."""
    from math import lcm

    out = []

    def parts(remaining: int, minimum: int, acc: tuple[int, ...]):
        if remaining == 0:
            if acc and lcm(*acc) % 4 == 0 and lcm(*acc) <= max_order:
                out.append(tuple(sorted(acc, reverse=True)))
            return
        for part in range(minimum, remaining + 1):
            parts(remaining - part, part, acc + (part,))

    parts(support, 2, ())
    return out


def _canonical_pair(ctype: tuple[int, ...], degree: int) -> tuple[Permutation, Permutation, Permutation]:
    """sigma on 0..s-1, tau the shifted copy, and the swap pairing their cycles."""
    s = sum(ctype)
    cycles_sigma, cycles_tau = [], []
    at = 0
    for length in ctype:
        cycles_sigma.append(list(range(at, at + length)))
        cycles_tau.append(list(range(s + at, s + at + length)))
        at += length
    sigma = Permutation.from_cycles(cycles_sigma, degree)
    tau = Permutation.from_cycles(cycles_tau, degree)
    swap_cycles = [[a, b] for ca, cb in zip(cycles_sigma, cycles_tau) for a, b in zip(ca, cb)]
    swap = Permutation.from_cycles(swap_cycles, degree)
    return sigma, tau, swap


def search_sn_instances(n: int, max_elem_order: int = 12) -> list[BiasCertificate]:
    """Search degree-n instances of the subgroup criterion.

    Enumerates, up to relabeling, pairs (sigma, tau) of equal cycle type with
    order divisible by 4 and disjoint supports, builds H = <sigma^2>,
    K = <tau>, the support-exchanging involution, and keeps every pair that
    passes both the subgroup criterion and the fused-classes test.
    Certificates are deduplicated by signature.
    """
    if n > SEARCH_DEGREE_CAP:
        raise ValueError(f"degree {n} exceeds search cap {SEARCH_DEGREE_CAP}")
    results: list[BiasCertificate] = []
    seen: set[tuple] = set()
    for support in range(4, n // 2 + 1):
        for ctype in _reduced_cycle_types(support, max_elem_order):
            sigma, tau, swap = _canonical_pair(ctype, n)
            Gplus = generate_group([sigma, tau, swap], cap=SEARCH_GROUP_CAP)
            H = generate_group([sigma * sigma], degree=n)
            K = generate_group([tau], degree=n)
            h = sigma * sigma
            k = tau * tau
            report = check_lemma_criterion(Gplus, H, K, h, k)
            if not report.ok:
                continue
            emb = SubgroupEmbedding(Gplus, report.product_group)
            cert = check_theorem(emb, h, k)
            if not cert.valid:
                continue
            if cert.signature() in seen:
                continue
            seen.add(cert.signature())
            results.append(cert)
    return results


def build_paper_example() -> tuple[SubgroupEmbedding, Permutation, Permutation]:
    """The order-32 wreath-product configuration on 8 points.

    Returns the embedding of G = <(12)(34), (5678)> in
    G+ = <(12)(34), (5678), (15)(27)(36)(48)> together with the class
    representatives (12)(34) and (57)(68).
    """
    from .permgroup import parse_cycles

    tau = parse_cycles("(12)(34)", 8)
    sigma = parse_cycles("(5678)", 8)
    gamma = parse_cycles("(15)(27)(36)(48)", 8)
    Gplus = generate_group([tau, sigma, gamma])
    G = generate_group([tau, sigma])
    emb = SubgroupEmbedding(Gplus, G)
    c2 = parse_cycles("(57)(68)", 8)
    return emb, tau, c2
