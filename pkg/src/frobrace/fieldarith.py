"""Number-field data and the per-prime Frobenius oracle.

A field is described by a monic integer polynomial f, the full list of its
automorphism polynomials (rational coefficients, degree < deg f), and a map
from automorphisms into a permutation group. The Frobenius class at an
unramified prime p is identified by finding which automorphisms g satisfy
gcd(f, g - x^p) != 1 over F_p: those are precisely the Frobenius elements
at the primes above p, i.e. one full conjugacy class. Only the class is ever
used downstream; the single-prime API returns a canonical representative.

All polynomial arithmetic here and in the kernels is exact integer
arithmetic; no floating point enters any Frobenius decision.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from pathlib import Path

import numpy as np

from . import kernels
from .permgroup import (
    Permutation,
    PermutationGroup,
    SubgroupEmbedding,
    generate_group,
    parse_cycles,
)

CYCLOTOMIC_CAP = 10**4


class ExcludedPrimeError(Exception):
    """Raised when a Frobenius query hits a declared-excluded prime."""


class CorruptFieldDataError(Exception):
    """Raised when the matching census contradicts the ingested field data."""


@dataclass(frozen=True)
class IntPoly:
    """Integer polynomial, coefficients ascending by degree."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        if len(self.coeffs) < 2:
            raise ValueError("degree must be >= 1")
        if self.coeffs[-1] == 0:
            raise ValueError("leading coefficient must be nonzero")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_monic(self) -> bool:
        return self.coeffs[-1] == 1

    def derivative(self) -> "IntPoly":
        return IntPoly(tuple(k * c for k, c in enumerate(self.coeffs))[1:] or (0, 1))

    def __call__(self, x: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc


@dataclass(frozen=True)
class RatPoly:
    """Rational polynomial of degree < deg f, coefficients ascending."""

    coeffs: tuple[Fraction, ...]

    @property
    def denominator(self) -> int:
        return lcm(*(c.denominator for c in self.coeffs)) if self.coeffs else 1

    def scaled_numerators(self) -> tuple[int, ...]:
        d = self.denominator
        return tuple(int(c * d) for c in self.coeffs)

    @classmethod
    def from_strings(cls, items) -> "RatPoly":
        return cls(tuple(Fraction(s) for s in items))

    def to_strings(self) -> list[str]:
        return [
            f"{c.numerator}/{c.denominator}" if c.denominator != 1 else str(c.numerator)
            for c in self.coeffs
        ]


def poly_checksum(coeffs) -> str:
    """sha256 over the comma-joined ascending decimal coefficients."""
    return hashlib.sha256(",".join(str(int(c)) for c in coeffs).encode()).hexdigest()


# ---------------------------------------------------------------------------
# exact modular polynomial arithmetic (reference implementations)
# ---------------------------------------------------------------------------


def _polymul_mod(a: list[int], b: list[int], fmod: list[int], p: int) -> list[int]:
    n = len(fmod) - 1
    res = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                if bj:
                    res[i + j] += ai * bj
    for d in range(len(res) - 1, n - 1, -1):
        c = res[d] % p
        if c:
            for j in range(n):
                res[d - n + j] -= c * fmod[j]
        res[d] = 0
    return [v % p for v in res[:n]]


def modpoly_pow_x_p(f: IntPoly, p: int) -> list[int]:
    """x^p mod (f, p) by binary exponentiation; exact integer arithmetic.

    This is the slow reference; the kernels in `kernels` compute the same
    residue for whole prime ranges.
    """
    if p < 3:
        raise ValueError("p must be an odd prime")
    if not f.is_monic:
        raise ValueError("f must be monic")
    n = f.degree
    fmod = [c % p for c in f.coeffs]
    acc = [0] * n
    acc[1 % n] = 1
    if n == 1:
        # degenerate, kept for completeness
        return [pow(-fmod[0], p, p)]
    for bit in bin(p)[3:]:
        acc = _polymul_mod(acc, acc, fmod, p)
        if bit == "1":
            acc = [0] + acc
            c = acc[n] % p
            if c:
                for j in range(n):
                    acc[j] -= c * fmod[j]
            acc = [v % p for v in acc[:n]]
    return acc


def _gcd_nontrivial_mod(fmod: list[int], u: list[int], p: int) -> bool:
    """True iff gcd(fmod, u) has positive degree in F_p[x]."""
    a = [c % p for c in fmod]
    b = [c % p for c in u]

    def deg(v):
        for d in range(len(v) - 1, -1, -1):
            if v[d]:
                return d
        return -1

    da, db = deg(a), deg(b)
    while db > 0:
        while da >= db:
            la, lb = a[da], b[db]
            sh = da - db
            for j in range(sh):
                a[j] = (lb * a[j]) % p
            for j in range(db + 1):
                a[j + sh] = (lb * a[j + sh] - la * b[j]) % p
            while da >= 0 and a[da] == 0:
                da -= 1
        a, b, da, db = b, a, db, da
    return db == -1 and da >= 1


# ---------------------------------------------------------------------------
# field data
# ---------------------------------------------------------------------------


class NumberFieldData:
    """Defining polynomial, automorphism polynomials, and their group images."""

    def __init__(
        self,
        name: str,
        f: IntPoly,
        automorphisms: list[RatPoly],
        perm_map: list[Permutation],
        group: PermutationGroup,
        subgroup: PermutationGroup,
        class1_rep: Permutation,
        class2_rep: Permutation,
        excluded_primes,
        checksum: str | None = None,
    ):
        self.name = name
        self.f = f
        self.automorphisms = automorphisms
        self.perm_map = perm_map
        self.group = group
        self.subgroup = subgroup
        self.class1_rep = class1_rep
        self.class2_rep = class2_rep
        self.excluded_primes = frozenset(int(p) for p in excluded_primes)
        self.checksum = checksum or poly_checksum(f.coeffs)
        self._consistency_checks()
        self.embedding = SubgroupEmbedding(group, subgroup)
        self._build_kernel_tables()

    def _consistency_checks(self):
        n = self.f.degree
        if not self.f.is_monic:
            raise ValueError("defining polynomial must be monic")
        if len(self.automorphisms) != n or len(self.perm_map) != n:
            raise ValueError("need exactly deg(f) automorphisms with permutation images")
        if self.group.order != n:
            raise ValueError(f"|G+| = {self.group.order} != deg f = {n}")
        if {p.images for p in self.perm_map} != {g.images for g in self.group.elements}:
            raise ValueError("perm_map is not a bijection onto the group")
        if self.checksum != poly_checksum(self.f.coeffs):
            raise ValueError("polynomial checksum mismatch")
        for rep in (self.class1_rep, self.class2_rep):
            if rep not in self.subgroup:
                raise ValueError("class representative not in the subgroup")
        for ratp in self.automorphisms:
            for q in _prime_factors(ratp.denominator):
                if q not in self.excluded_primes:
                    raise ValueError(f"denominator prime {q} missing from excluded_primes")

    def _build_kernel_tables(self):
        n = self.f.degree
        if any(abs(c) >= 2**62 for c in self.f.coeffs):
            raise ValueError("polynomial coefficients overflow the int64 kernels")
        nums = np.zeros((n, n), dtype=np.int64)
        dens = np.zeros(n, dtype=np.int64)
        for i, ratp in enumerate(self.automorphisms):
            sc = ratp.scaled_numerators()
            if any(abs(v) >= 2**62 for v in sc) or ratp.denominator >= 2**62:
                raise ValueError("automorphism coefficients overflow the int64 kernels")
            nums[i, : len(sc)] = sc
            dens[i] = ratp.denominator
        self.auto_nums = nums
        self.auto_dens = dens
        self.fcoef = np.array(self.f.coeffs, dtype=np.int64)
        # ambient class of each automorphism, plus one candidate per class
        self.auto_class = np.array(
            [self.group.class_index_of(pm) for pm in self.perm_map], dtype=np.int16
        )
        n_classes = len(self.group.classes)
        reps = []
        for cid in range(n_classes):
            idx = int(np.flatnonzero(self.auto_class == cid)[0])
            reps.append(idx)
        self.class_candidates = np.array(reps, dtype=np.int64)
        self.rep_nums = nums[self.class_candidates]
        self.rep_dens = dens[self.class_candidates]

    # -- serialization ------------------------------------------------------

    @classmethod
    def from_dict(cls, doc: dict) -> "NumberFieldData":
        gdeg = int(doc["group"]["degree"])
        group = generate_group([parse_cycles(s, gdeg) for s in doc["group"]["generators"]], degree=gdeg)
        subgroup = generate_group([parse_cycles(s, gdeg) for s in doc["subgroup_generators"]], degree=gdeg)
        f = IntPoly(tuple(int(c) for c in doc["poly"]))
        autos, perms = [], []
        for a in doc["automorphisms"]:
            autos.append(RatPoly.from_strings(a["coeffs"]))
            perms.append(parse_cycles(a["perm"], gdeg))
        return cls(
            name=doc["name"],
            f=f,
            automorphisms=autos,
            perm_map=perms,
            group=group,
            subgroup=subgroup,
            class1_rep=parse_cycles(doc["class1_rep"], gdeg),
            class2_rep=parse_cycles(doc["class2_rep"], gdeg),
            excluded_primes=doc["excluded_primes"],
            checksum=doc.get("poly_checksum"),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "degree": self.f.degree,
            "poly": [str(c) for c in self.f.coeffs],
            "automorphisms": [
                {"coeffs": rp.to_strings(), "perm": pm.to_cycle_string()}
                for rp, pm in zip(self.automorphisms, self.perm_map)
            ],
            "group": {
                "degree": self.group.degree,
                "generators": [g.to_cycle_string() for g in self.group.generators],
            },
            "subgroup_generators": [g.to_cycle_string() for g in self.subgroup.generators],
            "class1_rep": self.class1_rep.to_cycle_string(),
            "class2_rep": self.class2_rep.to_cycle_string(),
            "excluded_primes": sorted(self.excluded_primes),
            "poly_checksum": self.checksum,
        }

    @classmethod
    def load(cls, path) -> "NumberFieldData":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    def is_excluded(self, p: int) -> bool:
        return p == 2 or p in self.excluded_primes

    def __repr__(self) -> str:
        return f"NumberFieldData({self.name!r}, degree={self.f.degree}, |G+|={self.group.order})"


def _prime_factors(n: int) -> set[int]:
    n = abs(int(n))
    out = set()
    d = 2
    while d * d <= n:
        while n % d == 0:
            out.add(d)
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.add(n)
    return out


def bundled_field_path(name: str) -> Path:
    return Path(__file__).parent / "fixtures" / f"{name}.json"


def load_bundled_field(name: str = "wreath32") -> NumberFieldData:
    """Load a fixture shipped with the package (default: the degree-32 field)."""
    return NumberFieldData.load(bundled_field_path(name))


# ---------------------------------------------------------------------------
# cyclotomic fixtures (self-generable exact test data)
# ---------------------------------------------------------------------------


def _poly_div_exact(num: list[int], den: list[int]) -> list[int]:
    # exact division of integer polynomials, den monic
    num = num[:]
    out = [0] * (len(num) - len(den) + 1)
    for d in range(len(num) - 1, len(den) - 2, -1):
        c = num[d]
        if c:
            sh = d - (len(den) - 1)
            out[sh] = c
            for j, dj in enumerate(den):
                num[sh + j] -= c * dj
    assert all(v == 0 for v in num), "non-exact polynomial division"
    return out


def cyclotomic_poly(m: int) -> IntPoly:
    """The m-th cyclotomic polynomial by the quotient recursion."""
    if m < 1:
        raise ValueError("m must be >= 1")
    memo: dict[int, list[int]] = {}

    def phi(k: int) -> list[int]:
        if k in memo:
            return memo[k]
        num = [0] * (k + 1)
        num[0], num[k] = -1, 1  # x^k - 1
        for d in range(1, k):
            if k % d == 0:
                num = _poly_div_exact(num, phi(d))
        memo[k] = num
        return num

    return IntPoly(tuple(phi(m)))


def _units_mod(m: int) -> list[int]:
    return [a for a in range(1, m) if gcd(a, m) == 1]


def _unit_generators(m: int) -> list[int]:
    """A small generating set of the unit group mod m, greedy closure."""
    units = _units_mod(m)
    have = {1}
    gens: list[int] = []
    for a in units:
        if a in have:
            continue
        gens.append(a)
        closure = {1}
        frontier = [1]
        while frontier:
            nxt = []
            for u in frontier:
                for g in gens:
                    v = (u * g) % m
                    if v not in closure:
                        closure.add(v)
                        nxt.append(v)
            frontier = nxt
        have = closure
        if len(have) == len(units):
            break
    return gens


def cyclotomic_field_data(m: int, subgroup_units=None, name: str | None = None) -> NumberFieldData:
    """Exact field data for the m-th cyclotomic field.

    The degree is phi(m); automorphisms are x^a mod Phi_m for units a, acting
    on the sorted unit list by multiplication. `subgroup_units` selects a
    subgroup of the unit group (default: the whole group).
    """
    if not 3 <= m <= CYCLOTOMIC_CAP:
        raise ValueError(f"m must be in [3, {CYCLOTOMIC_CAP}]")
    f = cyclotomic_poly(m)
    units = _units_mod(m)
    n = len(units)
    assert f.degree == n
    unit_index = {u: i for i, u in enumerate(units)}

    def perm_of(a: int) -> Permutation:
        return Permutation(unit_index[(a * u) % m] for u in units)

    # x^a mod Phi_m, exact integer reduction
    fmod = list(f.coeffs)
    autos, perms = [], []
    for a in units:
        poly = [0] * max(a + 1, n)
        poly[a] = 1
        for d in range(len(poly) - 1, n - 1, -1):
            c = poly[d]
            if c:
                for j in range(n):
                    poly[d - n + j] -= c * fmod[j]
                poly[d] = 0
        autos.append(RatPoly(tuple(Fraction(v) for v in poly[:n])))
        perms.append(perm_of(a))

    group = generate_group([perm_of(a) for a in _unit_generators(m)] or [Permutation.identity(n)], degree=n)
    if subgroup_units:
        sub = generate_group([perm_of(a % m) for a in subgroup_units], degree=n)
    else:
        sub = group
    ident = Permutation.identity(n)
    return NumberFieldData(
        name=name or f"cyclotomic{m}",
        f=f,
        automorphisms=autos,
        perm_map=perms,
        group=group,
        subgroup=sub,
        class1_rep=ident,
        class2_rep=ident,
        excluded_primes=sorted(_prime_factors(m)),
    )


# ---------------------------------------------------------------------------
# Frobenius oracles
# ---------------------------------------------------------------------------


class ModularFrobeniusOracle:
    """Frobenius classes from modular arithmetic on the field data."""

    def __init__(self, fd: NumberFieldData, backend: str | None = None):
        self.fd = fd
        self.backend = backend

    def class_ids(self, primes: np.ndarray) -> np.ndarray:
        """Ambient conjugacy-class id of the Frobenius at each prime.

        Primes must already have the excluded set (and 2) filtered out.
        """
        primes = np.asarray(primes, dtype=np.int64)
        if primes.size == 0:
            return np.zeros(0, dtype=np.int16)
        idx = kernels.frobenius_rep_indices(
            primes, self.fd.fcoef, self.fd.rep_nums, self.fd.rep_dens, backend=self.backend
        )
        if (idx < 0).any():
            bad = int(primes[int(np.flatnonzero(idx < 0)[0])])
            kind = "no candidate" if idx[idx < 0][0] == -1 else "several candidates"
            raise CorruptFieldDataError(f"{kind} matched x^p at p={bad}")
        return idx.astype(np.int16)

    def match_census(self, primes: np.ndarray) -> np.ndarray:
        """Full (n_primes, n_autos) match matrix over all automorphisms."""
        primes = np.asarray(primes, dtype=np.int64)
        return kernels.frobenius_match_matrix(
            primes, self.fd.fcoef, self.fd.auto_nums, self.fd.auto_dens, backend=self.backend
        )


def identify_frobenius(fd: NumberFieldData, p: int, backend: str | None = None) -> Permutation:
    """Canonical representative of the Frobenius conjugacy class at p.

    The Frobenius is only defined up to conjugacy; the representative
    returned is the first automorphism (in fixture order) inside the matched
    class. For abelian fields this is the Frobenius element itself.
    """
    if fd.is_excluded(p):
        raise ExcludedPrimeError(f"p={p} is excluded for field {fd.name!r}")
    oracle = ModularFrobeniusOracle(fd, backend=backend)
    cid = int(oracle.class_ids(np.array([p], dtype=np.int64))[0])
    return fd.perm_map[int(fd.class_candidates[cid])]


def reference_match_set(fd: NumberFieldData, p: int) -> tuple[int, ...]:
    """Pure-Python census of matching automorphisms at p (kernel-independent)."""
    xp = modpoly_pow_x_p(fd.f, p)
    fmod = [c % p for c in fd.f.coeffs]
    out = []
    for i, ratp in enumerate(fd.automorphisms):
        d = ratp.denominator
        num = ratp.scaled_numerators()
        u = [(num[j] if j < len(num) else 0) - d * xp[j] for j in range(fd.f.degree)]
        if _gcd_nontrivial_mod(fmod, u, p):
            out.append(i)
    return tuple(out)


def cyclotomic_closed_form_class(fd: NumberFieldData, m: int, p: int) -> int:
    """Independent oracle for cyclotomic data: the class of x -> x^(p mod m)."""
    units = _units_mod(m)
    unit_index = {u: i for i, u in enumerate(units)}
    a = p % m
    perm = Permutation(unit_index[(a * u) % m] for u in units)
    return fd.group.class_index_of(perm)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    checks: list[tuple[str, bool, str]]

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def failures(self) -> list[str]:
        return [f"{name}: {detail}" for name, ok, detail in self.checks if not ok]

    def describe(self) -> str:
        lines = [f"[{'ok' if ok else 'FAIL'}] {name}" + (f" - {d}" if d else "") for name, ok, d in self.checks]
        return "\n".join(lines)


def _np_polymul_mod(a, b, fmod, q):
    n = fmod.shape[0] - 1
    res = np.zeros(2 * n - 1, dtype=np.int64)
    for i in range(n):
        if a[i]:
            res[i : i + n] += a[i] * b
    for d in range(2 * n - 2, n - 1, -1):
        c = res[d] % q
        if c:
            res[d - n : d] -= c * fmod[:n]
    return res[:n] % q


def validate_field_data(fd: NumberFieldData, sample_primes: int = 6, seed: int = 0) -> ValidationReport:
    """Check the field-data invariants at sampled primes in [1e6, 1e7]."""
    checks: list[tuple[str, bool, str]] = []

    ok = fd.checksum == poly_checksum(fd.f.coeffs)
    checks.append(("polynomial checksum", ok, ""))

    n = fd.f.degree
    ok = fd.group.order == n == len(fd.automorphisms)
    checks.append(("degree = |G+| = #automorphisms", ok, f"n={n}, |G+|={fd.group.order}"))

    ok = {p.images for p in fd.perm_map} == {g.images for g in fd.group.elements}
    checks.append(("perm_map bijective onto G+", ok, ""))

    ok = fd.subgroup.is_subgroup_of(fd.group)
    checks.append(("subgroup contained in G+", ok, ""))

    den_primes = set()
    for ratp in fd.automorphisms:
        den_primes |= _prime_factors(ratp.denominator)
    ok = den_primes <= fd.excluded_primes
    checks.append(("denominator primes excluded", ok, f"{sorted(den_primes)}"))

    # sampled-prime checks
    from .counter import sieve_primes  # deferred: counter imports this module

    rng = np.random.default_rng(seed)
    window = sieve_primes(10**7, start=10**6)
    window = window[~np.isin(window, sorted(fd.excluded_primes))]
    qs = sorted(int(q) for q in rng.choice(window, size=min(sample_primes, window.size), replace=False))

    nums = fd.auto_nums
    dens = fd.auto_dens
    perm_index = {p.images: i for i, p in enumerate(fd.perm_map)}
    comp_ok, root_ok, sf_ok = True, True, True
    detail = ""
    for q in qs:
        fmod = fd.fcoef % q
        dinv = np.array([pow(int(d) % q, -1, q) for d in dens], dtype=np.int64)
        gi = (nums % q) * dinv[:, None] % q
        # power tables and composition closure: g_i(g_j) == g_k with perm_k = perm_i*perm_j
        for j in range(n):
            ptab = np.zeros((n, n), dtype=np.int64)
            ptab[0, 0] = 1
            for k in range(1, n):
                ptab[k] = _np_polymul_mod(ptab[k - 1], gi[j], fmod, q)
            comp = gi @ ptab % q
            for i in range(n):
                k = perm_index[(fd.perm_map[i] * fd.perm_map[j]).images]
                if not np.array_equal(comp[i], gi[k]):
                    comp_ok = False
                    detail = f"g_{i} o g_{j} != g_{k} mod (f, {q})"
            # f(g_j) == 0 mod (f, q): evaluate f coefficients against the table
            val = (fd.fcoef[:n].reshape(1, n) % q) @ ptab % q
            val = (val + _np_polymul_mod(ptab[n - 1], gi[j], fmod, q)) % q  # leading x^n term
            if val.any():
                root_ok = False
        # squarefreeness of f mod q
        fp = [int(c) for c in fmod]
        fprime = [(k * fd.f.coeffs[k]) % q for k in range(1, n + 1)]
        if not _gcd_nontrivial_mod(fp, fprime + [0] * (n - len(fprime)), q):
            pass  # gcd trivial = squarefree, as expected
        else:
            sf_ok = False
    checks.append((f"composition closure at q={qs}", comp_ok, detail))
    checks.append(("automorphisms map the root to roots", root_ok, ""))
    checks.append(("f squarefree at sampled primes", sf_ok, ""))

    # kernel census: the matching set is exactly one full class
    oracle = ModularFrobeniusOracle(fd)
    mm = oracle.match_census(np.array(qs, dtype=np.int64))
    census_ok = True
    for row in mm:
        hit = np.flatnonzero(row)
        cls = set(fd.auto_class[hit])
        if len(cls) != 1 or len(hit) != int((fd.auto_class == cls.pop()).sum()):
            census_ok = False
    checks.append(("match census is one full class", census_ok, ""))

    return ValidationReport(checks)
