"""Class functions over Gaussian rationals.

Indicators, square/power-root counting functions, inner products,
induction to an ambient group, power twists, and character tables of
abelian groups of exponent dividing 4. Everything here is exact: values
are Gaussian rationals (a + b*i with a, b rational) and every identity
the package asserts on them is an exact equality.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Sequence

from .permgroup import Permutation, PermutationGroup, SubgroupEmbedding

RationalLike = int | Fraction


class GaussianRational:
    """An exact complex number a + b*i with rational a, b."""

    __slots__ = ("re", "im")

    def __init__(self, re: RationalLike = 0, im: RationalLike = 0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    @classmethod
    def coerce(cls, v) -> "GaussianRational":
        if isinstance(v, GaussianRational):
            return v
        if isinstance(v, (int, Fraction)):
            return cls(v)
        raise TypeError(f"cannot coerce {type(v).__name__} to GaussianRational")

    def __add__(self, other):
        o = GaussianRational.coerce(other)
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = GaussianRational.coerce(other)
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return GaussianRational.coerce(other) - self

    def __mul__(self, other):
        o = GaussianRational.coerce(other)
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __eq__(self, other) -> bool:
        try:
            o = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self) -> int:
        return hash((self.re, self.im))

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __float__(self) -> float:
        if self.im != 0:
            raise ValueError(f"{self} has a nonzero imaginary part")
        return float(self.re)

    def __str__(self) -> str:
        if self.im == 0:
            return str(self.re)
        imag = f"{abs(self.im)}*i" if abs(self.im) != 1 else "i"
        sign = "-" if self.im < 0 else ("+" if self.re != 0 else "")
        if self.re == 0:
            return f"{sign}{imag}"
        return f"{self.re}{sign}{imag}"

    __repr__ = __str__

    @classmethod
    def from_string(cls, text: str) -> "GaussianRational":
        """Parse the "re±im*i" format produced by str()."""
        s = text.strip().replace(" ", "")
        m = re.fullmatch(r"([+-]?[0-9/]+)?(([+-])?([0-9/]+)?\*?i)?", s)
        if not m or (m.group(1) is None and m.group(2) is None):
            raise ValueError(f"bad Gaussian rational: {text!r}")
        re_part = Fraction(m.group(1)) if m.group(1) is not None else Fraction(0)
        im_part = Fraction(0)
        if m.group(2) is not None:
            mag = Fraction(m.group(4)) if m.group(4) else Fraction(1)
            im_part = -mag if m.group(3) == "-" else mag
        return cls(re_part, im_part)


ZERO = GaussianRational(0)
ONE = GaussianRational(1)
I_UNIT = GaussianRational(0, 1)

# powers of i, indexed by exponent mod 4
_I_POWERS = (ONE, I_UNIT, GaussianRational(-1), GaussianRational(0, -1))


class ClassFunction:
    """An exact-valued function on the conjugacy classes of a group."""

    __slots__ = ("group", "values")

    def __init__(self, group: PermutationGroup, values: Iterable):
        vals = tuple(GaussianRational.coerce(v) for v in values)
        if len(vals) != len(group.classes):
            raise ValueError(f"{len(vals)} values for {len(group.classes)} classes")
        self.group = group
        self.values = vals

    def __call__(self, g: Permutation) -> GaussianRational:
        return self.values[self.group.class_index_of(g)]

    @classmethod
    def constant(cls, group: PermutationGroup, value=1) -> "ClassFunction":
        return cls(group, [value] * len(group.classes))

    @classmethod
    def indicator(cls, group: PermutationGroup, rep: Permutation) -> "ClassFunction":
        """1 on the class of `rep`, 0 elsewhere."""
        idx = group.class_index_of(rep)
        return cls(group, [1 if i == idx else 0 for i in range(len(group.classes))])

    def __add__(self, other: "ClassFunction") -> "ClassFunction":
        self._check_group(other)
        return ClassFunction(self.group, [a + b for a, b in zip(self.values, other.values)])

    def __sub__(self, other: "ClassFunction") -> "ClassFunction":
        self._check_group(other)
        return ClassFunction(self.group, [a - b for a, b in zip(self.values, other.values)])

    def __rmul__(self, scalar) -> "ClassFunction":
        s = GaussianRational.coerce(scalar)
        return ClassFunction(self.group, [s * v for v in self.values])

    __mul__ = __rmul__

    def __neg__(self) -> "ClassFunction":
        return ClassFunction(self.group, [-v for v in self.values])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ClassFunction)
            and self.group is other.group
            and self.values == other.values
        )

    def __hash__(self) -> int:
        return hash((id(self.group), self.values))

    def is_zero(self) -> bool:
        return all(v.is_zero() for v in self.values)

    def _check_group(self, other: "ClassFunction") -> None:
        if self.group is not other.group:
            raise ValueError("class functions live on different groups")

    def __repr__(self) -> str:
        pairs = ", ".join(
            f"{cls[0].to_cycle_string()}: {v}" for cls, v in zip(self.group.classes, self.values)
        )
        return f"ClassFunction({pairs})"


def power_root_count(group: PermutationGroup, m: int) -> ClassFunction:
    """r_m(g) = #{h in G : h^m = g}, as a class function."""
    if m < 1:
        raise ValueError("m must be >= 1")
    counts = [0] * len(group.classes)
    per_element: dict[tuple[int, ...], int] = {}
    for h in group.elements:
        key = (h**m).images
        per_element[key] = per_element.get(key, 0) + 1
    for i, cls in enumerate(group.classes):
        vals = {per_element.get(g.images, 0) for g in cls}
        assert len(vals) == 1, "power-root count not constant on a class"
        counts[i] = vals.pop()
    return ClassFunction(group, counts)


def square_root_count(group: PermutationGroup) -> ClassFunction:
    """r_G(g) = #{h in G : h^2 = g}."""
    return power_root_count(group, 2)


def power_twist(t: ClassFunction, m: int) -> ClassFunction:
    """The class function g -> t(g^m)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return ClassFunction(t.group, [t(cls[0] ** m) for cls in t.group.classes])


def inner_product(t1: ClassFunction, t2: ClassFunction) -> GaussianRational:
    """(1/|G|) sum_g t1(g) * conj(t2(g)); conjugate-linear in the second slot."""
    t1._check_group(t2)
    total = ZERO
    for cls, v1, v2 in zip(t1.group.classes, t1.values, t2.values):
        total = total + len(cls) * (v1 * v2.conjugate())
    return Fraction(1, t1.group.order) * total


def class_plus(rep: Permutation, emb: SubgroupEmbedding) -> tuple[Permutation, ...]:
    """The unique ambient class containing the subgroup class of `rep`."""
    if rep not in emb.sub:
        raise ValueError("representative is not in the subgroup")
    return emb.ambient.class_of(rep)


def induce(t: ClassFunction, emb: SubgroupEmbedding) -> ClassFunction:
    """Induction of t from G to the ambient group, summed over left cosets.

    For each left-coset representative a, the coset contributes t(a^{-1} g a)
    whenever a^{-1} g a lands in G.
    """
    if t.group is not emb.sub:
        raise ValueError("class function is not defined on the embedded subgroup")
    values = []
    for cls in emb.ambient.classes:
        g = cls[0]
        acc = ZERO
        for a in emb.coset_reps:
            conj = g.conjugate_by(a.inverse())
            if conj in emb.sub:
                acc = acc + t(conj)
        values.append(acc)
    return ClassFunction(emb.ambient, values)


def _cyclic_decomposition(group: PermutationGroup) -> list[Permutation]:
    """Generators b_1, .., b_k with G = <b_1> x .. x <b_k>, orders descending.

    Greedy with backtracking: repeatedly extract a maximal-order element whose
    span meets the span of the previous picks trivially.
    """
    if group.order == 1:
        return []
    by_order = sorted(group.elements, key=lambda g: (-g.order(), g.images))

    def extend(basis: list[Permutation], span: set[tuple[int, ...]]) -> list[Permutation] | None:
        if len(span) == group.order:
            return basis
        for cand in by_order:
            if cand.images in span:
                continue
            o = cand.order()
            powers = [cand**k for k in range(o)]
            if any(p.images in span for p in powers[1:]):
                continue
            # span of basis+cand = all products span_element * cand^k
            new_span = set()
            for s_img in span:
                s = Permutation(s_img)
                for p in powers:
                    new_span.add((s * p).images)
            result = extend(basis + [cand], new_span)
            if result is not None:
                return result
        return None

    ident = group.identity
    found = extend([], {ident.images})
    assert found is not None, "cyclic decomposition failed"
    return found


def abelian_characters(group: PermutationGroup) -> list[ClassFunction]:
    """The |G| irreducible characters of an abelian group of exponent dividing 4.

    Values are 4th roots of unity, so they stay inside the Gaussian rationals.
    Groups with higher exponent are rejected rather than approximated.
    """
    if not group.is_abelian:
        raise ValueError("group is not abelian")
    basis = _cyclic_decomposition(group)
    orders = [b.order() for b in basis]
    if any(4 % o for o in orders):
        raise ValueError(f"exponent does not divide 4 (cyclic factors {orders})")

    # exponent vector of every element w.r.t. the basis
    exponents: dict[tuple[int, ...], tuple[int, ...]] = {}

    def fill(i: int, prod: Permutation, evec: tuple[int, ...]):
        if i == len(basis):
            exponents[prod.images] = evec
            return
        p = group.identity
        for e in range(orders[i]):
            fill(i + 1, prod * p, evec + (e,))
            p = p * basis[i]

    fill(0, group.identity, ())
    assert len(exponents) == group.order

    chars = []
    def emit(i: int, mvec: tuple[int, ...]):
        if i == len(basis):
            vals = []
            for cls in group.classes:
                evec = exponents[cls[0].images]
                # character value = prod_j (primitive o_j-th root)^(m_j e_j), expressed as i^k
                k = sum((4 // orders[j]) * mvec[j] * evec[j] for j in range(len(basis)))
                vals.append(_I_POWERS[k % 4])
            chars.append(ClassFunction(group, vals))
            return
        for m in range(orders[i]):
            emit(i + 1, mvec + (m,))

    emit(0, ())
    return chars
