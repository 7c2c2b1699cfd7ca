"""Prime-race accumulation: counting functions, bias series, densities.

For each non-excluded rational prime p, the Frobenius class of p in G+ is
looked up via the modular oracle, and the cached splitting pattern of that
class distributes the prime's ideals over the classes of G. Counts enter
pi(x; C) at norms p^f; the log-weighted theta and psi sums split every
contribution into an exact class-function weight times log p, so the
cancellation identities can be asserted exactly while only the floating
part carries rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .classfn import ClassFunction, GaussianRational, power_twist
from .fieldarith import ModularFrobeniusOracle
from .permgroup import Permutation, SubgroupEmbedding
from .transfer import PatternTable

SIEVE_CAP = 2**34
DEFAULT_GRID_RATIO = 1.05
DEFAULT_BLOCK = 1 << 18


# ---------------------------------------------------------------------------
# sieving
# ---------------------------------------------------------------------------


def sieve_primes(limit: int, start: int = 2, segment: int = 1 << 22) -> np.ndarray:
    """All primes in [start, limit], ascending, via an odd-only segmented sieve."""
    limit = int(limit)
    if limit > SIEVE_CAP:
        raise ValueError(f"limit {limit} exceeds sieve cap {SIEVE_CAP}")
    if limit < 2 or start > limit:
        return np.zeros(0, dtype=np.int64)
    root = math.isqrt(limit)
    base = _simple_sieve(root)
    chunks = []
    if start <= 2:
        chunks.append(np.array([2], dtype=np.int64))
    lo = max(3, start | 1)
    odd_base = base[base > 2]
    while lo <= limit:
        hi = min(lo + 2 * segment, limit + 1)  # exclusive, even
        count = (hi - lo + 1) // 2
        mask = np.ones(count, dtype=bool)
        for p in odd_base:
            p = int(p)
            first = max(p * p, ((lo + p - 1) // p) * p)
            if first % 2 == 0:
                first += p
            if first < hi:
                mask[(first - lo) // 2 :: p] = False
        seg = lo + 2 * np.flatnonzero(mask).astype(np.int64)
        chunks.append(seg)
        lo = hi if hi % 2 == 1 else hi + 1
        lo = lo if lo % 2 == 1 else lo + 1
    return np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)


def _simple_sieve(limit: int) -> np.ndarray:
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_p[p]:
            is_p[p * p :: p] = False
    return np.flatnonzero(is_p).astype(np.int64)


def integer_root(x: int, k: int) -> int:
    """floor(x**(1/k)) for x >= 0, k >= 1, exact."""
    if x < 0 or k < 1:
        raise ValueError("need x >= 0 and k >= 1")
    if k == 1 or x in (0, 1):
        return x
    r = int(round(x ** (1.0 / k)))
    while r > 0 and r**k > x:
        r -= 1
    while (r + 1) ** k <= x:
        r += 1
    return r


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Checkpoints:
    """Strictly increasing sampling grid; counts at x include all norms <= x."""

    values: tuple[float, ...]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("checkpoints must be strictly increasing")
        if self.values and self.values[0] < 2:
            raise ValueError("checkpoints start at 2")

    @classmethod
    def geometric(cls, limit: float, ratio: float = DEFAULT_GRID_RATIO) -> "Checkpoints":
        if ratio <= 1:
            raise ValueError("grid ratio must be > 1")
        vals = []
        x = 2.0
        while x < limit:
            vals.append(x)
            x *= ratio
        vals.append(float(limit))
        return cls(tuple(dict.fromkeys(vals)))

    @property
    def limit(self) -> int:
        return int(self.values[-1]) if self.values else 0

    def floors(self) -> np.ndarray:
        return np.array([int(v) for v in self.values], dtype=np.int64)

    def __len__(self):
        return len(self.values)


# ---------------------------------------------------------------------------
# the normalizer R(x)
# ---------------------------------------------------------------------------


def _adaptive_simpson(fn, a: float, b: float, tol: float) -> float:
    fa, fb = fn(a), fn(b)
    m = 0.5 * (a + b)
    fm = fn(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, fa, b, fb, m, fm, whole, tol, depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = fn(lm), fn(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return recurse(a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1) + recurse(
            m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1
        )

    return recurse(a, fa, b, fb, m, fm, whole, tol, 48)


def _r_integrand(v: float) -> float:
    # integral of du / (sqrt(u) log^2 u) after u = e^v
    return math.exp(0.5 * v) / (v * v)


def r_norm(x: float) -> float:
    """sqrt(x)/log(x) plus the integral from 2 to x of du/(sqrt(u) log^2 u)."""
    if x < 2:
        raise ValueError("x must be >= 2")
    lead = math.sqrt(x) / math.log(x)
    if x == 2:
        return lead
    tail = _adaptive_simpson(_r_integrand, math.log(2.0), math.log(x), 1e-12)
    return lead + tail


def r_norm_grid(xs) -> np.ndarray:
    """R(x) on an ascending grid, integrating incrementally between points."""
    out = np.empty(len(xs), dtype=np.float64)
    acc = 0.0
    prev = math.log(2.0)
    for i, x in enumerate(xs):
        v = math.log(float(x))
        if v > prev:
            acc += _adaptive_simpson(_r_integrand, prev, v, 1e-13 * max(1.0, acc))
            prev = v
        out[i] = math.sqrt(x) / math.log(x) + acc
    return out


# ---------------------------------------------------------------------------
# exact weight tables
# ---------------------------------------------------------------------------


def _zero() -> GaussianRational:
    return GaussianRational(0)


@dataclass
class WeightTables:
    """Exact per-(ambient class, level) t-weights of theta and psi.

    theta[d][f] collects f * mult * t(c) over pattern entries of residue
    degree f; psi[d][m] collects f * mult * t(c^(m/f)) over entries with
    f | m. psi[d][m] equals the induced class function at sigma_d^m.
    """

    theta: list[dict[int, GaussianRational]]
    psi: list[list[GaussianRational]]
    max_level: int

    @classmethod
    def build(
        cls, patterns: PatternTable, emb: SubgroupEmbedding, t: ClassFunction, max_level: int
    ) -> "WeightTables":
        theta, psi = [], []
        for pattern in patterns.patterns:
            th: dict[int, GaussianRational] = {}
            ps = [_zero()]  # index 0 unused
            for m in range(1, max_level + 1):
                acc = _zero()
                for cid, f, mult in pattern:
                    if m % f == 0:
                        rep = emb.sub.classes[cid][0]
                        acc = acc + (f * mult) * t(rep ** (m // f))
                ps.append(acc)
            for cid, f, mult in pattern:
                rep = emb.sub.classes[cid][0]
                th[f] = th.get(f, _zero()) + (f * mult) * t(rep)
            theta.append(th)
            psi.append(ps)
        return cls(theta, psi, max_level)

    def psi_all_zero(self) -> bool:
        return all(w.is_zero() for ps in self.psi for w in ps[1:])


# ---------------------------------------------------------------------------
# the bias series
# ---------------------------------------------------------------------------


@dataclass
class BiasSeries:
    checkpoints: Checkpoints
    emb: SubgroupEmbedding
    patterns: PatternTable
    t: ClassFunction
    weights: WeightTables
    c1_idx: int
    c2_idx: int
    c1_size: int
    c2_size: int
    # per checkpoint
    class_counts: np.ndarray          # (ncp, n G-classes) int64
    theta: np.ndarray                 # complex128
    psi: np.ndarray                   # complex128
    r_values: np.ndarray              # float64
    diff_norm: np.ndarray             # float64, D(x)
    log_density: np.ndarray           # float64
    nat_density: np.ndarray           # float64
    # supporting tensors for identity checks
    log_tensor: np.ndarray            # (n G+ classes, max_level+1, ncp) float64
    count_tensor: np.ndarray          # (n G+ classes, max_level+1, ncp) int64
    prime_total: int
    ambient_class_freq: np.ndarray    # (n G+ classes,) int64
    meta: dict = field(default_factory=dict)

    @property
    def pi_c1(self) -> np.ndarray:
        return self.class_counts[:, self.c1_idx]

    @property
    def pi_c2(self) -> np.ndarray:
        return self.class_counts[:, self.c2_idx]


def _weight_to_complex(w: GaussianRational) -> complex:
    return complex(float(w.re), float(w.im))


def accumulate(
    oracle: ModularFrobeniusOracle,
    emb: SubgroupEmbedding,
    t: ClassFunction,
    checkpoints: Checkpoints,
    c1_rep: Permutation | None = None,
    c2_rep: Permutation | None = None,
    block_size: int = DEFAULT_BLOCK,
) -> BiasSeries:
    """Run the full counting experiment up to the last checkpoint.

    Primes are processed in contiguous blocks; each block contributes count
    and log-sum deltas that are merged in block order, so the result does not
    depend on the kernel's thread count.
    """
    fd = oracle.fd
    if t.group is not emb.sub:
        raise ValueError("t must live on the subgroup of the embedding")
    c1_rep = c1_rep if c1_rep is not None else fd.class1_rep
    c2_rep = c2_rep if c2_rep is not None else fd.class2_rep
    X = checkpoints.limit
    if X < 2:
        raise ValueError("need a checkpoint limit >= 2")
    patterns = PatternTable(emb)
    max_level = max(1, int(math.log2(X)))
    weights = WeightTables.build(patterns, emb, t, max_level)

    n_amb = len(emb.ambient.classes)
    n_sub = len(emb.sub.classes)
    ncp = len(checkpoints)
    xi = checkpoints.floors()
    # ceiling roots: p^m <= x  <=>  p <= iroot(x, m)
    roots = np.empty((max_level + 1, ncp), dtype=np.int64)
    for m in range(1, max_level + 1):
        roots[m] = [integer_root(int(v), m) for v in xi]

    log_tensor = np.zeros((n_amb, max_level + 1, ncp), dtype=np.float64)
    log_comp = np.zeros_like(log_tensor)  # Kahan compensation across blocks
    count_tensor = np.zeros((n_amb, max_level + 1, ncp), dtype=np.int64)
    ambient_freq = np.zeros(n_amb, dtype=np.int64)
    events_q: list[np.ndarray] = []
    events_w: list[np.ndarray] = []
    c1_idx = emb.sub.class_index_of(c1_rep)
    c2_idx = emb.sub.class_index_of(c2_rep)
    c1_size = len(emb.sub.classes[c1_idx])
    c2_size = len(emb.sub.classes[c2_idx])

    excluded = np.array(sorted(fd.excluded_primes | {2}), dtype=np.int64)
    prime_total = 0
    for lo in range(3, X + 1, 2 * block_size):
        hi = min(lo + 2 * block_size - 1, X)
        block = sieve_primes(hi, start=lo)
        if block.size == 0:
            continue
        block = block[~np.isin(block, excluded)]
        if block.size == 0:
            continue
        prime_total += block.size
        ids = oracle.class_ids(block)
        logs = np.log(block.astype(np.float64))
        for d in range(n_amb):
            sel = ids == d
            if not sel.any():
                continue
            pd = block[sel]
            ld = logs[sel]
            ambient_freq[d] += pd.size
            cum = np.cumsum(ld)
            for m in range(1, max_level + 1):
                pos = np.searchsorted(pd, roots[m], side="right")
                if m == 1:
                    count_tensor[d, m] += pos
                    delta = np.where(pos > 0, cum[pos - 1], 0.0)
                else:
                    if pd[0] > roots[m, -1]:
                        break  # no prime in this block reaches level m at any x
                    count_tensor[d, m] += pos
                    delta = np.where(pos > 0, cum[pos - 1], 0.0)
                # Kahan merge of this block's contribution
                y = delta - log_comp[d, m]
                s = log_tensor[d, m] + y
                log_comp[d, m] = (s - log_tensor[d, m]) - y
                log_tensor[d, m] = s
            # jump events feeding the density integral (classes c1 and c2 only)
            for cid, f, mult in patterns.patterns[d]:
                if cid == c1_idx or cid == c2_idx:
                    qs = pd[pd <= roots[f, -1]] if f > 1 else pd
                    if qs.size == 0:
                        continue
                    w = (c2_size if cid == c1_idx else 0) * mult - (
                        c1_size if cid == c2_idx else 0
                    ) * mult
                    if w == 0:
                        continue
                    events_q.append((qs.astype(np.int64)) ** f)
                    events_w.append(np.full(qs.size, w, dtype=np.int64))

    # pi(x; C) per class of G
    class_counts = np.zeros((ncp, n_sub), dtype=np.int64)
    for d in range(n_amb):
        for cid, f, mult in patterns.patterns[d]:
            class_counts[:, cid] += mult * count_tensor[d, f]

    # theta and psi from exact weights times the log sums
    theta = np.zeros(ncp, dtype=np.complex128)
    psi = np.zeros(ncp, dtype=np.complex128)
    for d in range(n_amb):
        for f, w in weights.theta[d].items():
            if not w.is_zero():
                theta += _weight_to_complex(w) * log_tensor[d, f]
        for m in range(1, max_level + 1):
            w = weights.psi[d][m]
            if not w.is_zero():
                psi += _weight_to_complex(w) * log_tensor[d, m]

    r_values = r_norm_grid(checkpoints.values)
    pi1 = class_counts[:, c1_idx].astype(np.float64)
    pi2 = class_counts[:, c2_idx].astype(np.float64)
    diff_norm = (c2_size * pi1 - c1_size * pi2) / (c1_size * c2_size) / r_values

    log_density, nat_density = _densities(events_q, events_w, checkpoints)

    return BiasSeries(
        checkpoints=checkpoints,
        emb=emb,
        patterns=patterns,
        t=t,
        weights=weights,
        c1_idx=c1_idx,
        c2_idx=c2_idx,
        c1_size=c1_size,
        c2_size=c2_size,
        class_counts=class_counts,
        theta=theta,
        psi=psi,
        r_values=r_values,
        diff_norm=diff_norm,
        log_density=log_density,
        nat_density=nat_density,
        log_tensor=log_tensor,
        count_tensor=count_tensor,
        prime_total=prime_total,
        ambient_class_freq=ambient_freq,
        meta={"field": fd.name, "limit": X},
    )


def _densities(events_q, events_w, checkpoints: Checkpoints):
    """Exact interval integration of the positivity set of |C2|pi1 - |C1|pi2.

    The weighted count is piecewise constant between ideal norms; dx/x and dx
    are integrated over the true jump intervals, then normalized at each
    checkpoint by log x and x respectively.
    """
    ncp = len(checkpoints)
    logd = np.zeros(ncp, dtype=np.float64)
    natd = np.zeros(ncp, dtype=np.float64)
    if not events_q:
        return logd, natd
    q = np.concatenate(events_q)
    w = np.concatenate(events_w)
    order = np.argsort(q, kind="stable")
    q, w = q[order], w[order]
    uq, start = np.unique(q, return_index=True)
    wsum = np.add.reduceat(w, start)
    running = np.cumsum(wsum)  # value of |C2|pi1 - |C1|pi2 on [uq[k], uq[k+1])
    positive = running > 0
    uqf = uq.astype(np.float64)
    seg_log = np.zeros(uq.size, dtype=np.float64)
    seg_nat = np.zeros(uq.size, dtype=np.float64)
    if uq.size > 1:
        seg_log[:-1] = np.where(positive[:-1], np.diff(np.log(uqf)), 0.0)
        seg_nat[:-1] = np.where(positive[:-1], np.diff(uqf), 0.0)
    cum_log = np.concatenate(([0.0], np.cumsum(seg_log)))
    cum_nat = np.concatenate(([0.0], np.cumsum(seg_nat)))
    for j, x in enumerate(checkpoints.values):
        k = int(np.searchsorted(uq, x, side="right"))  # segments fully below x
        lg = cum_log[max(k - 1, 0)] if k > 0 else 0.0
        nt = cum_nat[max(k - 1, 0)] if k > 0 else 0.0
        if k > 0 and positive[k - 1] and x > uqf[k - 1]:
            lg += math.log(x) - math.log(uqf[k - 1])
            nt += x - uqf[k - 1]
        logd[j] = lg / math.log(x) if x > 1 else 0.0
        natd[j] = nt / x
    return logd, natd


# ---------------------------------------------------------------------------
# identity checks
# ---------------------------------------------------------------------------


@dataclass
class MobiusReport:
    exact_ok: bool
    max_float_mismatch: float
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.exact_ok and self.max_float_mismatch <= 1e-6


def mobius_check(series: BiasSeries) -> MobiusReport:
    """theta(x; t) against sum over l of mu(l) psi(x^(1/l); t(.^l)).

    The identity is first verified exactly on the per-(class, level) weight
    tables (term-by-term Moebius cancellation), then the floating series are
    compared with relative tolerance 1e-6.
    """
    emb, t = series.emb, series.t
    M = series.weights.max_level
    mu = _mobius_upto(M)
    twisted = {
        ell: WeightTables.build(series.patterns, emb, power_twist(t, ell), M)
        for ell in range(1, M + 1)
        if mu[ell] != 0
    }
    n_amb = len(emb.ambient.classes)
    exact_ok = True
    detail = ""
    for d in range(n_amb):
        for m in range(1, M + 1):
            lhs = series.weights.theta[d].get(m, _zero())
            rhs = _zero()
            for ell in range(1, M + 1):
                if mu[ell] == 0 or m % ell:
                    continue
                rhs = rhs + mu[ell] * twisted[ell].psi[d][m // ell]
            if lhs != rhs:
                exact_ok = False
                detail = f"weight mismatch at class {d}, level {m}"
    # floating comparison of the series themselves
    rhs_series = np.zeros(len(series.checkpoints), dtype=np.complex128)
    for ell, tab in twisted.items():
        for d in range(n_amb):
            for m in range(1, M // ell + 1):
                w = tab.psi[d][m]
                if not w.is_zero():
                    rhs_series += mu[ell] * _weight_to_complex(w) * series.log_tensor[d, m * ell]
    scale = np.maximum(np.abs(series.theta), 1.0)
    max_mismatch = float(np.max(np.abs(series.theta - rhs_series) / scale)) if len(series.checkpoints) else 0.0
    return MobiusReport(exact_ok, max_mismatch, detail)


def _mobius_upto(n: int) -> list[int]:
    mu = [0] * (n + 1)
    if n >= 1:
        mu[1] = 1
    primes = _simple_sieve(n)
    for k in range(2, n + 1):
        v, m, squarefree = k, 1, True
        for p in primes:
            if p * p > v:
                break
            if v % p == 0:
                v //= p
                if v % p == 0:
                    squarefree = False
                    break
                m = -m
        if squarefree:
            mu[k] = m if v == 1 else -m
    return mu


@dataclass
class CancellationReport:
    ok: bool
    primes_checked: int
    first_violation: int | None = None


def psi_prime_cancellation(
    oracle: ModularFrobeniusOracle,
    emb: SubgroupEmbedding,
    t: ClassFunction,
    limit: int,
    block_size: int = DEFAULT_BLOCK,
) -> CancellationReport:
    """Exact per-prime t-weight cancellation over all ideals and power levels.

    For each non-excluded p <= limit the accumulated exact weight
    sum over m <= log_p(limit) of psi-weight[class(p)][m] must vanish.
    """
    fd = oracle.fd
    patterns = PatternTable(emb)
    max_level = max(1, int(math.log2(limit)))
    weights = WeightTables.build(patterns, emb, t, max_level)
    n_amb = len(emb.ambient.classes)
    # partial sums S[d][M] = sum of psi weights for levels 1..M
    partial: list[list[GaussianRational]] = []
    for d in range(n_amb):
        acc = _zero()
        row = [acc]
        for m in range(1, max_level + 1):
            acc = acc + weights.psi[d][m]
            row.append(acc)
        partial.append(row)
    nonzero = np.array(
        [[not w.is_zero() for w in row] for row in partial], dtype=bool
    )
    excluded = np.array(sorted(fd.excluded_primes | {2}), dtype=np.int64)
    checked = 0
    for lo in range(3, limit + 1, 2 * block_size):
        hi = min(lo + 2 * block_size - 1, limit)
        block = sieve_primes(hi, start=lo)
        block = block[~np.isin(block, excluded)]
        if block.size == 0:
            continue
        ids = oracle.class_ids(block)
        levels = np.minimum(
            np.floor(np.log(float(limit)) / np.log(block.astype(np.float64)) + 1e-12).astype(np.int64),
            max_level,
        )
        # float log can misround near exact powers; fix up exactly
        for i in range(block.size):
            p, m = int(block[i]), int(levels[i])
            while p ** (m + 1) <= limit:
                m += 1
            while m > 1 and p**m > limit:
                m -= 1
            levels[i] = m
        bad = nonzero[ids, levels]
        checked += block.size
        if bad.any():
            return CancellationReport(False, checked, int(block[np.flatnonzero(bad)[0]]))
    return CancellationReport(True, checked)


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

CSV_HEADER = "x,pi_C1,pi_C2,theta_t,psi_t,R,D,logdens,natdens"


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def emit_series(series: BiasSeries, path) -> None:
    """Write the per-checkpoint series as CSV (reals at 12 significant digits)."""
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for j, x in enumerate(series.checkpoints.values):
            row = [
                _fmt(x),
                str(int(series.pi_c1[j])),
                str(int(series.pi_c2[j])),
                _fmt(series.theta[j].real),
                _fmt(series.psi[j].real),
                _fmt(series.r_values[j]),
                _fmt(series.diff_norm[j]),
                _fmt(series.log_density[j]),
                _fmt(series.nat_density[j]),
            ]
            fh.write(",".join(row) + "\n")


def emit_figure(series_csv_path, out_path) -> int:
    """Extract (x, D) pairs from an emitted series CSV; returns the row count."""
    rows = 0
    with open(series_csv_path) as fh, open(out_path, "w") as out:
        header = fh.readline().strip().split(",")
        xi = header.index("x")
        di = header.index("D")
        out.write("x,D\n")
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) <= max(xi, di):
                continue
            out.write(f"{parts[xi]},{parts[di]}\n")
            rows += 1
    return rows


def density_estimates(series: BiasSeries) -> tuple[float, float]:
    """Final (logarithmic, natural) density of the positivity set."""
    return float(series.log_density[-1]), float(series.nat_density[-1])
