"""Hot numeric kernels: modular Frobenius identification over many primes.

Two interchangeable backends compute, for each prime p, which automorphisms
g of the number field satisfy gcd(f, g - x^p) != 1 in F_p[x]. An
automorphism matches exactly when it is the Frobenius element at some prime
ideal above p, so the set of matches is one full conjugacy class.

* the numba backend JIT-compiles a tight per-prime loop (default),
* the numpy backend runs the same arithmetic batched over prime blocks.

Selection: set FROBRACE_BACKEND=numpy or FROBRACE_BACKEND=numba; unset
picks numba when it imports, else numpy. Both backends produce identical
outputs; `benchmarks/bench_kernels.py` compares their throughput.

All arithmetic is int64. Intermediate values are bounded by 64*p^2, so
primes must stay below 2**28.5 (~3.8e8); callers enforce MAX_KERNEL_PRIME.
"""

from __future__ import annotations

import os

import numpy as np

MAX_KERNEL_PRIME = 380_000_000  # 64 * p^2 < 2^63 keeps every intermediate in int64

_ENV_FLAG = "FROBRACE_BACKEND"


def _pick_backend() -> str:
    choice = os.environ.get(_ENV_FLAG, "").strip().lower()
    if choice in ("numpy", "numba"):
        if choice == "numba" and not _numba_available():
            raise RuntimeError("FROBRACE_BACKEND=numba but numba is not importable")
        return choice
    if choice:
        raise RuntimeError(f"unknown {_ENV_FLAG}={choice!r}; use 'numba' or 'numpy'")
    return "numba" if _numba_available() else "numpy"


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def active_backend() -> str:
    """Backend name the dispatchers will use for the current environment."""
    return _pick_backend()


def set_thread_count(n: int) -> None:
    """Limit numba's worker threads; the numpy backend is single-threaded."""
    if n < 1:
        raise ValueError("thread count must be >= 1")
    if _numba_available():
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

_NUMBA_FNS = None


def _build_numba():
    global _NUMBA_FNS
    if _NUMBA_FNS is not None:
        return _NUMBA_FNS
    from numba import njit, prange

    @njit(cache=True)
    def _modpow_x_p(p, fm, acc, sq):
        # acc <- x^p mod (f, p); fm is f mod p (monic, degree 32)
        n = fm.shape[0] - 1
        for j in range(n):
            acc[j] = 0
        acc[1] = 1
        started = False
        for bit in range(62, -1, -1):
            b = (p >> bit) & 1
            if not started:
                if b:
                    started = True  # top bit consumed by the initial acc = x
                continue
            # square: sq = acc^2, coefficients bounded by 32*p^2
            for d in range(2 * n - 1):
                sq[d] = 0
            for i in range(n):
                ai = acc[i]
                if ai != 0:
                    for j in range(n):
                        sq[i + j] += ai * acc[j]
            # reduce by monic f: each coefficient absorbs at most 31 products
            for d in range(2 * n - 2, n - 1, -1):
                c = sq[d] % p
                if c != 0:
                    base = d - n
                    for j in range(n):
                        sq[base + j] -= c * fm[j]
            for j in range(n):
                acc[j] = sq[j] % p
            if b:
                # multiply by x: shift up, fold the top coefficient through f
                c = acc[n - 1]
                for j in range(n - 1, 0, -1):
                    acc[j] = acc[j - 1]
                acc[0] = 0
                if c != 0:
                    for j in range(n):
                        acc[j] = (acc[j] - c * fm[j]) % p

    @njit(cache=True)
    def _gcd_nontrivial(fm, u, p, wa, wb):
        # True iff gcd(fm, u) has degree >= 1 in F_p[x] (pseudo-remainder Euclid)
        n = fm.shape[0] - 1
        for j in range(n + 1):
            wa[j] = fm[j] % p
            wb[j] = u[j] % p if j < n else 0
        da = n
        while da >= 0 and wa[da] == 0:
            da -= 1
        db = n - 1
        while db >= 0 and wb[db] == 0:
            db -= 1
        while db > 0:
            while da >= db:
                la = wa[da]
                lb = wb[db]
                sh = da - db
                for j in range(sh):
                    wa[j] = (lb * wa[j]) % p
                for j in range(db + 1):
                    wa[j + sh] = (lb * wa[j + sh] - la * wb[j]) % p
                while da >= 0 and wa[da] == 0:
                    da -= 1
            t = wa
            wa = wb
            wb = t
            td = da
            da = db
            db = td
        if db == -1:
            return da >= 1
        return False

    @njit(cache=True)
    def _match_one(p, fcoef, nums, dens, xp, u, fm, sq, wa, wb):
        n = fm.shape[0] - 1
        for j in range(n + 1):
            fm[j] = fcoef[j] % p
        _modpow_x_p(p, fm, xp, sq)
        found = -1
        for r in range(dens.shape[0]):
            dr = dens[r] % p
            for j in range(n):
                u[j] = (nums[r, j] - dr * xp[j]) % p
            if _gcd_nontrivial(fm, u, p, wa, wb):
                if found >= 0:
                    return -2  # two distinct candidates matched: corrupt data
                found = r
        return found

    @njit(cache=True, parallel=True)
    def rep_indices(primes, fcoef, nums, dens):
        n = fcoef.shape[0] - 1
        out = np.empty(primes.shape[0], dtype=np.int16)
        for i in prange(primes.shape[0]):
            xp = np.empty(n, dtype=np.int64)
            u = np.empty(n, dtype=np.int64)
            fm = np.empty(n + 1, dtype=np.int64)
            sq = np.empty(2 * n - 1, dtype=np.int64)
            wa = np.empty(n + 1, dtype=np.int64)
            wb = np.empty(n + 1, dtype=np.int64)
            out[i] = _match_one(primes[i], fcoef, nums, dens, xp, u, fm, sq, wa, wb)
        return out

    @njit(cache=True, parallel=True)
    def match_matrix(primes, fcoef, nums, dens):
        n = fcoef.shape[0] - 1
        out = np.zeros((primes.shape[0], dens.shape[0]), dtype=np.uint8)
        for i in prange(primes.shape[0]):
            xp = np.empty(n, dtype=np.int64)
            u = np.empty(n, dtype=np.int64)
            fm = np.empty(n + 1, dtype=np.int64)
            sq = np.empty(2 * n - 1, dtype=np.int64)
            wa = np.empty(n + 1, dtype=np.int64)
            wb = np.empty(n + 1, dtype=np.int64)
            p = primes[i]
            for j in range(n + 1):
                fm[j] = fcoef[j] % p
            _modpow_x_p(p, fm, xp, sq)
            for r in range(dens.shape[0]):
                dr = dens[r] % p
                for j in range(n):
                    u[j] = (nums[r, j] - dr * xp[j]) % p
                if _gcd_nontrivial(fm, u, p, wa, wb):
                    out[i, r] = 1
        return out

    _NUMBA_FNS = (rep_indices, match_matrix)
    return _NUMBA_FNS


# ---------------------------------------------------------------------------
# numpy backend: the same arithmetic, batched over rows of primes
# ---------------------------------------------------------------------------

_BATCH = 4096


def _np_reduce(sq, fm, p, n):
    # reduce degree-(2n-2) accumulator rows by the monic rows of fm
    for d in range(2 * n - 2, n - 1, -1):
        c = sq[:, d] % p
        nz = c != 0
        if nz.any():
            sq[nz, d - n : d] -= c[nz, None] * fm[nz, :n]
    return sq[:, :n] % p[:, None]


def _np_square(acc, fm, p, n, sq):
    sq[:] = 0
    for i in range(n):
        col = acc[:, i]
        nz = col != 0
        if nz.any():
            sq[nz, i : i + n] += col[nz, None] * acc[nz]
    return _np_reduce(sq, fm, p, n)


def _np_mul_x(acc, fm, p, n):
    c = acc[:, n - 1].copy()
    acc[:, 1:] = acc[:, :-1]
    acc[:, 0] = 0
    nz = c != 0
    if nz.any():
        acc[nz] = (acc[nz] - c[nz, None] * fm[nz, :n]) % p[nz, None]
    return acc


def _np_modpow_x_p(p, fm, n):
    rows = p.shape[0]
    acc = np.zeros((rows, n), dtype=np.int64)
    acc[:, 1] = 1
    sq = np.zeros((rows, 2 * n - 1), dtype=np.int64)
    nbits = int(p.max()).bit_length()
    for bit in range(nbits - 2, -1, -1):
        live = (p >> (bit + 1)) > 0  # rows whose top bit is above this position
        if not live.any():
            continue
        sub = np.flatnonzero(live)
        acc[sub] = _np_square(acc[sub], fm[sub], p[sub], n, sq[: len(sub)])
        hit = sub[((p[sub] >> bit) & 1) == 1]
        if hit.size:
            acc[hit] = _np_mul_x(acc[hit], fm[hit], p[hit], n)
    return acc


def _np_degrees(v):
    nz = v != 0
    deg = np.where(nz.any(axis=1), v.shape[1] - 1 - np.argmax(nz[:, ::-1], axis=1), -1)
    return deg.astype(np.int64)


def _np_gcd_nontrivial(fm, u, p, n):
    rows = p.shape[0]
    A = fm % p[:, None]
    B = np.zeros((rows, n + 1), dtype=np.int64)
    B[:, :n] = u
    da = _np_degrees(A)
    db = _np_degrees(B)
    result = np.zeros(rows, dtype=bool)
    done = np.zeros(rows, dtype=bool)
    cols = np.arange(n + 1, dtype=np.int64)
    for _ in range(4 * (n + 1)):
        finished = ~done & (db <= 0)
        if finished.any():
            result[finished & (db == -1) & (da >= 1)] = True
            done |= finished
        active = np.flatnonzero(~done)
        if active.size == 0:
            break
        # rows needing a swap before the next reduction step
        sw = active[da[active] < db[active]]
        if sw.size:
            A[sw], B[sw] = B[sw].copy(), A[sw].copy()
            da[sw], db[sw] = db[sw].copy(), da[sw].copy()
        act = np.flatnonzero(~done & (db > 0) & (da >= db))
        if act.size == 0:
            continue
        la = A[act, da[act]]
        lb = B[act, db[act]]
        sh = da[act] - db[act]
        src = cols[None, :] - sh[:, None]
        shifted = np.where(
            (src >= 0) & (src <= db[act, None]),
            np.take_along_axis(B[act], np.clip(src, 0, n), axis=1),
            0,
        )
        A[act] = (lb[:, None] * A[act] - la[:, None] * shifted) % p[act, None]
        da[act] = _np_degrees(A[act])
    return result


def _np_match_block(primes, fcoef, nums, dens, full_matrix):
    n = fcoef.shape[0] - 1
    p = primes
    fm = fcoef[None, :] % p[:, None]
    xp = _np_modpow_x_p(p, fm, n)
    nreps = dens.shape[0]
    if full_matrix:
        out = np.zeros((p.shape[0], nreps), dtype=np.uint8)
        for r in range(nreps):
            u = (nums[r][None, :] - (dens[r] % p)[:, None] * xp) % p[:, None]
            out[:, r] = _np_gcd_nontrivial(fm, u, p, n)
        return out
    found = np.full(p.shape[0], -1, dtype=np.int16)
    for r in range(nreps):
        u = (nums[r][None, :] - (dens[r] % p)[:, None] * xp) % p[:, None]
        hit = _np_gcd_nontrivial(fm, u, p, n)
        dup = hit & (found >= 0)
        found[dup] = -2
        fresh = hit & (found == -1)
        found[fresh] = r
    return found


def _np_rep_indices(primes, fcoef, nums, dens):
    out = np.empty(primes.shape[0], dtype=np.int16)
    for lo in range(0, primes.shape[0], _BATCH):
        hi = min(lo + _BATCH, primes.shape[0])
        out[lo:hi] = _np_match_block(primes[lo:hi], fcoef, nums, dens, False)
    return out


def _np_match_matrix(primes, fcoef, nums, dens):
    out = np.empty((primes.shape[0], dens.shape[0]), dtype=np.uint8)
    for lo in range(0, primes.shape[0], _BATCH):
        hi = min(lo + _BATCH, primes.shape[0])
        out[lo:hi] = _np_match_block(primes[lo:hi], fcoef, nums, dens, True)
    return out


# ---------------------------------------------------------------------------
# dispatchers
# ---------------------------------------------------------------------------


def _check_inputs(primes, fcoef, nums, dens):
    if primes.size and int(primes.max()) > MAX_KERNEL_PRIME:
        raise ValueError(f"primes above {MAX_KERNEL_PRIME} overflow the int64 kernels")
    if primes.size and int(primes.min()) < 3:
        raise ValueError("kernel primes must be odd (p >= 3)")
    if fcoef[-1] != 1:
        raise ValueError("defining polynomial must be monic")
    if nums.shape[1] != fcoef.shape[0] - 1 or nums.shape[0] != dens.shape[0]:
        raise ValueError("automorphism table shape mismatch")


def frobenius_rep_indices(primes, fcoef, nums, dens, backend: str | None = None):
    """For each prime, the index of the unique matching candidate automorphism.

    Returns -1 where nothing matched and -2 where two candidates matched;
    callers treat both as corrupt field data.
    """
    primes = np.ascontiguousarray(primes, dtype=np.int64)
    fcoef = np.ascontiguousarray(fcoef, dtype=np.int64)
    nums = np.ascontiguousarray(nums, dtype=np.int64)
    dens = np.ascontiguousarray(dens, dtype=np.int64)
    _check_inputs(primes, fcoef, nums, dens)
    be = backend or _pick_backend()
    if be == "numba":
        return _build_numba()[0](primes, fcoef, nums, dens)
    return _np_rep_indices(primes, fcoef, nums, dens)


def frobenius_match_matrix(primes, fcoef, nums, dens, backend: str | None = None):
    """uint8 matrix (n_primes, n_autos): which automorphisms match each prime."""
    primes = np.ascontiguousarray(primes, dtype=np.int64)
    fcoef = np.ascontiguousarray(fcoef, dtype=np.int64)
    nums = np.ascontiguousarray(nums, dtype=np.int64)
    dens = np.ascontiguousarray(dens, dtype=np.int64)
    _check_inputs(primes, fcoef, nums, dens)
    be = backend or _pick_backend()
    if be == "numba":
        return _build_numba()[1](primes, fcoef, nums, dens)
    return _np_match_matrix(primes, fcoef, nums, dens)
