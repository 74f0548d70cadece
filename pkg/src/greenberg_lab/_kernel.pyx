# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trial kernel; mirrors ``_fallback`` draw for draw.

Entries are held in int64. The caller guarantees every modulus is below
2**31 and every rank is at most MAXR, so all intermediate products fit.
"""
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport calloc, free

cdef enum:
    MAXR = 32

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL

MAX_RANK = MAXR
MAX_MODULUS = 2 ** 31


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t below(uint64_t key, uint64_t* counter, uint64_t bound) noexcept nogil:
    cdef uint64_t threshold = (<uint64_t>0 - bound) % bound
    cdef uint64_t u
    while True:
        counter[0] += 1
        u = mix64(key + counter[0] * GAMMA)
        if u >= threshold:
            return u % bound


cdef inline int64_t pmod(int64_t a, int64_t m) noexcept nogil:
    cdef int64_t r = a % m
    if r < 0:
        r += m
    return r


cdef struct Lat:
    int r
    int64_t m[MAXR]
    int64_t h[MAXR][MAXR]


cdef void lat_init(Lat* L, int r, int64_t* moduli) noexcept nogil:
    cdef int i, j
    L.r = r
    for i in range(r):
        L.m[i] = moduli[i]
        for j in range(r):
            L.h[i][j] = moduli[i] if i == j else 0


cdef bint lat_full(Lat* L) noexcept nogil:
    cdef int j
    for j in range(L.r):
        if L.h[j][j] != 1:
            return False
    return True


cdef bint lat_contains(Lat* L, int64_t* x0) noexcept nogil:
    cdef int64_t x[MAXR]
    cdef int j, k
    cdef int64_t xj, d, q
    for j in range(L.r):
        x[j] = pmod(x0[j], L.m[j])
    for j in range(L.r):
        xj = x[j]
        if xj == 0:
            continue
        d = L.h[j][j]
        if xj % d:
            return False
        q = xj // d
        for k in range(j, L.r):
            x[k] = pmod(x[k] - q * L.h[j][k], L.m[k])
    return True


cdef void lat_insert(Lat* L, int64_t* v0) noexcept nogil:
    cdef int64_t v[MAXR]
    cdef int j, k
    cdef int64_t xj, d, q, g, a, b, dg, xg, old, x0, x1, y0, y1, aa, bb, tmp
    for j in range(L.r):
        v[j] = pmod(v0[j], L.m[j])
    for j in range(L.r):
        xj = v[j]
        if xj == 0:
            continue
        d = L.h[j][j]
        if xj % d == 0:
            q = xj // d
            for k in range(j, L.r):
                v[k] = pmod(v[k] - q * L.h[j][k], L.m[k])
            continue
        # extended gcd of (d, xj)
        aa = d
        bb = xj
        x0 = 1; x1 = 0; y0 = 0; y1 = 1
        while bb:
            q = aa // bb
            tmp = aa - q * bb; aa = bb; bb = tmp
            tmp = x0 - q * x1; x0 = x1; x1 = tmp
            tmp = y0 - q * y1; y0 = y1; y1 = tmp
        g = aa; a = x0; b = y0
        dg = d // g
        xg = xj // g
        for k in range(j, L.r):
            old = L.h[j][k]
            L.h[j][k] = pmod(pmod(a * old, L.m[k]) + pmod(b * v[k], L.m[k]), L.m[k])
            v[k] = pmod(pmod(dg * v[k], L.m[k]) - pmod(xg * old, L.m[k]), L.m[k])
        L.h[j][j] = g


cdef int run_one(Lat* hc, Lat* hr, int rc, int64_t* mc, int rr, int64_t* mr,
                 bint single, int64_t max_steps, uint64_t key,
                 int64_t* out) noexcept nogil:
    # out = [b, n_a, n_bi, n_bii, diverged]
    cdef int64_t c[MAXR]
    cdef int64_t rv[MAXR]
    cdef uint64_t counter = 0
    cdef int64_t step = 0, grown = 0, draws, i
    cdef int j
    lat_init(hc, rc, mc)
    lat_init(hr, rr, mr)
    out[1] = 0; out[2] = 0; out[3] = 0; out[4] = 0
    while not (lat_full(hc) and lat_full(hr)):
        if step >= max_steps:
            out[0] = step
            out[4] = 1
            return 0
        step += 1
        draws = 1 if single else grown + 1
        for i in range(draws):
            for j in range(rc):
                c[j] = <int64_t>below(key, &counter, <uint64_t>mc[j])
            for j in range(rr):
                rv[j] = <int64_t>below(key, &counter, <uint64_t>mr[j])
            if not lat_contains(hc, c):
                lat_insert(hc, c)
                out[1] += 1
                grown += 1
            elif not lat_contains(hr, rv):
                lat_insert(hr, rv)
                out[2] += 1
                grown += 1
            else:
                out[3] += 1
    out[0] = step
    return 0


cdef int _load(object moduli, int64_t* dst) except -1:
    cdef int n = len(moduli)
    if n > MAXR:
        raise ValueError("rank exceeds compiled kernel limit")
    for j in range(n):
        if not 1 < moduli[j] < MAX_MODULUS:
            raise ValueError("modulus outside compiled kernel range")
        dst[j] = moduli[j]
    return n


def stream_key(seed, trial):
    cdef uint64_t s = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t t = <uint64_t>trial
    return mix64(mix64(s) + (t + 1) * GAMMA)


def run_trial(class_moduli, norm_moduli, bint single, int64_t max_steps, key):
    cdef int64_t mc[MAXR]
    cdef int64_t mr[MAXR]
    cdef int rc = _load(class_moduli, mc)
    cdef int rr = _load(norm_moduli, mr)
    cdef Lat hc, hr
    cdef int64_t out[5]
    cdef uint64_t k = <uint64_t>(key & 0xFFFFFFFFFFFFFFFF)
    with nogil:
        run_one(&hc, &hr, rc, mc, rr, mr, single, max_steps, k, out)
    return out[0], out[1], out[2], out[3], bool(out[4])


def run_trials(class_moduli, norm_moduli, bint single, int64_t max_steps, seed, int64_t start, int64_t stop):
    cdef int64_t mc[MAXR]
    cdef int64_t mr[MAXR]
    cdef int rc = _load(class_moduli, mc)
    cdef int rr = _load(norm_moduli, mr)
    cdef Lat hc, hr
    cdef int64_t out[5]
    cdef uint64_t s = mix64(<uint64_t>(seed & 0xFFFFFFFFFFFFFFFF))
    cdef int64_t t, b
    cdef int64_t na = 0, nbi = 0, nbii = 0, diverged = 0
    cdef int64_t* counts = <int64_t*>calloc(max_steps + 1, sizeof(int64_t))
    if counts == NULL:
        raise MemoryError()
    try:
        with nogil:
            for t in range(start, stop):
                run_one(&hc, &hr, rc, mc, rr, mr, single, max_steps,
                        mix64(s + (<uint64_t>t + 1) * GAMMA), out)
                counts[out[0]] += 1
                na += out[1]
                nbi += out[2]
                nbii += out[3]
                diverged += out[4]
        hist = {int(b): int(counts[b]) for b in range(max_steps + 1) if counts[b]}
    finally:
        free(counts)
    return hist, (na, nbi, nbii), diverged
