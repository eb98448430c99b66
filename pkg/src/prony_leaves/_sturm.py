"""Compiled kernels for Sturm-sequence real-root isolation.

Polynomials are monic, coefficients in descending order. Before building the
chain the variable is rescaled by a Fujiwara-type root bound so all real roots
lie in ``[-1, 1]`` and chain coefficients stay O(1).
"""

import numba
import numpy as np

# remainders below this (relative to the dividend scale) end the chain
REM_TOL = 1e-13
# isolation gives up splitting below this width in scaled units
MIN_WIDTH = 1e-15


@numba.njit(cache=True)
def root_bound(c):
    n = c.shape[0] - 1
    b = 0.0
    for i in range(1, n + 1):
        v = abs(c[i]) ** (1.0 / i)
        if v > b:
            b = v
    return 2.0 * b


@numba.njit(cache=True)
def scale_bound(c):
    """Root bound floored so that ``B**n`` stays a normal float."""
    n = c.shape[0] - 1
    return max(root_bound(c), 10.0 ** (-290.0 / n))


@numba.njit(cache=True)
def _normalize_row(row, deg):
    m = 0.0
    for i in range(deg + 1):
        if abs(row[i]) > m:
            m = abs(row[i])
    if m > 0.0:
        for i in range(deg + 1):
            row[i] /= m


@numba.njit(cache=True)
def sturm_chain(c):
    """Chain rows (left-aligned, descending) and degrees; ``n`` rows used."""
    n = c.shape[0] - 1
    chain = np.zeros((n + 1, n + 1))
    degs = np.zeros(n + 1, dtype=np.int64)
    for i in range(n + 1):
        chain[0, i] = c[i]
    degs[0] = n
    _normalize_row(chain[0], n)
    if n == 0:
        return chain, degs, 1
    for i in range(n):
        chain[1, i] = (n - i) * chain[0, i]
    degs[1] = n - 1
    _normalize_row(chain[1], n - 1)
    count = 2
    while degs[count - 1] > 0:
        a = chain[count - 2]
        b = chain[count - 1]
        da = degs[count - 2]
        db = degs[count - 1]
        r = np.zeros(da + 1)
        for i in range(da + 1):
            r[i] = a[i]
        scale = 1.0
        for i in range(da - db + 1):
            f = r[i] / b[0]
            if abs(f) > scale:
                scale = abs(f)
            for j in range(db + 1):
                r[i + j] -= f * b[j]
        # remainder occupies r[da-db+1 .. da], degree db-1
        start = da - db + 1
        lead = start
        while lead <= da and abs(r[lead]) <= REM_TOL * scale:
            lead += 1
        if lead > da:
            break
        deg = da - lead
        for j in range(deg + 1):
            chain[count, j] = -r[lead + j]
        degs[count] = deg
        _normalize_row(chain[count], deg)
        count += 1
    return chain, degs, count


@numba.njit(cache=True)
def horner(row, deg, x):
    v = row[0]
    for i in range(1, deg + 1):
        v = v * x + row[i]
    return v


@numba.njit(cache=True)
def sign_changes(chain, degs, count, x):
    changes = 0
    prev = 0.0
    for k in range(count):
        v = horner(chain[k], degs[k], x)
        if v != 0.0:
            if prev != 0.0 and (v > 0.0) != (prev > 0.0):
                changes += 1
            prev = v
    return changes


@numba.njit(cache=True)
def count_real_roots(c):
    """Number of distinct real roots of the monic polynomial ``c``."""
    n = c.shape[0] - 1
    if n == 0:
        return 0
    B = scale_bound(c)
    s = np.empty(n + 1)
    for i in range(n + 1):
        s[i] = c[i] / B ** i
    chain, degs, count = sturm_chain(s)
    return sign_changes(chain, degs, count, -1.0 - 1e-9) - sign_changes(chain, degs, count, 1.0 + 1e-9)


@numba.njit(cache=True)
def _refine(chain, degs, count, lo, hi, vlo, width):
    """Shrink ``(lo, hi]`` holding one root to ``width``; returns the midpoint."""
    flo = horner(chain[0], degs[0], lo)
    fhi = horner(chain[0], degs[0], hi)
    if fhi == 0.0:
        return hi
    use_sign = flo != 0.0 and (flo > 0.0) != (fhi > 0.0)
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if use_sign:
            fm = horner(chain[0], degs[0], mid)
            if fm == 0.0:
                return mid
            if (fm > 0.0) == (flo > 0.0):
                lo = mid
                flo = fm
            else:
                hi = mid
        else:
            vm = sign_changes(chain, degs, count, mid)
            if vlo - vm >= 1:
                hi = mid
            else:
                lo = mid
                vlo = vm
    return 0.5 * (lo + hi)


@numba.njit(cache=True)
def real_roots(c, width):
    """Sorted distinct real roots of monic ``c`` (descending coefficients).

    Returns ``(roots, n_found, ok)``; ``ok`` is False when a cluster could not
    be separated (numerically multiple root). ``width`` is the absolute
    bisection width in the original variable.
    """
    n = c.shape[0] - 1
    roots = np.full(n, np.nan)
    if n == 0:
        return roots, 0, True
    B = scale_bound(c)
    s = np.empty(n + 1)
    for i in range(n + 1):
        s[i] = c[i] / B ** i
    chain, degs, count = sturm_chain(s)
    lo0 = -1.0 - 1e-9
    hi0 = 1.0 + 1e-9
    w = width / B
    # explicit stack of (lo, hi, V(lo), V(hi)); depth-first, left half on top
    stack_lo = np.empty(4 * n * 64)
    stack_hi = np.empty(4 * n * 64)
    stack_vlo = np.empty(4 * n * 64, dtype=np.int64)
    stack_vhi = np.empty(4 * n * 64, dtype=np.int64)
    top = 0
    stack_lo[0] = lo0
    stack_hi[0] = hi0
    stack_vlo[0] = sign_changes(chain, degs, count, lo0)
    stack_vhi[0] = sign_changes(chain, degs, count, hi0)
    top = 1
    found = 0
    ok = True
    while top > 0:
        top -= 1
        lo = stack_lo[top]
        hi = stack_hi[top]
        vlo = stack_vlo[top]
        vhi = stack_vhi[top]
        k = vlo - vhi
        if k <= 0:
            continue
        if k == 1:
            if found < n:
                roots[found] = B * _refine(chain, degs, count, lo, hi, vlo, w)
            found += 1
            continue
        if hi - lo < MIN_WIDTH or top + 2 > stack_lo.shape[0]:
            ok = False
            for _ in range(k):
                if found < n:
                    roots[found] = B * 0.5 * (lo + hi)
                found += 1
            continue
        mid = 0.5 * (lo + hi)
        vm = sign_changes(chain, degs, count, mid)
        # right half first so the left half is processed next
        stack_lo[top] = mid
        stack_hi[top] = hi
        stack_vlo[top] = vm
        stack_vhi[top] = vhi
        top += 1
        stack_lo[top] = lo
        stack_hi[top] = mid
        stack_vlo[top] = vlo
        stack_vhi[top] = vm
        top += 1
    if found > n:
        found = n
        ok = False
    # one Newton step per root on the unscaled polynomial
    for j in range(found):
        x = roots[j]
        p = c[0]
        dp = 0.0
        for i in range(1, n + 1):
            dp = dp * x + p
            p = p * x + c[i]
        if dp != 0.0:
            xn = x - p / dp
            pn = c[0]
            for i in range(1, n + 1):
                pn = pn * xn + c[i]
            if abs(pn) <= abs(p) and abs(xn - x) <= 10.0 * width + 1e-15 * abs(x):
                roots[j] = xn
    return roots, found, ok


@numba.njit(cache=True)
def real_roots_batch(C, width):
    """``real_roots`` over the rows of ``C``; returns roots, counts and ok flags."""
    m = C.shape[0]
    n = C.shape[1] - 1
    out = np.full((m, n), np.nan)
    found = np.zeros(m, dtype=np.int64)
    oks = np.zeros(m, dtype=np.bool_)
    for i in range(m):
        r, f, ok = real_roots(C[i], width)
        out[i] = r
        found[i] = f
        oks[i] = ok
    return out, found, oks
