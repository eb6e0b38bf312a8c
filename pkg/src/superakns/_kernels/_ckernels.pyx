# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled kernels; same contracts as ``_pykernels``."""


cpdef tuple odd_merge(tuple a, tuple b):
    cdef Py_ssize_t na = len(a), nb = len(b), i = 0, j = 0
    cdef long x, y
    cdef long swaps = 0
    cdef list out
    if na == 0:
        return (1, b)
    if nb == 0:
        return (1, a)
    out = []
    while i < na and j < nb:
        x = a[i]
        y = b[j]
        if x < y:
            out.append(a[i])
            i += 1
        elif y < x:
            swaps += na - i
            out.append(b[j])
            j += 1
        else:
            return (0, None)
    while i < na:
        out.append(a[i])
        i += 1
    while j < nb:
        out.append(b[j])
        j += 1
    return (-1 if swaps & 1 else 1, tuple(out))


cpdef tuple even_merge(tuple a, tuple b):
    cdef Py_ssize_t na = len(a), nb = len(b), i = 0, j = 0
    cdef tuple ta, tb
    cdef long ca, cb
    cdef list out
    if na == 0:
        return b
    if nb == 0:
        return a
    out = []
    while i < na and j < nb:
        ta = a[i]
        tb = b[j]
        ca = ta[0]
        cb = tb[0]
        if ca < cb:
            out.append(ta)
            i += 1
        elif cb < ca:
            out.append(tb)
            j += 1
        else:
            out.append((ca, ta[1] + tb[1]))
            i += 1
            j += 1
    while i < na:
        out.append(a[i])
        i += 1
    while j < nb:
        out.append(b[j])
        j += 1
    return tuple(out)


def mul_terms(list f_items, list g_items):
    cdef dict acc = {}
    cdef tuple k1, k2, key, merged
    cdef object c1, c2, c, v
    cdef int sign
    for k1, c1 in f_items:
        for k2, c2 in g_items:
            merged = odd_merge(<tuple>k1[2], <tuple>k2[2])
            sign = merged[0]
            if sign == 0:
                continue
            key = (k1[0] + k2[0], even_merge(<tuple>k1[1], <tuple>k2[1]), merged[1])
            c = c1 * c2
            if sign < 0:
                c = -c
            v = acc.get(key)
            if v is None:
                acc[key] = c
            else:
                v = v + c
                if v:
                    acc[key] = v
                else:
                    del acc[key]
    return acc
