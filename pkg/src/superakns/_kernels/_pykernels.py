"""Pure-Python reference kernels.

These are the fallback used when the compiled extension is unavailable and
the reference the compiled versions are tested against.

Term keys are ``(mu, even, odd)`` where ``even`` is a tuple of
``(jet_code, exponent)`` pairs sorted by code and ``odd`` is a strictly
increasing tuple of odd jet codes.
"""

from __future__ import annotations


def odd_merge(a, b):
    """Merge two canonical odd words.

    Returns ``(sign, word)``; ``(0, None)`` when a factor repeats.
    """
    if not a:
        return 1, b
    if not b:
        return 1, a
    out = []
    i = j = 0
    na, nb = len(a), len(b)
    swaps = 0
    while i < na and j < nb:
        x, y = a[i], b[j]
        if x < y:
            out.append(x)
            i += 1
        elif y < x:
            # y jumps over the na - i remaining factors of a
            swaps += na - i
            out.append(y)
            j += 1
        else:
            return 0, None
    if i < na:
        out.extend(a[i:])
    if j < nb:
        out.extend(b[j:])
    return (-1 if swaps & 1 else 1), tuple(out)


def even_merge(a, b):
    if not a:
        return b
    if not b:
        return a
    out = []
    i = j = 0
    na, nb = len(a), len(b)
    while i < na and j < nb:
        ca, ea = a[i]
        cb, eb = b[j]
        if ca < cb:
            out.append(a[i])
            i += 1
        elif cb < ca:
            out.append(b[j])
            j += 1
        else:
            out.append((ca, ea + eb))
            i += 1
            j += 1
    if i < na:
        out.extend(a[i:])
    if j < nb:
        out.extend(b[j:])
    return tuple(out)


def mul_terms(f_items, g_items):
    """Product of two term lists ``[(key, coeff), ...]`` as a dict."""
    acc = {}
    get = acc.get
    for (mu1, ev1, od1), c1 in f_items:
        for (mu2, ev2, od2), c2 in g_items:
            sign, od = odd_merge(od1, od2)
            if not sign:
                continue
            key = (mu1 + mu2, even_merge(ev1, ev2), od)
            c = c1 * c2 if sign > 0 else -(c1 * c2)
            v = get(key)
            if v is None:
                acc[key] = c
            else:
                v = v + c
                if v:
                    acc[key] = v
                else:
                    del acc[key]
    return acc
