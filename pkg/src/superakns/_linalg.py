"""Exact sparse linear algebra over the rationals."""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Hashable, List, Optional


def solve_sparse(rows: List[Dict[Hashable, Fraction]],
                 rhs: List[Fraction]) -> Optional[Dict[Hashable, Fraction]]:
    """Solve ``sum_c rows[i][c] * x[c] = rhs[i]`` exactly.

    Free unknowns are set to zero. Returns ``None`` if the system is
    inconsistent.
    """
    work = [(dict(r), Fraction(b)) for r, b in zip(rows, rhs)]
    pivots = []  # (column, row dict, rhs), each row reduced w.r.t. earlier pivots
    for row, b in work:
        for col, prow, pb in pivots:
            f = row.get(col)
            if f:
                for c, v in prow.items():
                    nv = row.get(c, 0) - f * v
                    if nv:
                        row[c] = nv
                    else:
                        row.pop(c, None)
                b -= f * pb
        if not row:
            if b:
                return None
            continue
        col = min(row, key=_order_key)
        inv = 1 / row[col]
        row = {c: v * inv for c, v in row.items()}
        b *= inv
        # keep earlier pivot rows fully reduced
        for k, (c0, prow, pb) in enumerate(pivots):
            f = prow.get(col)
            if f:
                for c, v in row.items():
                    nv = prow.get(c, 0) - f * v
                    if nv:
                        prow[c] = nv
                    else:
                        prow.pop(c, None)
                pivots[k] = (c0, prow, pb - f * b)
        pivots.append((col, row, b))
    # reduced echelon form: each pivot row = pivot + free columns only
    return {col: pb for col, _, pb in pivots if pb}


def _order_key(col):
    return repr(col)
