"""Matrix Lie superalgebras sl(2,1) and sl(4,1).

Supermatrices have entries that are Laurent polynomials in the spectral
parameter with :class:`~superakns.diffring.DiffPoly` coefficients. A
grading lists the parity (0 even, 1 odd) of each row/column index.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .diffring import DiffPoly, as_poly, d_total
from ._linalg import solve_sparse
from .report import FAIL, INFO, PASS, Report


class LaurentPoly:
    """Finite Laurent polynomial ``sum_k c_k lambda^k`` with DiffPoly ``c_k``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Optional[Dict[int, DiffPoly]] = None):
        self.coeffs = {k: v for k, v in (coeffs or {}).items() if v}

    @classmethod
    def const(cls, value, power: int = 0) -> "LaurentPoly":
        return cls({power: as_poly(value)})

    @classmethod
    def lam(cls, power: int = 1) -> "LaurentPoly":
        return cls({power: DiffPoly.one()})

    def __getitem__(self, power: int) -> DiffPoly:
        return self.coeffs.get(power, DiffPoly.zero())

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def powers(self) -> List[int]:
        return sorted(self.coeffs)

    def __add__(self, other) -> "LaurentPoly":
        other = _as_laurent(other)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out[k] + v if k in out else v
        return LaurentPoly(out)

    __radd__ = __add__

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly({k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other) -> "LaurentPoly":
        return self + (-_as_laurent(other))

    def __rsub__(self, other) -> "LaurentPoly":
        return _as_laurent(other) - self

    def __mul__(self, other) -> "LaurentPoly":
        other = _as_laurent(other)
        out: Dict[int, DiffPoly] = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                prod = a * b
                if prod:
                    out[i + j] = out[i + j] + prod if i + j in out else prod
        return LaurentPoly(out)

    def __rmul__(self, other) -> "LaurentPoly":
        return _as_laurent(other) * self

    def __eq__(self, other) -> bool:
        try:
            other = _as_laurent(other)
        except TypeError:
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def map(self, fn) -> "LaurentPoly":
        return LaurentPoly({k: fn(v) for k, v in self.coeffs.items()})

    def d_x(self) -> "LaurentPoly":
        return self.map(d_total)

    def d_lambda(self) -> "LaurentPoly":
        return LaurentPoly({k - 1: v.scale(k) for k, v in self.coeffs.items() if k})

    def parity(self) -> str:
        ps = {v.parity for v in self.coeffs.values()}
        if not ps:
            return "even"
        return ps.pop() if len(ps) == 1 else "mixed"

    def __repr__(self):
        if not self.coeffs:
            return "0"
        return " + ".join(f"({v})*lambda^{k}" for k, v in sorted(self.coeffs.items(), reverse=True))


def _as_laurent(x) -> LaurentPoly:
    if isinstance(x, LaurentPoly):
        return x
    return LaurentPoly.const(as_poly(x))


class GradingError(ValueError):
    pass


class SuperMatrix:
    """Square or rectangular matrix over Laurent polynomials with a grading."""

    def __init__(self, rows: Sequence[Sequence], grading: Sequence[int], parity: int = 0):
        self.rows = [[_as_laurent(x) for x in row] for row in rows]
        self.grading = tuple(grading)
        self.parity = parity
        n = len(self.rows)
        if n != len(self.grading) or any(len(r) != n for r in self.rows):
            raise GradingError("supermatrix must be square with one grade per index")

    @classmethod
    def zeros(cls, grading: Sequence[int], parity: int = 0) -> "SuperMatrix":
        n = len(grading)
        return cls([[LaurentPoly() for _ in range(n)] for _ in range(n)], grading, parity)

    @classmethod
    def from_ints(cls, rows, grading, parity=0) -> "SuperMatrix":
        return cls([[DiffPoly.const(v) for v in row] for row in rows], grading, parity)

    @property
    def size(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij) -> LaurentPoly:
        i, j = ij
        return self.rows[i][j]

    def _check(self, other: "SuperMatrix"):
        if self.grading != other.grading:
            raise GradingError(f"grading mismatch {self.grading} vs {other.grading}")

    def __add__(self, other: "SuperMatrix") -> "SuperMatrix":
        self._check(other)
        return SuperMatrix([[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)],
                           self.grading, self.parity)

    def __sub__(self, other: "SuperMatrix") -> "SuperMatrix":
        self._check(other)
        return SuperMatrix([[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)],
                           self.grading, self.parity)

    def __neg__(self) -> "SuperMatrix":
        return SuperMatrix([[-a for a in r] for r in self.rows], self.grading, self.parity)

    def scale(self, c) -> "SuperMatrix":
        c = _as_laurent(c)
        return SuperMatrix([[c * a for a in r] for r in self.rows], self.grading, self.parity)

    def __matmul__(self, other: "SuperMatrix") -> "SuperMatrix":
        self._check(other)
        n = self.size
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = LaurentPoly()
                for k in range(n):
                    a, b = self.rows[i][k], other.rows[k][j]
                    if a and b:
                        acc = acc + a * b
                row.append(acc)
            out.append(row)
        return SuperMatrix(out, self.grading, (self.parity + other.parity) % 2)

    def map(self, fn) -> "SuperMatrix":
        return SuperMatrix([[fn(a) for a in r] for r in self.rows], self.grading, self.parity)

    def d_x(self) -> "SuperMatrix":
        return self.map(LaurentPoly.d_x)

    def d_lambda(self) -> "SuperMatrix":
        return self.map(LaurentPoly.d_lambda)

    @property
    def is_zero(self) -> bool:
        return all(a.is_zero for r in self.rows for a in r)

    def nonzero_entries(self) -> List[Tuple[int, int, LaurentPoly]]:
        return [(i, j, a) for i, r in enumerate(self.rows) for j, a in enumerate(r) if a]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SuperMatrix):
            return NotImplemented
        return self.grading == other.grading and self.rows == other.rows

    def grading_violations(self) -> List[Tuple[int, int, str]]:
        """Entries whose DiffPoly parity disagrees with their block.

        An entry in block (i, j) must have parity
        ``grading[i] + grading[j] + self.parity`` (mod 2).
        """
        bad = []
        for i, j, a in self.nonzero_entries():
            want = "odd" if (self.grading[i] + self.grading[j] + self.parity) % 2 else "even"
            for v in a.coeffs.values():
                if not v.has_parity(want):
                    bad.append((i, j, want))
                    break
        return bad

    def check_grading(self) -> "SuperMatrix":
        bad = self.grading_violations()
        if bad:
            raise GradingError(f"entries violate the block grading: {bad}")
        return self

    def lambda_window(self) -> Tuple[int, int]:
        powers = [k for r in self.rows for a in r for k in a.coeffs]
        return (min(powers), max(powers)) if powers else (0, 0)

    def __repr__(self):
        return "SuperMatrix(" + repr([[repr(a) for a in r] for r in self.rows]) + ")"


def supercommutator(x: SuperMatrix, y: SuperMatrix) -> SuperMatrix:
    """Graded bracket ``XY - (-1)^{|X||Y|} YX``.

    Entry parity signs come from the DiffPoly product; the matrix-level sign
    only matters for constant odd matrices such as the odd basis elements.
    """
    x._check(y)
    xy = x @ y
    yx = y @ x
    if x.parity and y.parity:
        return xy + yx
    return xy - yx


def supertrace(x: SuperMatrix) -> LaurentPoly:
    out = LaurentPoly()
    for i, g in enumerate(x.grading):
        out = out - x.rows[i][i] if g else out + x.rows[i][i]
    return out


def identity(grading: Sequence[int]) -> SuperMatrix:
    n = len(grading)
    return SuperMatrix.from_ints([[1 if i == j else 0 for j in range(n)] for i in range(n)], grading)


# --------------------------------------------------------------------------
# bases

GRADING_21 = (0, 0, 1)
GRADING_41 = (0, 0, 0, 0, 1)

_SL21 = {
    "E1": ([[1, 0, 0], [0, -1, 0], [0, 0, 0]], 0),
    "E2": ([[0, 1, 0], [0, 0, 0], [0, 0, 0]], 0),
    "E3": ([[0, 0, 0], [1, 0, 0], [0, 0, 0]], 0),
    "E4": ([[0, 0, 1], [0, 0, 0], [0, -1, 0]], 1),
    "E5": ([[0, 0, 0], [0, 0, 1], [1, 0, 0]], 1),
}

_SL41 = {
    "e1": ([[1, 0, 0, 0, 0], [0, -1, 0, 0, 0], [0, 0, 1, 0, 0], [0, 0, 0, -1, 0], [0, 0, 0, 0, 0]], 0),
    "e2": ([[0, 1, 0, 0, 0], [0, 0, 0, 0, 0], [0, 0, 0, 1, 0], [0, 0, 0, 0, 0], [0, 0, 0, 0, 0]], 0),
    "e3": ([[0, 0, 0, 0, 0], [1, 0, 0, 0, 0], [0, 0, 0, 0, 0], [0, 0, 1, 0, 0], [0, 0, 0, 0, 0]], 0),
    "e4": ([[0, 0, 1, 0, 0], [0, 0, 0, -1, 0], [0, 0, 1, 0, 0], [0, 0, 0, -1, 0], [0, 0, 0, 0, 0]], 0),
    "e5": ([[0, 0, 0, 1, 0], [0, 0, 0, 0, 0], [0, 0, 0, 1, 0], [0, 0, 0, 0, 0], [0, 0, 0, 0, 0]], 0),
    "e6": ([[0, 0, 0, 0, 0], [0, 0, 1, 0, 0], [0, 0, 0, 0, 0], [0, 0, 1, 0, 0], [0, 0, 0, 0, 0]], 0),
    "e7": ([[0, 0, 0, 0, 1], [0, 0, 0, 0, 0], [0, 0, 0, 0, 0], [0, 0, 0, 0, 0], [0, -1, 0, 1, 0]], 1),
    "e8": ([[0, 0, 0, 0, 0], [0, 0, 0, 0, 1], [0, 0, 0, 0, 0], [0, 0, 0, 0, 0], [1, 0, -1, 0, 0]], 1),
}

# Printed relations: (left, right, {basis: coefficient}); the bracket is the
# anticommutator when both arguments are odd.
RELATIONS_21 = [
    ("E1", "E2", {"E2": 2}), ("E1", "E3", {"E3": -2}), ("E2", "E3", {"E1": 1}),
    ("E1", "E4", {"E4": 1}), ("E2", "E5", {"E4": 1}),
    ("E1", "E5", {"E5": -1}), ("E4", "E3", {"E5": -1}),
    ("E2", "E4", {}), ("E3", "E5", {}),
    ("E4", "E4", {"E2": -2}), ("E5", "E5", {"E3": 2}),
    ("E4", "E5", {"E1": 1}), ("E5", "E4", {"E1": 1}),
]

RELATIONS_41 = [
    ("e1", "e2", {"e2": 2}), ("e1", "e3", {"e3": -2}),
    ("e1", "e5", {"e5": 2}), ("e2", "e4", {"e5": -2}), ("e4", "e5", {"e5": 2}),
    ("e2", "e3", {"e1": 1}),
    ("e1", "e6", {"e6": -2}), ("e3", "e4", {"e6": 2}), ("e4", "e6", {"e6": -2}),
    ("e1", "e7", {"e7": 1}), ("e2", "e8", {"e7": 1}),
    ("e1", "e8", {"e8": -1}), ("e3", "e7", {"e8": 1}),
    ("e2", "e6", {"e4": 1}), ("e3", "e5", {"e4": -1}), ("e5", "e6", {"e4": 1}),
    ("e1", "e4", {}), ("e2", "e5", {}), ("e2", "e7", {}), ("e3", "e6", {}), ("e3", "e8", {}),
    ("e4", "e7", {}), ("e4", "e8", {}), ("e5", "e7", {}), ("e5", "e8", {}),
    ("e6", "e7", {}), ("e6", "e8", {}),
    ("e7", "e8", {"e1": 1, "e4": -1}), ("e7", "e7", {"e5": 2, "e2": -2}),
    ("e8", "e8", {"e3": 2, "e6": -2}),
]

ALGEBRAS = {
    "sl21": (_SL21, GRADING_21, RELATIONS_21),
    "sl41": (_SL41, GRADING_41, RELATIONS_41),
}


def basis(algebra: str) -> Dict[str, SuperMatrix]:
    table, grading, _ = ALGEBRAS[algebra]
    return {name: SuperMatrix.from_ints(rows, grading, par) for name, (rows, par) in table.items()}


def expand_in_basis(x: SuperMatrix, elements: Dict[str, SuperMatrix]) -> Optional[Dict[str, Fraction]]:
    """Exact coordinates of a constant matrix in the given basis, or None."""
    n = x.size
    names = list(elements)
    rows, rhs = [], []
    for i in range(n):
        for j in range(n):
            row = {}
            for name in names:
                v = elements[name][i, j][0].coefficient((0, (), ()))
                if v:
                    row[name] = v
            rows.append(row)
            rhs.append(x[i, j][0].coefficient((0, (), ())))
    sol = solve_sparse(rows, rhs)
    if sol is None:
        return None
    return {k: v for k, v in sol.items() if v}


def _combination(coeffs: Dict[str, int], elements: Dict[str, SuperMatrix], grading) -> SuperMatrix:
    out = SuperMatrix.zeros(grading)
    for name, c in coeffs.items():
        out = out + elements[name].scale(DiffPoly.const(c))
    return out


def _fmt(coeffs: Dict[str, Fraction]) -> str:
    if not coeffs:
        return "0"
    return " + ".join(f"{c}*{k}" for k, c in sorted(coeffs.items()))


def _bracket_name(a: str, b: str, odd: bool) -> str:
    return f"[{a},{b}]" + ("_+" if odd else "")


def verify_relations(algebra: str) -> Report:
    """Check every printed (anti)commutator by explicit matrix products.

    Also reports brackets the printed table does not list (with their
    basis expansion) and the grading of every basis element.
    """
    table, grading, relations = ALGEBRAS[algebra]
    elements = basis(algebra)
    report = Report(f"relations:{algebra}")
    for name, m in elements.items():
        bad = m.grading_violations()
        report.add(f"grading {name}", FAIL if bad else PASS,
                   parity="odd" if m.parity else "even")
    listed = set()
    for a, b, expected in relations:
        x, y = elements[a], elements[b]
        odd = bool(x.parity and y.parity)
        got = supercommutator(x, y)
        want = _combination(expected, elements, grading)
        coords = expand_in_basis(got, elements)
        label = _bracket_name(a, b, odd)
        listed.add(frozenset((a, b)))
        report.add(label, PASS if got == want else FAIL,
                   printed=_fmt({k: Fraction(v) for k, v in expected.items()}),
                   computed=_fmt(coords) if coords is not None else "outside span")
    names = list(elements)
    closed = True
    for i, a in enumerate(names):
        for b in names[i:]:
            x, y = elements[a], elements[b]
            got = supercommutator(x, y)
            coords = expand_in_basis(got, elements)
            if coords is None:
                closed = False
                report.add(f"closure {_bracket_name(a, b, bool(x.parity and y.parity))}", FAIL,
                           computed="outside span")
                continue
            if frozenset((a, b)) not in listed and coords:
                report.add(f"unlisted {_bracket_name(a, b, bool(x.parity and y.parity))}", INFO,
                           computed=_fmt(coords))
    report.summary["closed"] = closed
    report.summary["relations_checked"] = len(relations)
    return report


def graded_antisymmetry_failures(algebra: str) -> List[Tuple[str, str]]:
    el = basis(algebra)
    bad = []
    for a, x in el.items():
        for b, y in el.items():
            lhs = supercommutator(x, y)
            rhs = supercommutator(y, x)
            sign = -1 if (x.parity and y.parity) else 1
            # [X,Y} = -(-1)^{|X||Y|} [Y,X}
            if lhs != rhs.scale(DiffPoly.const(-sign)):
                bad.append((a, b))
    return bad


def graded_jacobi_failures(algebra: str) -> List[Tuple[str, str, str]]:
    """Triples violating ``[X,[Y,Z}} = [[X,Y},Z} + (-1)^{|X||Y|}[Y,[X,Z}}``."""
    el = basis(algebra)
    bad = []
    for a, x in el.items():
        for b, y in el.items():
            for c, z in el.items():
                lhs = supercommutator(x, supercommutator(y, z))
                sign = -1 if (x.parity and y.parity) else 1
                rhs = supercommutator(supercommutator(x, y), z) + \
                    supercommutator(y, supercommutator(x, z)).scale(DiffPoly.const(sign))
                if lhs != rhs:
                    bad.append((a, b, c))
    return bad
