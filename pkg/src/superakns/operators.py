"""Integro-differential operators with coefficients in the DiffPoly ring.

An :class:`Operator` is kept in the normal form

    sum_k c_k D^k  +  sum_w s_w  m0 Dinv m1 Dinv ... Dinv mk

where ``c_k`` are differential polynomials, each ``m_i`` is a monomial with
unit coefficient and ``s_w`` is a scalar in Q[mu]. ``D`` is the total
derivative and ``Dinv`` the constant-free antiderivative, so rewriting uses
``D Dinv = 1``, ``Dinv D = 1`` on constant-free arguments and integration by
parts ``Dinv f D = f - Dinv f_x``.

Application groups every word sharing a prefix before integrating, so a sum
of individually non-exact integrands is integrated once as a whole.
"""

from __future__ import annotations

import ast
from collections import defaultdict
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .diffring import _CONTROL_WORD_END, DiffPoly, as_poly, d_total, integrate_exact, to_text, to_latex

UNIT = (0, (), ())  # the monomial 1

Word = Tuple[tuple, ...]


def _split_monomials(f: DiffPoly):
    """Yield ``(unit monomial key, scalar)`` with the mu power in the scalar."""
    for (mu, ev, od), c in f.items():
        yield (0, ev, od), DiffPoly.monomial((mu, (), ()), c)


def _mono(key) -> DiffPoly:
    return DiffPoly.monomial(key, 1)


class Operator:
    """A scalar integro-differential operator in normal form."""

    __slots__ = ("local", "words")

    def __init__(self, local: Optional[Dict[int, DiffPoly]] = None,
                 words: Optional[Dict[Word, DiffPoly]] = None):
        self.local = {k: v for k, v in (local or {}).items() if v}
        self.words = {w: s for w, s in (words or {}).items() if s}

    # constructors ---------------------------------------------------
    @classmethod
    def zero(cls) -> "Operator":
        return cls()

    @classmethod
    def mult(cls, f) -> "Operator":
        return cls({0: as_poly(f)})

    @classmethod
    def identity(cls) -> "Operator":
        return cls.mult(1)

    @classmethod
    def D(cls, k: int = 1) -> "Operator":
        return cls({k: DiffPoly.one()})

    @classmethod
    def Dinv(cls) -> "Operator":
        return cls(words={(UNIT, UNIT): DiffPoly.one()})

    @classmethod
    def nonlocal_atom(cls, left, right) -> "Operator":
        """``left o Dinv o right``."""
        return Operator.mult(left).compose(Operator.Dinv()).compose(Operator.mult(right))

    # inspection -----------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return not self.local and not self.words

    @property
    def is_local(self) -> bool:
        return not self.words

    def __bool__(self):
        return not self.is_zero

    def __eq__(self, other) -> bool:
        if not isinstance(other, Operator):
            return NotImplemented
        return self.local == other.local and self.words == other.words

    def __hash__(self):
        return hash((frozenset(self.local.items()), frozenset(self.words.items())))

    def depth(self) -> int:
        return max((len(w) - 1 for w in self.words), default=0)

    # linear structure -----------------------------------------------
    def __add__(self, other) -> "Operator":
        other = _as_op(other)
        local = dict(self.local)
        for k, v in other.local.items():
            local[k] = local[k] + v if k in local else v
        words = dict(self.words)
        for w, s in other.words.items():
            words[w] = words[w] + s if w in words else s
        return Operator(local, words)

    __radd__ = __add__

    def __neg__(self) -> "Operator":
        return Operator({k: -v for k, v in self.local.items()},
                        {w: -s for w, s in self.words.items()})

    def __sub__(self, other) -> "Operator":
        return self + (-_as_op(other))

    def __rsub__(self, other) -> "Operator":
        return _as_op(other) - self

    def __mul__(self, other) -> "Operator":
        return self.compose(_as_op(other))

    def __rmul__(self, other) -> "Operator":
        return _as_op(other).compose(self)

    # composition ----------------------------------------------------
    def lmul(self, f: DiffPoly) -> "Operator":
        """``f o self``."""
        f = as_poly(f)
        if not f:
            return Operator()
        local = {k: f * v for k, v in self.local.items()}
        words: Dict[Word, DiffPoly] = {}
        for w, s in self.words.items():
            for key, scal in _split_monomials(f * _mono(w[0])):
                nw = (key,) + w[1:]
                words[nw] = words[nw] + scal * s if nw in words else scal * s
        return Operator(local, words)

    def dleft(self) -> "Operator":
        """``D o self``."""
        out = Operator()
        local: Dict[int, DiffPoly] = {}
        for k, c in self.local.items():
            dc = d_total(c)
            if dc:
                local[k] = local[k] + dc if k in local else dc
            local[k + 1] = local[k + 1] + c if k + 1 in local else c
        out = out + Operator(local)
        for w, s in self.words.items():
            m0 = w[0]
            # D o m0 Dinv R  =  (m0)_x Dinv R  +  m0 o R
            dm0 = d_total(_mono(m0))
            for key, scal in _split_monomials(dm0):
                out = out + Operator(words={(key,) + w[1:]: scal * s})
            rest = _word_operator(w[1:])
            out = out + rest.lmul(_mono(m0)).scaled(s)
        return out

    def dinv_left(self) -> "Operator":
        """``Dinv o self``."""
        out = Operator()
        for k, c in self.local.items():
            out = out + _dinv_local(c, k)
        words = {}
        for w, s in self.words.items():
            nw = (UNIT,) + w
            words[nw] = words[nw] + s if nw in words else s
        return out + Operator(words=words)

    def scaled(self, s) -> "Operator":
        s = as_poly(s)
        return Operator({k: s * v for k, v in self.local.items()},
                        {w: s * v for w, v in self.words.items()})

    def compose(self, other: "Operator") -> "Operator":
        """``self o other``."""
        other = _as_op(other)
        out = Operator()
        for k, c in self.local.items():
            x = other
            for _ in range(k):
                x = x.dleft()
            out = out + x.lmul(c)
        for w, s in self.words.items():
            x = other
            for m in reversed(w[1:]):
                x = x.lmul(_mono(m)).dinv_left()
            out = out + x.lmul(_mono(w[0])).scaled(s)
        return out

    # application ----------------------------------------------------
    def apply(self, v: DiffPoly, **context) -> DiffPoly:
        return apply_sum([(self, as_poly(v))], **context)

    # formatting -----------------------------------------------------
    def to_text(self) -> str:
        parts = []
        for k in sorted(self.local):
            c = self.local[k]
            d = "" if k == 0 else ("D" if k == 1 else f"D^{k}")
            parts.append(f"({to_text(c)})" + (f"*{d}" if d else ""))
        for w in sorted(self.words, key=repr):
            s = self.words[w]
            chain = "*Dinv*".join(to_text(_mono(m)) for m in w)
            parts.append(f"({to_text(s)})*{chain}")
        return " + ".join(parts) if parts else "0"

    def to_latex(self) -> str:
        def coeff(c: DiffPoly) -> str:
            if c == DiffPoly.one():
                return ""
            if c == -DiffPoly.one():
                return "-"
            return f"({to_latex(c)})" if len(c) > 1 else to_latex(c)

        parts = []
        for k in sorted(self.local):
            c = self.local[k]
            if k == 0:
                parts.append(to_latex(c) if len(c) == 1 else f"({to_latex(c)})")
            else:
                d = r"\partial" if k == 1 else rf"\partial^{{{k}}}"
                parts.append(_latex_join(coeff(c), d))
        for w in sorted(self.words, key=repr):
            chain = r"\partial^{-1}".join(to_latex(_mono(m)) if m != UNIT else "" for m in w)
            parts.append(_latex_join(coeff(self.words[w]), chain))
        return "+".join(parts).replace("+-", "-") if parts else "0"

    def __repr__(self):
        return f"Operator({self.to_text()})"


def _latex_join(a: str, b: str) -> str:
    if b[:1].isalpha() and _CONTROL_WORD_END.search(a):
        return a + " " + b
    return a + b


def _as_op(x) -> Operator:
    if isinstance(x, Operator):
        return x
    return Operator.mult(as_poly(x))


def _word_operator(tail: Word) -> Operator:
    """Operator for ``m1 Dinv m2 ... Dinv mk`` (a tail of a word)."""
    if len(tail) == 1:
        return Operator.mult(_mono(tail[0]))
    return Operator(words={tail: DiffPoly.one()})


def _dinv_local(c: DiffPoly, k: int) -> Operator:
    """``Dinv o c D^k`` by repeated integration by parts."""
    if k == 0:
        words = {}
        for key, scal in _split_monomials(c):
            w = (UNIT, key)
            words[w] = words[w] + scal if w in words else scal
        return Operator(words=words)
    return Operator({k - 1: c}) - _dinv_local(d_total(c), k - 1)


def apply_sum(pairs: Sequence[Tuple[Operator, DiffPoly]], **context) -> DiffPoly:
    """Evaluate ``sum_j A_j(v_j)``, integrating shared prefixes jointly."""
    out = DiffPoly.zero()
    word_pairs = []
    for op, v in pairs:
        if not v:
            continue
        for k, c in op.local.items():
            out = out + c * d_total(v, k)
        for w, s in op.words.items():
            word_pairs.append((w, s * v))
    if word_pairs:
        out = out + _eval_words(word_pairs, context)
    return out


def _eval_words(pairs, context) -> DiffPoly:
    groups = defaultdict(list)
    for w, a in pairs:
        groups[w[0]].append((w[1:], a))
    out = DiffPoly.zero()
    for m0, inner in groups.items():
        integrand = _eval_tail(inner, context)
        if not integrand:
            continue
        out = out + _mono(m0) * integrate_exact(integrand, **context)
    return out


def _eval_tail(pairs, context) -> DiffPoly:
    total = DiffPoly.zero()
    deeper = []
    for w, a in pairs:
        if len(w) == 1:
            total = total + _mono(w[0]) * a
        else:
            deeper.append((w, a))
    if deeper:
        total = total + _eval_words(deeper, context)
    return total


class NonlocalOperator:
    """Matrix of :class:`Operator` entries acting on vectors of DiffPoly."""

    def __init__(self, rows: Sequence[Sequence]):
        self.rows = [[_as_op(x) for x in row] for row in rows]
        n = len(self.rows[0]) if self.rows else 0
        if any(len(r) != n for r in self.rows):
            raise ValueError("ragged operator matrix")

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.rows), len(self.rows[0]) if self.rows else 0

    def __getitem__(self, ij) -> Operator:
        i, j = ij
        return self.rows[i][j]

    @classmethod
    def identity(cls, n: int) -> "NonlocalOperator":
        return cls([[Operator.identity() if i == j else Operator() for j in range(n)] for i in range(n)])

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence]) -> "NonlocalOperator":
        """Assemble from a grid of 2x2 blocks (``0`` allowed for a zero block)."""
        rows = []
        for brow in blocks:
            sub = [[], []]
            for b in brow:
                if isinstance(b, (int,)) and b == 0:
                    b = [[Operator(), Operator()], [Operator(), Operator()]]
                elif isinstance(b, NonlocalOperator):
                    b = b.rows
                for r in range(2):
                    sub[r].extend(b[r])
            rows.extend(sub)
        return cls(rows)

    def apply(self, v: Sequence[DiffPoly], **context) -> List[DiffPoly]:
        """Apply to a vector; each row is evaluated with joint integration."""
        if len(v) != self.shape[1]:
            raise ValueError("vector length does not match operator")
        out = []
        for i, row in enumerate(self.rows):
            out.append(apply_sum(list(zip(row, [as_poly(x) for x in v])), row=i, **context))
        return out

    def compose(self, other: "NonlocalOperator") -> "NonlocalOperator":
        n, m = self.shape
        m2, k = other.shape
        if m != m2:
            raise ValueError("shape mismatch")
        rows = []
        for i in range(n):
            row = []
            for j in range(k):
                acc = Operator()
                for t in range(m):
                    a, b = self.rows[i][t], other.rows[t][j]
                    if a and b:
                        acc = acc + a.compose(b)
                row.append(acc)
            rows.append(row)
        return NonlocalOperator(rows)

    __matmul__ = compose

    def __add__(self, other: "NonlocalOperator") -> "NonlocalOperator":
        return NonlocalOperator([[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)])

    def __sub__(self, other: "NonlocalOperator") -> "NonlocalOperator":
        return NonlocalOperator([[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)])

    def __neg__(self):
        return NonlocalOperator([[-a for a in r] for r in self.rows])

    def __eq__(self, other):
        if not isinstance(other, NonlocalOperator):
            return NotImplemented
        return self.rows == other.rows

    def map(self, fn) -> "NonlocalOperator":
        return NonlocalOperator([[fn(a) for a in r] for r in self.rows])

    def subs_mu(self, value) -> "NonlocalOperator":
        return self.map(lambda op: subs_mu(op, value))

    def to_text(self) -> str:
        return "\n".join(f"[{i + 1},{j + 1}] {op.to_text()}"
                         for i, r in enumerate(self.rows) for j, op in enumerate(r) if op)


def subs_mu(op: Operator, value) -> Operator:
    return Operator({k: v.subs_mu(value) for k, v in op.local.items()},
                    {w: s.subs_mu(value) for w, s in op.words.items()})


# --------------------------------------------------------------------------
# parsing: "q*Dinv*p - 1/2*D - h"

def parse_operator(text: str, names: Optional[Mapping[str, object]] = None) -> Operator:
    """Parse an operator expression.

    ``D`` and ``Dinv`` are the derivative and antiderivative; products are
    compositions read left to right; any DiffPoly expression acts by
    multiplication. ``names`` may bind symbols to DiffPoly or Operator.
    """
    extra = dict(names or {})
    tree = ast.parse(text.replace("^", "**"), mode="eval")
    return _as_op(_eval(tree.body, extra))


def _eval(node, extra):
    from .diffring import _parse_name
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, int):
            raise ValueError(f"only integer literals are allowed, got {node.value!r}")
        return DiffPoly.const(node.value)
    if isinstance(node, ast.Name):
        if node.id in extra:
            return extra[node.id]
        if node.id == "D":
            return Operator.D()
        if node.id == "Dinv":
            return Operator.Dinv()
        val = _parse_name(node.id)
        if val is None:
            raise ValueError(f"unknown symbol {node.id!r}")
        return val
    if isinstance(node, ast.UnaryOp):
        val = _eval(node.operand, extra)
        if isinstance(node.op, ast.USub):
            return -val
        if isinstance(node.op, ast.UAdd):
            return val
    if isinstance(node, ast.BinOp):
        left = _eval(node.left, extra)
        if isinstance(node.op, ast.Pow):
            if not isinstance(left, DiffPoly):
                raise ValueError("powers of operators are not supported")
            return left ** node.right.value
        right = _eval(node.right, extra)
        both_poly = isinstance(left, DiffPoly) and isinstance(right, DiffPoly)
        if isinstance(node.op, ast.Add):
            return left + right if both_poly else _as_op(left) + _as_op(right)
        if isinstance(node.op, ast.Sub):
            return left - right if both_poly else _as_op(left) - _as_op(right)
        if isinstance(node.op, ast.Mult):
            return left * right if both_poly else _as_op(left).compose(_as_op(right))
        if isinstance(node.op, ast.Div):
            if not isinstance(right, DiffPoly):
                raise ValueError("can only divide by a number")
            if isinstance(left, DiffPoly):
                return left / right
            return _as_op(left).scaled(DiffPoly.const(1) / right)
    raise ValueError(f"unsupported syntax: {ast.dump(node)}")
