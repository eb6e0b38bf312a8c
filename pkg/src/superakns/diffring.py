"""Differential polynomials in the jets of p, q, r, s (even) and alpha, beta (odd).

A :class:`DiffPoly` is a finite sum of terms ``c * mu^k * (even monomial) *
(odd word)`` with ``c`` an exact rational and ``mu`` a central even constant.
The module provides the total derivative, exact formal integration,
graded partial derivatives, the Euler operator, and the text / JSON / LaTeX
formats.
"""

from __future__ import annotations

import ast
import json
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from ._kernels import even_merge, mul_terms
from ._linalg import solve_sparse
from .grassmann import as_rational

FIELDS = ("p", "q", "r", "s", "alpha", "beta")
EVEN_FIELDS = ("p", "q", "r", "s")
ODD_FIELDS = ("alpha", "beta")
FIELD_INDEX = {f: i for i, f in enumerate(FIELDS)}
_ORDER_SPAN = 256  # jet code = field_index * _ORDER_SPAN + order

#: Grassmann partial-derivative side used by :func:`euler_variational` and
#: every other caller that does not pass ``side`` explicitly. ``"right"``
#: reproduces the printed supertrace gradients (see README).
SIDE = "right"

Key = Tuple[int, tuple, tuple]


class NotExact(ArithmeticError):
    """Raised when a formal antiderivative does not exist in the ring."""

    def __init__(self, integrand, context=None):
        self.integrand = integrand
        self.context = dict(context or {})
        where = ", ".join(f"{k}={v}" for k, v in self.context.items())
        msg = f"not a total derivative: {integrand}"
        if where:
            msg += f" [{where}]"
        super().__init__(msg)


def jet_code(field: str, order: int = 0) -> int:
    if order < 0 or order >= _ORDER_SPAN - 1:
        raise ValueError(f"jet order out of range: {order}")
    return FIELD_INDEX[field] * _ORDER_SPAN + order


def code_field(code: int) -> str:
    return FIELDS[code // _ORDER_SPAN]


def code_order(code: int) -> int:
    return code % _ORDER_SPAN


def code_is_odd(code: int) -> bool:
    return code // _ORDER_SPAN >= 4


@dataclass(frozen=True, order=True)
class JetVariable:
    """A field together with its number of x-derivatives."""

    field: str
    order: int = 0

    def __post_init__(self):
        if self.field not in FIELD_INDEX:
            raise ValueError(f"unknown field {self.field!r}")
        if self.order < 0:
            raise ValueError("negative jet order")

    @property
    def code(self) -> int:
        return jet_code(self.field, self.order)

    @property
    def is_odd(self) -> bool:
        return self.field in ODD_FIELDS

    @property
    def parity(self) -> str:
        return "odd" if self.is_odd else "even"

    @property
    def name(self) -> str:
        return jet_name(self.field, self.order)

    def derivative(self) -> "JetVariable":
        return JetVariable(self.field, self.order + 1)

    @classmethod
    def from_code(cls, code: int) -> "JetVariable":
        return cls(code_field(code), code_order(code))


def jet_name(field: str, order: int) -> str:
    return field + ("_" + "x" * order if order else "")


class DiffPoly:
    """Immutable differential polynomial in canonical form."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Optional[Mapping[Key, Fraction]] = None):
        if terms is None:
            self._terms = {}
        else:
            self._terms = {k: as_rational(v) for k, v in terms.items() if v}
        self._hash = None

    @classmethod
    def _raw(cls, terms: Dict[Key, Fraction]) -> "DiffPoly":
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._hash = None
        return obj

    # constructors ---------------------------------------------------
    @classmethod
    def zero(cls) -> "DiffPoly":
        return cls._raw({})

    @classmethod
    def const(cls, c) -> "DiffPoly":
        c = as_rational(c)
        return cls._raw({(0, (), ()): c} if c else {})

    @classmethod
    def one(cls) -> "DiffPoly":
        return cls.const(1)

    @classmethod
    def jet(cls, field: str, order: int = 0) -> "DiffPoly":
        code = jet_code(field, order)
        if field in ODD_FIELDS:
            key = (0, (), (code,))
        else:
            key = (0, ((code, 1),), ())
        return cls._raw({key: Fraction(1)})

    @classmethod
    def mu(cls, power: int = 1) -> "DiffPoly":
        return cls._raw({(power, (), ()): Fraction(1)})

    @classmethod
    def monomial(cls, key: Key, coeff=1) -> "DiffPoly":
        return cls._raw({key: as_rational(coeff)})

    # inspection -----------------------------------------------------
    @property
    def terms(self) -> List[Tuple[Key, Fraction]]:
        return sorted(self._terms.items(), key=lambda kv: _term_sort_key(kv[0]))

    def items(self):
        return self._terms.items()

    def keys(self):
        return self._terms.keys()

    def coefficient(self, key: Key) -> Fraction:
        return self._terms.get(key, Fraction(0))

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    @property
    def parity(self) -> str:
        """``"even"``, ``"odd"`` or ``"mixed"``; zero counts as even."""
        seen = {len(k[2]) & 1 for k in self._terms}
        if seen == {1}:
            return "odd"
        if len(seen) == 2:
            return "mixed"
        return "even"

    def has_parity(self, parity: str) -> bool:
        return not self._terms or self.parity == parity

    @property
    def mu_degree(self) -> int:
        return max((k[0] for k in self._terms), default=0)

    @property
    def is_constant(self) -> bool:
        return all(not k[1] and not k[2] for k in self._terms)

    def max_order(self, field: Optional[str] = None) -> int:
        """Highest jet order present (of ``field`` if given); -1 if none."""
        best = -1
        for _, ev, od in self._terms:
            for code, _ in ev:
                if field is None or code_field(code) == field:
                    best = max(best, code_order(code))
            for code in od:
                if field is None or code_field(code) == field:
                    best = max(best, code_order(code))
        return best

    def jets(self) -> set:
        out = set()
        for _, ev, od in self._terms:
            out.update(JetVariable.from_code(c) for c, _ in ev)
            out.update(JetVariable.from_code(c) for c in od)
        return out

    # arithmetic -----------------------------------------------------
    def __add__(self, other) -> "DiffPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if not other._terms:
            return self
        if not self._terms:
            return other
        acc = dict(self._terms)
        for k, v in other._terms.items():
            nv = acc.get(k, 0) + v
            if nv:
                acc[k] = nv
            else:
                acc.pop(k, None)
        return DiffPoly._raw(acc)

    __radd__ = __add__

    def __neg__(self) -> "DiffPoly":
        return DiffPoly._raw({k: -v for k, v in self._terms.items()})

    def __sub__(self, other) -> "DiffPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "DiffPoly":
        return (-self) + other

    def scale(self, c) -> "DiffPoly":
        c = as_rational(c)
        if not c:
            return DiffPoly.zero()
        return DiffPoly._raw({k: v * c for k, v in self._terms.items()})

    def __mul__(self, other) -> "DiffPoly":
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.scale(other)
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if not self._terms or not other._terms:
            return DiffPoly.zero()
        return DiffPoly._raw(mul_terms(list(self._terms.items()),
                                       list(other._terms.items())))

    def __rmul__(self, other) -> "DiffPoly":
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.scale(other)
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other * self

    def __truediv__(self, other) -> "DiffPoly":
        if isinstance(other, DiffPoly):
            if not other.is_constant or other.mu_degree or len(other) != 1:
                raise ZeroDivisionError("division by a non-constant polynomial")
            other = other.coefficient((0, (), ()))
        return self.scale(1 / as_rational(other))

    def __pow__(self, n: int) -> "DiffPoly":
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers")
        out = DiffPoly.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, DiffPoly):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self._terms == DiffPoly.const(other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __repr__(self) -> str:
        return f"DiffPoly({to_text(self)!r})"

    def __str__(self) -> str:
        return to_text(self)

    # mu handling ----------------------------------------------------
    def subs_mu(self, value) -> "DiffPoly":
        """Replace the symbolic constant mu by a rational value."""
        value = as_rational(value)
        acc: Dict[Key, Fraction] = {}
        for (mu, ev, od), c in self._terms.items():
            k = (0, ev, od)
            nv = acc.get(k, 0) + c * value ** mu
            if nv:
                acc[k] = nv
            else:
                acc.pop(k, None)
        return DiffPoly._raw(acc)

    def mu_part(self, power: int) -> "DiffPoly":
        """Coefficient of mu**power (with mu stripped)."""
        return DiffPoly._raw({(0, ev, od): c for (mu, ev, od), c in self._terms.items()
                              if mu == power})


def _coerce(x):
    if isinstance(x, DiffPoly):
        return x
    if isinstance(x, (int, Fraction)) and not isinstance(x, bool):
        return DiffPoly.const(x)
    return NotImplemented


def _term_sort_key(key: Key):
    mu, ev, od = key
    degree = sum(e for _, e in ev) + len(od)
    weight = sum(code_order(c) * e for c, e in ev) + sum(code_order(c) for c in od)
    return (mu, degree, weight, ev, od)


def as_poly(x) -> DiffPoly:
    out = _coerce(x)
    if out is NotImplemented:
        raise TypeError(f"cannot convert {x!r} to DiffPoly")
    return out


# --------------------------------------------------------------------------
# module-level operations

def add(f: DiffPoly, g: DiffPoly) -> DiffPoly:
    return as_poly(f) + as_poly(g)


def mul(f: DiffPoly, g: DiffPoly) -> DiffPoly:
    return as_poly(f) * as_poly(g)


def _d_key(key: Key) -> Dict[Key, int]:
    """Total derivative of one monomial (coefficient 1).

    Raising an odd factor's order never moves it past another factor:
    codes are consecutive within a field, so the only possible obstruction
    is a collision, which annihilates the term.
    """
    mu, ev, od = key
    out: Dict[Key, int] = {}
    for i, (code, e) in enumerate(ev):
        rest = ev[:i] + (((code, e - 1),) if e > 1 else ()) + ev[i + 1:]
        nev = even_merge(rest, ((code + 1, 1),))
        k = (mu, nev, od)
        out[k] = out.get(k, 0) + e
    for i, code in enumerate(od):
        if i + 1 < len(od) and od[i + 1] == code + 1:
            continue
        nod = od[:i] + (code + 1,) + od[i + 1:]
        k = (mu, ev, nod)
        out[k] = out.get(k, 0) + 1
    return out


def d_total(f: DiffPoly, times: int = 1) -> DiffPoly:
    """Total x-derivative, applied ``times`` times."""
    f = as_poly(f)
    for _ in range(times):
        acc: Dict[Key, Fraction] = {}
        for key, c in f.items():
            for k, m in _d_key(key).items():
                nv = acc.get(k, 0) + c * m
                if nv:
                    acc[k] = nv
                else:
                    acc.pop(k, None)
        f = DiffPoly._raw(acc)
    return f


def _lower_key(key: Key) -> List[Key]:
    """Monomials whose total derivative can contain ``key``."""
    mu, ev, od = key
    out = []
    for i, (code, e) in enumerate(ev):
        if code_order(code) == 0:
            continue
        rest = ev[:i] + (((code, e - 1),) if e > 1 else ()) + ev[i + 1:]
        out.append((mu, even_merge(rest, ((code - 1, 1),)), od))
    for i, code in enumerate(od):
        if code_order(code) == 0:
            continue
        if i > 0 and od[i - 1] == code - 1:
            continue
        out.append((mu, ev, od[:i] + (code - 1,) + od[i + 1:]))
    return out


def _component(key: Key):
    mu, ev, od = key
    sig = []
    weight = 0
    for code, e in ev:
        sig.extend([code // _ORDER_SPAN] * e)
        weight += code_order(code) * e
    for code in od:
        sig.append(code // _ORDER_SPAN)
        weight += code_order(code)
    return mu, tuple(sorted(sig)), weight


@lru_cache(maxsize=8192)
def _integrate_cached(f: DiffPoly) -> Optional[DiffPoly]:
    groups: Dict[tuple, Dict[Key, Fraction]] = {}
    for key, c in f.items():
        groups.setdefault(_component(key), {})[key] = c
    result: Dict[Key, Fraction] = {}
    for comp, target in groups.items():
        if comp[2] == 0:
            return None  # no derivatives at all: x-dependent antiderivative
        sol = _integrate_component(target)
        if sol is None:
            return None
        result.update(sol)
    return DiffPoly._raw(result)


def _integrate_component(target: Dict[Key, Fraction]) -> Optional[Dict[Key, Fraction]]:
    # close the candidate set: every monomial produced by differentiating a
    # candidate must itself be matched, which may call for more candidates
    candidates = set()
    frontier = set(target)
    seen_rows = set(target)
    derivs: Dict[Key, Dict[Key, int]] = {}
    while frontier:
        new_cands = set()
        for m in frontier:
            for c in _lower_key(m):
                if c not in candidates:
                    new_cands.add(c)
        candidates |= new_cands
        frontier = set()
        for c in new_cands:
            dc = _d_key(c)
            derivs[c] = dc
            for m in dc:
                if m not in seen_rows:
                    seen_rows.add(m)
                    frontier.add(m)
    rows_index: Dict[Key, Dict[Key, Fraction]] = {m: {} for m in seen_rows}
    for c, dc in derivs.items():
        for m, v in dc.items():
            rows_index[m][c] = Fraction(v)
    rows = []
    rhs = []
    for m, row in rows_index.items():
        rows.append(row)
        rhs.append(target.get(m, Fraction(0)))
    sol = solve_sparse(rows, rhs)
    if sol is None:
        return None
    return {k: v for k, v in sol.items() if v}


def integrate_exact(f: DiffPoly, **context) -> DiffPoly:
    """The constant-free ``G`` with ``d_total(G) == f``.

    Raises :class:`NotExact` when no differential-polynomial antiderivative
    exists. ``context`` entries are attached to the exception.
    """
    f = as_poly(f)
    if f.is_zero:
        return f
    out = _integrate_cached(f)
    if out is None:
        raise NotExact(f, context)
    return out


def is_exact(f: DiffPoly) -> bool:
    f = as_poly(f)
    return f.is_zero or _integrate_cached(f) is not None


def partial(f: DiffPoly, v: JetVariable, side: Optional[str] = None) -> DiffPoly:
    """Graded partial derivative with respect to one jet variable.

    For odd ``v`` the factor is first moved to the left end (``side="left"``)
    or right end (``side="right"``) of each odd word, then removed.
    """
    side = side or SIDE
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', not {side!r}")
    f = as_poly(f)
    code = v.code
    acc: Dict[Key, Fraction] = {}
    if v.is_odd:
        for (mu, ev, od), c in f.items():
            if code not in od:
                continue
            i = od.index(code)
            moves = i if side == "left" else len(od) - 1 - i
            k = (mu, ev, od[:i] + od[i + 1:])
            acc[k] = acc.get(k, 0) + (-c if moves & 1 else c)
    else:
        for (mu, ev, od), c in f.items():
            for i, (cd, e) in enumerate(ev):
                if cd != code:
                    continue
                nev = ev[:i] + (((cd, e - 1),) if e > 1 else ()) + ev[i + 1:]
                k = (mu, nev, od)
                acc[k] = acc.get(k, 0) + c * e
    return DiffPoly({k: v for k, v in acc.items() if v})


def euler_variational(f: DiffPoly, field: str, side: Optional[str] = None) -> DiffPoly:
    """Variational derivative ``sum_k (-D)^k  df/d(field_k)``."""
    f = as_poly(f)
    out = DiffPoly.zero()
    top = f.max_order(field)
    for k in range(top + 1):
        term = d_total(partial(f, JetVariable(field, k), side), k)
        out = out + (term if k % 2 == 0 else -term)
    return out


def variational_gradient(f: DiffPoly, fields: Iterable[str] = ("p", "q", "alpha", "beta", "r", "s"),
                         side: Optional[str] = None) -> List[DiffPoly]:
    return [euler_variational(f, u, side) for u in fields]


def evolve(f: DiffPoly, rates: Mapping[str, DiffPoly]) -> DiffPoly:
    """Time derivative of ``f`` when each field evolves at the given rate.

    Every jet ``u_k`` of ``f`` is replaced in place by ``D^k rates[u]``
    (product rule, even derivation). Fields missing from ``rates`` are
    treated as constant in time.
    """
    f = as_poly(f)
    cache: Dict[int, DiffPoly] = {}

    def rate(code):
        if code not in cache:
            field = code_field(code)
            base = rates.get(field)
            cache[code] = d_total(base, code_order(code)) if base is not None else DiffPoly.zero()
        return cache[code]

    out = DiffPoly.zero()
    for (mu, ev, od), c in f.items():
        for i, (code, e) in enumerate(ev):
            r = rate(code)
            if not r:
                continue
            nev = ev[:i] + (((code, e - 1),) if e > 1 else ()) + ev[i + 1:]
            out = out + DiffPoly.monomial((mu, nev, od), c * e) * r
        for i, code in enumerate(od):
            r = rate(code)
            if not r:
                continue
            left = DiffPoly.monomial((mu, ev, od[:i]), c)
            right = DiffPoly.monomial((0, (), od[i + 1:]))
            out = out + left * r * right
    return out


# --------------------------------------------------------------------------
# formats

_GREEK = {"alpha": r"\alpha", "beta": r"\beta"}


def _coeff_text(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _factor_texts(key: Key) -> List[str]:
    mu, ev, od = key
    out = []
    if mu:
        out.append("mu" if mu == 1 else f"mu^{mu}")
    for code, e in ev:
        name = jet_name(code_field(code), code_order(code))
        out.append(name if e == 1 else f"{name}^{e}")
    for code in od:
        out.append(jet_name(code_field(code), code_order(code)))
    return out


def to_text(f: DiffPoly) -> str:
    """Deterministic text form, parseable by :func:`parse`."""
    if f.is_zero:
        return "0"
    parts = []
    for key, c in f.terms:
        factors = _factor_texts(key)
        mag = abs(c)
        if factors:
            body = "*".join(factors)
            body = body if mag == 1 else f"{_coeff_text(mag)}*{body}"
        else:
            body = _coeff_text(mag)
        if not parts:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append((" - " if c < 0 else " + ") + body)
    return "".join(parts)


def to_json_obj(f: DiffPoly) -> dict:
    terms = []
    for (mu, ev, od), c in f.terms:
        terms.append({
            "coeff": _coeff_text(c),
            "mu": mu,
            "even": [[code_field(code), code_order(code), e] for code, e in ev],
            "odd": [[code_field(code), code_order(code)] for code in od],
        })
    return {"terms": terms}


def to_json(f: DiffPoly) -> str:
    return json.dumps(to_json_obj(f), separators=(",", ":"))


def from_json_obj(obj: dict) -> DiffPoly:
    out = DiffPoly.zero()
    for t in obj["terms"]:
        even = DiffPoly.one()
        for field, order, e in t["even"]:
            if field not in EVEN_FIELDS:
                raise ValueError(f"{field!r} is not an even field")
            even = even * DiffPoly.jet(field, order) ** e
        odd = DiffPoly.one()
        for field, order in t["odd"]:
            if field not in ODD_FIELDS:
                raise ValueError(f"{field!r} is not an odd field")
            odd = odd * DiffPoly.jet(field, order)
        out = out + (DiffPoly.mu(t["mu"]) * even * odd).scale(Fraction(t["coeff"]))
    return out


def from_json(text: str) -> DiffPoly:
    return from_json_obj(json.loads(text))


def _latex_jet(code: int) -> str:
    field, order = code_field(code), code_order(code)
    base = _GREEK.get(field, field)
    return f"{base}_{{{'x' * order}}}" if order else base


_CONTROL_WORD_END = re.compile(r"\\[A-Za-z]+$")


def to_latex(f: DiffPoly) -> str:
    """LaTeX in the usual subscript-x notation."""
    if f.is_zero:
        return "0"
    parts = []
    for (mu, ev, od), c in f.terms:
        factors = []
        if mu:
            factors.append(r"\mu" if mu == 1 else rf"\mu^{{{mu}}}")
        for code, e in ev:
            j = _latex_jet(code)
            factors.append(j if e == 1 else f"{j}^{{{e}}}")
        factors.extend(_latex_jet(code) for code in od)
        mag = abs(c)
        if mag.denominator == 1:
            num = "" if (mag == 1 and factors) else str(mag.numerator)
        else:
            num = rf"\frac{{{mag.numerator}}}{{{mag.denominator}}}"
        body = num
        for fac in factors:
            # a control word swallows a following letter, so separate them
            body += (" " if _CONTROL_WORD_END.search(body) else "") + fac
        sign = "-" if c < 0 else ("+" if parts else "")
        parts.append(sign + body)
    return "".join(parts)


# --------------------------------------------------------------------------
# parsing

def _parse_name(name: str) -> Optional[DiffPoly]:
    if name == "mu":
        return DiffPoly.mu()
    base, _, suffix = name.partition("_")
    if base in FIELD_INDEX:
        if suffix and set(suffix) != {"x"}:
            return None
        return DiffPoly.jet(base, len(suffix))
    return None


def parse(text: str, names: Optional[Mapping[str, DiffPoly]] = None) -> DiffPoly:
    """Parse an expression such as ``"-1/2*(p*q + 2*alpha*beta) + mu*p_xx"``.

    Jets are written ``p``, ``p_x``, ``p_xx``, ...; ``mu`` is the symbolic
    constant; ``^`` and ``**`` both denote powers. ``names`` supplies extra
    symbols (for instance an abbreviation and its derivatives). Products
    keep their written order, which matters for odd factors.
    """
    extra = dict(names or {})
    tree = ast.parse(text.replace("^", "**"), mode="eval")
    return _eval_node(tree.body, extra)


def _eval_node(node, extra) -> DiffPoly:
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, int):
            raise ValueError(f"only integer literals are allowed, got {node.value!r}")
        return DiffPoly.const(node.value)
    if isinstance(node, ast.Name):
        if node.id in extra:
            return as_poly(extra[node.id])
        val = _parse_name(node.id)
        if val is None:
            raise ValueError(f"unknown symbol {node.id!r}")
        return val
    if isinstance(node, ast.UnaryOp):
        val = _eval_node(node.operand, extra)
        if isinstance(node.op, ast.USub):
            return -val
        if isinstance(node.op, ast.UAdd):
            return val
    if isinstance(node, ast.BinOp):
        left = _eval_node(node.left, extra)
        if isinstance(node.op, ast.Pow):
            if not isinstance(node.right, ast.Constant) or not isinstance(node.right.value, int):
                raise ValueError("exponent must be an integer literal")
            return left ** node.right.value
        right = _eval_node(node.right, extra)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            return left / right
    raise ValueError(f"unsupported syntax: {ast.dump(node)}")


def var(name: str) -> DiffPoly:
    """Shorthand: ``var("alpha_x")``."""
    val = _parse_name(name)
    if val is None:
        raise ValueError(f"unknown symbol {name!r}")
    return val
