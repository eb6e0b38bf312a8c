"""Spectral matrices, the coefficient recursion, flows and zero curvature."""

from __future__ import annotations

import threading
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .diffring import DiffPoly, d_total, evolve, integrate_exact, parse, var
from .operators import NonlocalOperator, parse_operator
from .report import FAIL, PASS, Report
from .superlie import GRADING_41, LaurentPoly, SuperMatrix, supercommutator

MuMode = Union[str, Fraction]

#: component order of the flow vector u
U_FIELDS = ("p", "q", "alpha", "beta", "r", "s")
#: component order of the recursion vector
VECTOR_ORDER = ("c", "b", "delta", "rho", "g", "f")


def normalize_mu(mu) -> MuMode:
    """``"symbolic"`` or an exact rational value for the constant mu."""
    if mu is None or (isinstance(mu, str) and mu.strip().lower() == "symbolic"):
        return "symbolic"
    if isinstance(mu, bool) or isinstance(mu, float):
        raise ValueError(f"mu must be 'symbolic' or an exact rational, got {mu!r}")
    try:
        return Fraction(mu)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ValueError(f"mu must be 'symbolic' or an exact rational, got {mu!r}") from None


def mu_poly(mu) -> DiffPoly:
    mu = normalize_mu(mu)
    return DiffPoly.mu() if mu == "symbolic" else DiffPoly.const(mu)


def h_core() -> DiffPoly:
    """``ps + qr + rs - 2 alpha beta`` (h without its mu factor)."""
    return parse("p*s + q*r + r*s - 2*alpha*beta")


def h_poly(mu="symbolic") -> DiffPoly:
    return mu_poly(mu) * h_core()


def _names(mu) -> Dict[str, DiffPoly]:
    return {"h": h_poly(mu), "mu": mu_poly(mu)}


def build_M(mu="symbolic") -> SuperMatrix:
    """The spatial spectral matrix, grading 4|1."""
    lam = LaurentPoly.lam()
    h = h_poly(mu)
    p, q, r, s, al, be = (var(n) for n in ("p", "q", "r", "s", "alpha", "beta"))
    rows = [
        [lam + h, p, 0, r, al],
        [q, -lam - h, s, 0, be],
        [0, 0, lam + h, p + r, 0],
        [0, 0, q + s, -lam - h, 0],
        [be, -al, -be, al, 0],
    ]
    return SuperMatrix(rows, GRADING_41).check_grading()


@dataclass(frozen=True)
class HierarchyLevel:
    m: int
    a: DiffPoly
    b: DiffPoly
    c: DiffPoly
    e: DiffPoly
    f: DiffPoly
    g: DiffPoly
    rho: DiffPoly
    delta: DiffPoly

    def vector(self) -> List[DiffPoly]:
        """``(c, b, delta, rho, g, f)``, the order the recursion operator uses."""
        return [getattr(self, k) for k in VECTOR_ORDER]

    def as_dict(self) -> Dict[str, DiffPoly]:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "m"}

    def block(self) -> SuperMatrix:
        """The λ-free 5x5 coefficient matrix of this level."""
        a, b, c, e, f, g, rho, de = (self.a, self.b, self.c, self.e, self.f, self.g,
                                     self.rho, self.delta)
        rows = [
            [a, b, e, f, rho],
            [c, -a, g, -e, de],
            [0, 0, a + e, b + f, 0],
            [0, 0, c + g, -a - e, 0],
            [de, -rho, -de, rho, 0],
        ]
        return SuperMatrix(rows, GRADING_41)


def a_derivative(level: HierarchyLevel) -> DiffPoly:
    p, q, al, be = var("p"), var("q"), var("alpha"), var("beta")
    return p * level.c - q * level.b + al * level.delta + be * level.rho


def e_derivative(level: HierarchyLevel) -> DiffPoly:
    p, q, r, s, al, be = (var(n) for n in ("p", "q", "r", "s", "alpha", "beta"))
    return (r * level.c - s * level.b + (p + r) * level.g - (q + s) * level.f
            - al * level.delta - be * level.rho)


def level_zero() -> HierarchyLevel:
    one, zero = DiffPoly.one(), DiffPoly.zero()
    return HierarchyLevel(0, one, zero, zero, one, zero, zero, zero, zero)


def next_level(prev: HierarchyLevel, mu="symbolic") -> HierarchyLevel:
    """One step of the recursion; ``a`` and ``e`` by exact integration."""
    p, q, r, s, al, be = (var(n) for n in ("p", "q", "r", "s", "alpha", "beta"))
    h = h_poly(mu)
    a, b, c, e, f, g, rho, de = (prev.a, prev.b, prev.c, prev.e, prev.f, prev.g,
                                 prev.rho, prev.delta)
    half = Fraction(1, 2)
    b1 = d_total(b).scale(half) + p * a + al * rho - h * b
    c1 = -d_total(c).scale(half) + q * a + be * de - h * c
    f1 = d_total(f).scale(half) + r * a + (p + r) * e - al * rho - h * f
    g1 = -d_total(g).scale(half) + s * a + (q + s) * e - be * de - h * g
    rho1 = d_total(rho) + al * a + be * b - p * de - h * rho
    de1 = -d_total(de) + be * a - al * c + q * rho - h * de
    m = prev.m + 1
    partial_level = HierarchyLevel(m, DiffPoly.zero(), b1, c1, DiffPoly.zero(), f1, g1, rho1, de1)
    a1 = integrate_exact(a_derivative(partial_level), level=m, quantity="a")
    e1 = integrate_exact(e_derivative(partial_level), level=m, quantity="e")
    return HierarchyLevel(m, a1, b1, c1, e1, f1, g1, rho1, de1)


_CACHE: Dict[MuMode, List[HierarchyLevel]] = {}
_CACHE_LOCK = threading.Lock()


def derive_levels(n_max: int, mu="symbolic") -> List[HierarchyLevel]:
    """Levels ``0..n_max`` with ``a0 = e0 = 1`` and zero integration constants."""
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    key = normalize_mu(mu)
    with _CACHE_LOCK:
        levels = _CACHE.setdefault(key, [level_zero()])
        while len(levels) <= n_max:
            levels.append(next_level(levels[-1], key))
        return list(levels[: n_max + 1])


def install_levels(levels: Sequence[HierarchyLevel], mu="symbolic") -> None:
    """Seed the level cache, e.g. from a persisted copy; ``levels[0]`` must be level 0."""
    if not levels or levels[0] != level_zero() or any(lv.m != i for i, lv in enumerate(levels)):
        raise ValueError("levels must run 0, 1, 2, ... starting from level zero")
    key = normalize_mu(mu)
    with _CACHE_LOCK:
        current = _CACHE.get(key, [])
        if len(levels) > len(current):
            _CACHE[key] = list(levels)


def clear_cache() -> None:
    with _CACHE_LOCK:
        _CACHE.clear()


def level_invariant_failures(level: HierarchyLevel) -> List[str]:
    bad = []
    if level.m == 0:
        return bad
    if d_total(level.a) != a_derivative(level):
        bad.append("a")
    if d_total(level.e) != e_derivative(level):
        bad.append("e")
    for name in ("a", "b", "c", "e", "f", "g"):
        if not getattr(level, name).has_parity("even"):
            bad.append(f"parity {name}")
    for name in ("rho", "delta"):
        if not getattr(level, name).has_parity("odd"):
            bad.append(f"parity {name}")
    return bad


def stationary_matrix(levels: Sequence[HierarchyLevel]) -> SuperMatrix:
    """Truncated ``N = sum_m N_m λ^{-m}``."""
    out = SuperMatrix.zeros(GRADING_41)
    for lv in levels:
        out = out + lv.block().map(lambda x, m=lv.m: x * LaurentPoly.lam(-m))
    return out


def stationary_residual(levels: Sequence[HierarchyLevel], mu="symbolic") -> SuperMatrix:
    """``N_x - [M, N]`` restricted to the powers fixed by the given levels."""
    n_max = levels[-1].m
    res = stationary_matrix(levels).d_x() - supercommutator(build_M(mu), stationary_matrix(levels))
    keep = lambda x: LaurentPoly({k: v for k, v in x.coeffs.items() if k > -n_max})
    return res.map(keep)


@dataclass(frozen=True)
class FlowSystem:
    n: int
    rhs: Tuple[DiffPoly, ...]

    def as_dict(self) -> Dict[str, DiffPoly]:
        return dict(zip(U_FIELDS, self.rhs))


def build_flow(n: int, levels: Optional[Sequence[HierarchyLevel]] = None, mu="symbolic") -> FlowSystem:
    if levels is None or len(levels) < n + 2:
        levels = derive_levels(n + 1, mu)
    lv = levels[n + 1]
    p, q, r, s, al, be = (var(k) for k in ("p", "q", "r", "s", "alpha", "beta"))
    me = mu_poly(mu) * lv.e
    rhs = (
        lv.b.scale(2) - (p * me).scale(4),
        -lv.c.scale(2) + (q * me).scale(4),
        lv.rho - (al * me).scale(2),
        -lv.delta + (be * me).scale(2),
        lv.f.scale(2) - (r * me).scale(4),
        -lv.g.scale(2) + (s * me).scale(4),
    )
    return FlowSystem(n, rhs)


def build_time_matrix(n: int, levels: Optional[Sequence[HierarchyLevel]] = None,
                      mu="symbolic", modified: bool = True) -> SuperMatrix:
    """``N^(n) = sum_{m<=n} N_m λ^{n-m} + Δ_n`` with ``a = -2 mu e_{n+1}``.

    ``modified=False`` drops ``Δ_n`` and returns the polynomial part alone.
    """
    if levels is None or len(levels) < n + 2:
        levels = derive_levels(n + 1, mu)
    out = SuperMatrix.zeros(GRADING_41)
    for lv in levels[: n + 1]:
        out = out + lv.block().map(lambda x, k=n - lv.m: x * LaurentPoly.lam(k))
    return out + modification_term(levels[n + 1], mu) if modified else out


def modification_term(next_level_: HierarchyLevel, mu="symbolic") -> SuperMatrix:
    a = (mu_poly(mu) * next_level_.e).scale(-2)
    rows = [[0] * 5 for _ in range(5)]
    for i, sgn in enumerate((1, -1, 1, -1)):
        rows[i][i] = a.scale(sgn)
    return SuperMatrix(rows, GRADING_41)


def time_derivative_M(flow: FlowSystem, mu="symbolic") -> SuperMatrix:
    """``M_t`` with every field, including those inside h, evolved by the flow."""
    rates = flow.as_dict()
    return build_M(mu).map(lambda x: LaurentPoly({k: evolve(v, rates) for k, v in x.coeffs.items()}))


def zero_curvature_residual(n: int, mu="symbolic") -> SuperMatrix:
    """``M_t - N^(n)_x + [M, N^(n)]``; identically zero when the flow is right."""
    levels = derive_levels(n + 1, mu)
    flow = build_flow(n, levels, mu)
    Nn = build_time_matrix(n, levels, mu)
    return time_derivative_M(flow, mu) - Nn.d_x() + supercommutator(build_M(mu), Nn)


def h_identity_residual(n: int, mu="symbolic") -> DiffPoly:
    """``(ps+qr+rs-2αβ)_t + 2 e_{n+1,x}``, zero along the flow."""
    levels = derive_levels(n + 1, mu)
    flow = build_flow(n, levels, mu)
    return evolve(h_core(), flow.as_dict()) + d_total(levels[n + 1].e).scale(2)


# --------------------------------------------------------------------------
# recursion operator

_L_BLOCKS = {
    "L1": [["q*Dinv*p - 1/2*D - h", "-q*Dinv*q"],
           ["p*Dinv*p", "-p*Dinv*q + 1/2*D - h"]],
    "L2": [["q*Dinv*alpha + beta", "q*Dinv*beta"],
           ["p*Dinv*alpha", "p*Dinv*beta + alpha"]],
    "L3": [["beta*Dinv*p - alpha", "-beta*Dinv*q"],
           ["alpha*Dinv*p", "-alpha*Dinv*q + beta"]],
    "L4": [["beta*Dinv*alpha - D - h", "beta*Dinv*beta + q"],
           ["alpha*Dinv*alpha - p", "alpha*Dinv*beta + D - h"]],
    "L5": [["s*Dinv*p + (q+s)*Dinv*r", "-s*Dinv*q - (q+s)*Dinv*s"],
           ["r*Dinv*p + (p+r)*Dinv*r", "-r*Dinv*q - (p+r)*Dinv*s"]],
    "L6": [["(q+s)*Dinv*(p+r) - 1/2*D - h", "-(q+s)*Dinv*(q+s)"],
           ["(p+r)*Dinv*(p+r)", "-(p+r)*Dinv*(q+s) + 1/2*D - h"]],
}


def operator_block(spec, mu="symbolic") -> NonlocalOperator:
    names = _names(mu)
    return NonlocalOperator([[parse_operator(t, names) for t in row] for row in spec])


def build_recursion_operator(mu="symbolic") -> NonlocalOperator:
    """The 6x6 recursion operator acting on ``(c, b, delta, rho, g, f)``."""
    L = {k: operator_block(v, mu) for k, v in _L_BLOCKS.items()}
    return NonlocalOperator.from_blocks([
        [L["L1"], L["L2"], 0],
        [L["L3"], L["L4"], 0],
        [L["L5"], -L["L2"], L["L6"]],
    ])


# --------------------------------------------------------------------------
# reports

def verify_zero_curvature(ns: Sequence[int] = (1, 2, 3), mu="symbolic") -> Report:
    rep = Report(f"zero-curvature (mu={normalize_mu(mu)})")
    for n in ns:
        res = zero_curvature_residual(n, mu)
        bad = [(i + 1, j + 1) for i, j, _ in res.nonzero_entries()]
        rep.add(f"residual n={n}", PASS if not bad else FAIL, nonzero_entries=bad)
        hres = h_identity_residual(n, mu)
        rep.add(f"h-identity n={n}", PASS if not hres else FAIL,
                residual=str(hres) if hres else "0")
    return rep
