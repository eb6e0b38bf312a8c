"""Numeric oracle: fields valued in a finite Grassmann algebra on a periodic grid.

Even fields are real trigonometric polynomials, odd fields are odd elements
of the Grassmann algebra on N generators with trigonometric coefficients.
Jets are evaluated from the Fourier representation, so derivatives are exact;
``Dinv`` is the mean-zero periodic antiderivative.

Products of trigonometric polynomials widen their spectrum, so every check
that differentiates or integrates on the grid works on a refined grid that
resolves the widest product involved; residuals are then reported on the
configured grid points.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .diffring import (FIELDS, ODD_FIELDS, DiffPoly, code_field, code_order, jet_code)
from .hierarchy import (U_FIELDS, build_flow, build_M, build_time_matrix, derive_levels,
                        a_derivative, e_derivative, normalize_mu)
from .operators import NonlocalOperator
from .report import FAIL, INFO, PASS, Report
from .superlie import LaurentPoly, SuperMatrix


class NonZeroMean(ArithmeticError):
    """The integrand has a nonzero spatial mean, so it is not a derivative."""

    def __init__(self, mean: float):
        super().__init__(f"integrand has spatial mean {mean:.3e}")
        self.mean = mean


class BlowUp(RuntimeError):
    def __init__(self, step: int, norm: float):
        super().__init__(f"solution norm {norm:.3e} exceeded the limit at step {step}")
        self.step, self.norm = step, norm


@dataclass(frozen=True)
class NumcheckConfig:
    grid: int = 32
    modes: int = 5
    generators: int = 6
    samples: int = 10
    seed: int = 20240617
    tolerance: float = 1e-8
    skew_trials: int = 50
    skew_tolerance: float = 1e-7
    mu: float = 0.3  # stand-in value for a symbolic mu
    amplitude: float = 0.5

    def __post_init__(self):
        if self.grid < 4 or self.grid & (self.grid - 1):
            raise ValueError("grid must be a power of two >= 4")
        if self.modes < 1 or 2 * self.modes >= self.grid:
            raise ValueError("modes must satisfy 1 <= modes < grid/2")
        if not 1 <= self.generators <= 10:
            raise ValueError("generators must lie in 1..10")
        if self.samples < 1 or self.skew_trials < 0:
            raise ValueError("samples must be positive and trials non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# Grassmann arithmetic

def _merge_sign(a: int, b: int) -> int:
    """Sign of ``θ_a θ_b`` rewritten in increasing generator order."""
    swaps, k = 0, 0
    while b >> k:
        if b >> k & 1:
            swaps += bin(a >> (k + 1)).count("1")
        k += 1
    return -1 if swaps & 1 else 1


@lru_cache(maxsize=None)
def product_table(n: int) -> Tuple[np.ndarray, ...]:
    """For each left mask ``a``: arrays of right masks, target masks and signs."""
    size = 1 << n
    out = []
    for a in range(size):
        bs = np.array([b for b in range(size) if not a & b], dtype=np.intp)
        out.append((bs, bs | a, np.array([_merge_sign(a, int(b)) for b in bs], dtype=float)))
    return tuple(out)


@lru_cache(maxsize=None)
def pair_table(n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """All ``(a, b)`` with ``a & b == 0`` sorted by ``c = a | b``.

    Returns left masks, right masks, signs and the start offset of each ``c``.
    """
    rows = [(a | int(b), a, int(b), sg) for a, (bs, _, signs) in enumerate(product_table(n))
            for b, sg in zip(bs, signs)]
    rows.sort()
    c = np.array([r[0] for r in rows])
    starts = np.searchsorted(c, np.arange(1 << n))
    return (np.array([r[1] for r in rows], dtype=np.intp), np.array([r[2] for r in rows], dtype=np.intp),
            np.array([r[3] for r in rows]), starts)


@lru_cache(maxsize=4096)
def _restricted_pairs(n: int, sx: bytes, sy: bytes):
    """The pair table restricted to given left and right supports."""
    left, right, signs, _ = pair_table(n)
    inx = np.zeros(1 << n, dtype=bool)
    iny = np.zeros(1 << n, dtype=bool)
    inx[np.frombuffer(sx, dtype=np.intp)] = True
    iny[np.frombuffer(sy, dtype=np.intp)] = True
    keep = inx[left] & iny[right]
    left, right, signs = left[keep], right[keep], signs[keep]
    c = left | right
    starts = np.flatnonzero(np.r_[True, c[1:] != c[:-1]]) if c.size else np.array([], dtype=np.intp)
    return left, right, signs, (c[starts], starts)


class GrassmannNumber:
    """Elements of the Grassmann algebra on ``n`` generators, optionally gridded.

    ``coeffs[mask]`` is the coefficient of the product of the generators in
    ``mask`` (increasing order); trailing axes hold grid values.
    """

    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs: np.ndarray):
        self.n = n
        self.coeffs = np.asarray(coeffs, dtype=float)
        if self.coeffs.shape[0] != 1 << n:
            raise ValueError("coefficient array does not match the generator count")

    @classmethod
    def zeros(cls, n: int, shape: Tuple[int, ...] = ()) -> "GrassmannNumber":
        return cls(n, np.zeros((1 << n,) + tuple(shape)))

    @classmethod
    def scalar(cls, n: int, value, shape: Tuple[int, ...] = ()) -> "GrassmannNumber":
        out = cls.zeros(n, shape)
        out.coeffs[0] = value
        return out

    @classmethod
    def generator(cls, n: int, i: int, shape: Tuple[int, ...] = ()) -> "GrassmannNumber":
        out = cls.zeros(n, shape)
        out.coeffs[1 << i] = 1.0
        return out

    @classmethod
    def basis_element(cls, n: int, mask: int, shape: Tuple[int, ...] = ()) -> "GrassmannNumber":
        out = cls.zeros(n, shape)
        out.coeffs[mask] = 1.0
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.coeffs.shape[1:]

    @property
    def body(self) -> np.ndarray:
        return self.coeffs[0]

    def _support(self) -> np.ndarray:
        flat = self.coeffs.reshape(self.coeffs.shape[0], -1)
        return np.flatnonzero(np.any(flat != 0, axis=1))

    def __add__(self, other):
        if isinstance(other, GrassmannNumber):
            return GrassmannNumber(self.n, self.coeffs + other.coeffs)
        out = GrassmannNumber(self.n, self.coeffs.copy())
        out.coeffs[0] = out.coeffs[0] + other
        return out

    __radd__ = __add__

    def __neg__(self):
        return GrassmannNumber(self.n, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "GrassmannNumber":
        return GrassmannNumber(self.n, self.coeffs * c)

    def __mul__(self, other):
        if not isinstance(other, GrassmannNumber):
            return self.scale(other)
        if other.n != self.n:
            raise ValueError("generator counts differ")
        shape = np.broadcast_shapes(self.shape, other.shape)
        sx, sy = self._support(), other._support()
        left, right, signs, targets = _restricted_pairs(self.n, sx.tobytes(), sy.tobytes())
        out = np.zeros((1 << self.n,) + shape)
        if left.size:
            x = np.broadcast_to(self.coeffs, (1 << self.n,) + shape)
            y = np.broadcast_to(other.coeffs, (1 << self.n,) + shape)
            prod = x[left] * y[right] * signs.reshape((-1,) + (1,) * len(shape))
            cs, starts = targets
            out[cs] = np.add.reduceat(prod, starts, axis=0)
        return GrassmannNumber(self.n, out)

    def __rmul__(self, other):
        return self.scale(other)

    def degree_part(self, parity: int) -> "GrassmannNumber":
        masks = np.array([bin(m).count("1") % 2 == parity for m in range(1 << self.n)])
        return GrassmannNumber(self.n, self.coeffs * masks.reshape((-1,) + (1,) * len(self.shape)))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def mean(self) -> "GrassmannNumber":
        return GrassmannNumber(self.n, self.coeffs.mean(axis=-1))

    def integral(self) -> "GrassmannNumber":
        """Periodic quadrature over ``[0, 2π)``; exact for resolved trig data."""
        return self.mean().scale(2 * math.pi)

    def subsample(self, step: int) -> "GrassmannNumber":
        return GrassmannNumber(self.n, self.coeffs[..., ::step])

    def __repr__(self):
        return f"GrassmannNumber(n={self.n}, shape={self.shape})"


def multiplication_table_brute(n: int) -> Dict[Tuple[int, int], Tuple[int, int]]:
    """``(a, b) -> (sign, a|b)`` by sorting generator lists with adjacent swaps."""
    out = {}
    for a in range(1 << n):
        for b in range(1 << n):
            if a & b:
                continue
            word = [i for i in range(n) if a >> i & 1] + [i for i in range(n) if b >> i & 1]
            sign = 1
            for i in range(len(word)):
                for j in range(len(word) - 1 - i):
                    if word[j] > word[j + 1]:
                        word[j], word[j + 1] = word[j + 1], word[j]
                        sign = -sign
            out[(a, b)] = (sign, a | b)
    return out


# --------------------------------------------------------------------------
# spectral helpers

def grid_points(size: int) -> np.ndarray:
    return 2 * math.pi * np.arange(size) / size


def spectral_derivative(g: GrassmannNumber, order: int = 1) -> GrassmannNumber:
    if order == 0:
        return g
    size = g.shape[-1]
    k = np.fft.fftfreq(size, 1.0 / size)
    mult = (1j * k) ** order
    if order % 2:
        mult[size // 2] = 0.0  # Nyquist mode has no real derivative
    return GrassmannNumber(g.n, np.real(np.fft.ifft(np.fft.fft(g.coeffs, axis=-1) * mult, axis=-1)))


def numeric_antiderivative(g: GrassmannNumber, tol: float = 1e-10,
                           lenient: bool = False) -> GrassmannNumber:
    """The mean-zero periodic antiderivative, mode by mode.

    Raises :class:`NonZeroMean` when some coefficient has a spatial mean
    above ``tol`` relative to the data; ``lenient`` drops the mean instead.
    """
    size = g.shape[-1]
    spec = np.fft.fft(g.coeffs, axis=-1)
    mean = np.max(np.abs(spec[..., 0])) / size if spec.size else 0.0
    scale = max(1.0, g.max_abs())
    if not lenient and mean > tol * scale:
        raise NonZeroMean(float(mean))
    k = np.fft.fftfreq(size, 1.0 / size)
    inv = np.zeros_like(k, dtype=complex)
    inv[1:] = 1.0 / (1j * k[1:])
    inv[size // 2] = 0.0
    return GrassmannNumber(g.n, np.real(np.fft.ifft(spec * inv, axis=-1)))


# --------------------------------------------------------------------------
# samples

@dataclass
class FieldSample:
    """Random trig-polynomial fields with Grassmann coefficients.

    ``spectra[field][mask]`` is a complex array ``c_k`` (``k = 0..modes``) with
    ``value = Re sum_k c_k exp(i k x)``.
    """

    generators: int
    modes: int
    grid: int
    spectra: Dict[str, Dict[int, np.ndarray]] = field(default_factory=dict)

    @classmethod
    def random(cls, rng: np.random.Generator, generators: int = 6, modes: int = 5,
               grid: int = 32, amplitude: float = 0.5,
               fields: Sequence[str] = FIELDS) -> "FieldSample":
        spectra = {}
        decay = amplitude / (1.0 + np.arange(modes + 1))
        odd_masks = [m for m in range(1, 1 << generators) if bin(m).count("1") in (1, 3)]
        for f in fields:
            if f in ODD_FIELDS:
                spectra[f] = {m: cls._random_spectrum(rng, decay) for m in odd_masks}
            else:
                spectra[f] = {0: cls._random_spectrum(rng, decay)}
        return cls(generators, modes, grid, spectra)

    @staticmethod
    def _random_spectrum(rng, decay) -> np.ndarray:
        c = (rng.standard_normal(decay.size) + 1j * rng.standard_normal(decay.size)) * decay
        c[0] = c[0].real
        return c

    @classmethod
    def zero(cls, generators: int = 6, modes: int = 5, grid: int = 32) -> "FieldSample":
        return cls(generators, modes, grid, {f: {} for f in FIELDS})

    def jet(self, name: str, order: int = 0, size: Optional[int] = None) -> GrassmannNumber:
        size = size or self.grid
        x = grid_points(size)
        k = np.arange(self.modes + 1)
        basis = np.exp(1j * np.outer(k, x))
        out = GrassmannNumber.zeros(self.generators, (size,))
        for mask, c in self.spectra.get(name, {}).items():
            out.coeffs[mask] = np.real(((1j * k) ** order * c) @ basis)
        return out

    def jets(self, size: Optional[int] = None) -> "JetTable":
        return JetTable(lambda code: self.jet(code_field(code), code_order(code), size),
                        self.generators, size or self.grid)

    def scaled(self, factor: float) -> "FieldSample":
        return FieldSample(self.generators, self.modes, self.grid,
                           {f: {m: c * factor for m, c in d.items()} for f, d in self.spectra.items()})


class JetTable:
    """Lazily computed jet values keyed by jet code."""

    def __init__(self, source: Callable[[int], GrassmannNumber], generators: int, size: int):
        self.source, self.generators, self.size = source, generators, size
        self._cache: Dict[int, GrassmannNumber] = {}

    def __getitem__(self, code: int) -> GrassmannNumber:
        if code not in self._cache:
            self._cache[code] = self.source(code)
        return self._cache[code]

    @classmethod
    def from_grids(cls, grids: Mapping[str, GrassmannNumber]) -> "JetTable":
        first = next(iter(grids.values()))
        return cls(lambda code: spectral_derivative(grids[code_field(code)], code_order(code)),
                   first.n, first.shape[-1])


def evaluate(expr: DiffPoly, jets: JetTable, mu: float = 0.3) -> GrassmannNumber:
    """Pointwise value of a differential polynomial; odd factors in key order."""
    out = GrassmannNumber.zeros(jets.generators, (jets.size,))
    powers: Dict[Tuple[int, int], GrassmannNumber] = {}
    for (mpow, ev, od), c in expr.items():
        term: object = float(c) * mu ** mpow
        for code, e in ev:
            if (code, e) not in powers:
                val = jets[code]
                for _ in range(e - 1):
                    val = val * jets[code]
                powers[(code, e)] = val
            term = powers[(code, e)] * term if isinstance(term, float) else term * powers[(code, e)]
        for code in od:
            term = jets[code] * term if isinstance(term, float) else term * jets[code]
        out = out + term
    return out


def eval(expr: DiffPoly, sample: FieldSample, mu: float = 0.3) -> GrassmannNumber:  # noqa: A001
    return evaluate(expr, sample.jets(), mu)


def degree(expr: DiffPoly) -> int:
    """Total polynomial degree in the jets."""
    return max((sum(e for _, e in ev) + len(od) for (_, ev, od), _ in expr.items()), default=0)


def resolved_size(base: int, modes: int, deg: int) -> int:
    """Smallest power-of-two multiple of ``base`` resolving degree-``deg`` products."""
    size = base
    while size <= 2 * modes * max(deg, 1):
        size *= 2
    return size


# --------------------------------------------------------------------------
# numeric matrices and operators

Grid = GrassmannNumber
NumMatrix = List[List[Optional[Grid]]]


def eval_matrix(M: SuperMatrix, jets: JetTable, mu: float, lam: float) -> NumMatrix:
    rows = []
    for row in M.rows:
        out = []
        for x in row:
            if isinstance(x, LaurentPoly):
                val = GrassmannNumber.zeros(jets.generators, (jets.size,))
                for k, c in x.coeffs.items():
                    val = val + evaluate(c, jets, mu).scale(lam ** k)
                out.append(val)
            else:
                out.append(evaluate(x, jets, mu))
        rows.append(out)
    return rows


def mat_mul(A: NumMatrix, B: NumMatrix) -> NumMatrix:
    n, m, k = len(A), len(B), len(B[0])
    out = []
    for i in range(n):
        row = []
        for j in range(k):
            acc = None
            for t in range(m):
                if A[i][t].max_abs() == 0 or B[t][j].max_abs() == 0:
                    continue
                prod = A[i][t] * B[t][j]
                acc = prod if acc is None else acc + prod
            row.append(acc if acc is not None else A[i][0].scale(0.0))
        out.append(row)
    return out


def mat_combine(*terms: Tuple[float, NumMatrix]) -> NumMatrix:
    n, k = len(terms[0][1]), len(terms[0][1][0])
    return [[sum((m[i][j].scale(c) for c, m in terms[1:]), terms[0][1][i][j].scale(terms[0][0]))
             for j in range(k)] for i in range(n)]


def mat_max(A: NumMatrix) -> float:
    return max(x.max_abs() for row in A for x in row)


def _mono_poly(key) -> DiffPoly:
    return DiffPoly.monomial(key, 1)


def apply_operator_numeric(op: NonlocalOperator, v: Sequence[Grid], jets: JetTable, mu: float,
                           lenient: bool = False, tol: float = 1e-10,
                           collect: Optional[list] = None) -> List[Grid]:
    """Numeric counterpart of operator application with mean-zero ``Dinv``.

    Words sharing a prefix are integrated jointly, as in the exact engine.
    When ``collect`` is a list, the outer multiplier of every integrated group
    of each row is appended to it as ``(row, grid)``.
    """
    out = []
    for i, row in enumerate(op.rows):
        total = GrassmannNumber.zeros(jets.generators, (jets.size,))
        word_pairs = []
        for A, vj in zip(row, v):
            for k, c in A.local.items():
                total = total + evaluate(c, jets, mu) * spectral_derivative(vj, k)
            for w, s in A.words.items():
                word_pairs.append((w, evaluate(s, jets, mu) * vj))
        if word_pairs:
            total = total + _eval_words_numeric(word_pairs, jets, mu, lenient, tol, i, collect)
        out.append(total)
    return out


def _eval_words_numeric(pairs, jets, mu, lenient, tol, row, collect):
    groups: Dict[tuple, list] = {}
    for w, a in pairs:
        groups.setdefault(w[0], []).append((w[1:], a))
    out = GrassmannNumber.zeros(jets.generators, (jets.size,))
    for m0, inner in groups.items():
        total = GrassmannNumber.zeros(jets.generators, (jets.size,))
        deeper = []
        for w, a in inner:
            if len(w) == 1:
                total = total + evaluate(_mono_poly(w[0]), jets, mu) * a
            else:
                deeper.append((w, a))
        if deeper:
            total = total + _eval_words_numeric(deeper, jets, mu, lenient, tol, row, collect)
        outer = evaluate(_mono_poly(m0), jets, mu)
        if collect is not None:
            collect.append((row, outer))
        out = out + outer * numeric_antiderivative(total, tol, lenient)
    return out


def residual_mod_constants(residual: Grid, multipliers: Sequence[Grid]) -> float:
    """Residual left after removing ``sum_g m_g c_g`` with constant Grassmann ``c_g``.

    The periodic ``Dinv`` differs from the constant-free symbolic one by a
    constant, so a nonlocal identity holds numerically only up to such terms.
    """
    n, size = residual.n, residual.shape[-1]
    target = residual.coeffs.reshape(-1)
    if not multipliers or not np.any(target):
        return float(np.max(np.abs(target))) if target.size else 0.0
    cols = []
    for m in multipliers:
        for b in range(1 << n):
            col = (m * GrassmannNumber.basis_element(n, b, (size,))).coeffs.reshape(-1)
            if np.any(col):
                cols.append(col)
    A = np.array(cols).T
    coef, *_ = np.linalg.lstsq(A, target, rcond=None)
    return float(np.max(np.abs(target - A @ coef)))


# --------------------------------------------------------------------------
# identity suite

def _sample_rng(cfg: NumcheckConfig, k: int, salt: int = 0) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, salt, k])


def _mu_value(mu, cfg: NumcheckConfig) -> float:
    mu = normalize_mu(mu)
    return cfg.mu if mu == "symbolic" else float(mu)


class _Suite:
    def __init__(self, cfg: NumcheckConfig, mu):
        self.cfg, self.mu = cfg, normalize_mu(mu)
        self.mu_val = _mu_value(mu, cfg)
        self.worst: Dict[str, float] = {}

    def record(self, name: str, value: float):
        self.worst[name] = max(self.worst.get(name, 0.0), value)

    def sample(self, k: int) -> FieldSample:
        c = self.cfg
        return FieldSample.random(_sample_rng(c, k), c.generators, c.modes, c.grid, c.amplitude)

    def size_for(self, deg: int) -> int:
        return resolved_size(self.cfg.grid, self.cfg.modes, deg)


def _check_zero_curvature(suite: _Suite, smp: FieldSample, n: int):
    levels = derive_levels(n + 1, suite.mu)
    flow = build_flow(n, levels, suite.mu)
    N = build_time_matrix(n, levels, suite.mu)
    deg = max(degree(c) for row in N.rows for x in row for c in x.coeffs.values())
    size = suite.size_for(deg + 2)
    step = size // suite.cfg.grid
    jets = smp.jets(size)
    rates = [evaluate(r, jets, suite.mu_val) for r in flow.rhs]
    base = {f: jets[jet_code(f)] for f in U_FIELDS}
    M = build_M(suite.mu)
    for lam in (0.7, -1.3):
        Mn = eval_matrix(M, jets, suite.mu_val, lam)
        Nn = eval_matrix(N, jets, suite.mu_val, lam)
        # M is quadratic in the fields, so the central difference is exact
        shifted = []
        for sgn in (1, -1):
            grids = {f: base[f] + rates[i].scale(sgn) for i, f in enumerate(U_FIELDS)}
            shifted.append(eval_matrix(M, JetTable.from_grids(grids), suite.mu_val, lam))
        Mt = mat_combine((0.5, shifted[0]), (-0.5, shifted[1]))
        Nx = [[spectral_derivative(x) for x in row] for row in Nn]
        res = mat_combine((1.0, Mt), (-1.0, Nx), (1.0, mat_mul(Mn, Nn)), (-1.0, mat_mul(Nn, Mn)))
        scale = max(1.0, mat_max(Nn))
        suite.record(f"zero curvature n={n}",
                     max(x.subsample(step).max_abs() for row in res for x in row) / scale)


def _check_stationary(suite: _Suite, smp: FieldSample, n_max: int):
    levels = derive_levels(n_max + 1, suite.mu)
    deg = max(degree(getattr(lv, q)) for lv in levels for q in ("a", "b", "f", "rho"))
    size = suite.size_for(deg + 2)
    step = size // suite.cfg.grid
    jets = smp.jets(size)
    M0 = eval_matrix(build_M(suite.mu), jets, suite.mu_val, 0.0)
    lam_part = [[GrassmannNumber.scalar(jets.generators, 0.0, (size,)) for _ in range(5)] for _ in range(5)]
    for i, s in enumerate((1, -1, 1, -1)):
        lam_part[i][i] = GrassmannNumber.scalar(jets.generators, float(s), (size,))
    blocks = [eval_matrix(lv.block(), jets, suite.mu_val, 1.0) for lv in levels]
    for m in range(n_max):
        nx = [[spectral_derivative(x) for x in row] for row in blocks[m]]
        rhs = mat_combine((1.0, mat_mul(lam_part, blocks[m + 1])), (-1.0, mat_mul(blocks[m + 1], lam_part)),
                          (1.0, mat_mul(M0, blocks[m])), (-1.0, mat_mul(blocks[m], M0)))
        res = mat_combine((1.0, nx), (-1.0, rhs))
        suite.record(f"stationary equation m={m}",
                     max(x.subsample(step).max_abs() for row in res for x in row))


def _check_antiderivatives(suite: _Suite, smp: FieldSample, n_max: int):
    levels = derive_levels(n_max, suite.mu)
    for lv in levels[1:]:
        for name, integrand in (("a", a_derivative(lv)), ("e", e_derivative(lv))):
            size = suite.size_for(degree(integrand))
            jets = smp.jets(size)
            num = numeric_antiderivative(evaluate(integrand, jets, suite.mu_val))
            ref = evaluate(getattr(lv, name), jets, suite.mu_val)
            ref = ref - GrassmannNumber(ref.n, ref.coeffs.mean(axis=-1, keepdims=True))
            suite.record(f"antiderivative {name}_{lv.m}", (num - ref).subsample(size // suite.cfg.grid).max_abs())


def first_variation(density: DiffPoly, smp: FieldSample, direction: FieldSample, mu: float,
                    size: int, step: float = 0.25) -> GrassmannNumber:
    """``d/dε ∫ H(u + ε w) dx`` at zero, read off an exact polynomial fit in ε."""
    deg = max(degree(density), 1)
    eps = step * np.arange(-deg, deg + 1)
    base, dirs = smp.jets(size), direction.jets(size)
    values = []
    for e in eps:
        jets = JetTable(lambda code, e=e: base[code] + dirs[code].scale(e), base.generators, size)
        values.append(evaluate(density, jets, mu).integral().coeffs)
    V = np.vander(eps, len(eps), increasing=True)
    coef = np.linalg.solve(V, np.array(values))
    return GrassmannNumber(base.generators, coef[1])


def _check_gradients(suite: _Suite, smp: FieldSample, k: int, n_max: int):
    from .diffring import SIDE
    from .hamiltonian import hamiltonian
    c = suite.cfg
    direction = FieldSample.random(_sample_rng(c, k, 1), c.generators, c.modes, c.grid, c.amplitude)
    for n in range(1, n_max + 1):
        H = hamiltonian(n, suite.mu)
        grad = H.gradient()
        size = suite.size_for(degree(H.density) + 1)
        jets, dirs = smp.jets(size), direction.jets(size)
        pairing = GrassmannNumber.zeros(c.generators)
        for f, g in zip(U_FIELDS, grad):
            gv, wv = evaluate(g, jets, suite.mu_val), dirs[jet_code(f)]
            pairing = pairing + ((gv * wv) if SIDE == "right" else (wv * gv)).integral()
        var = first_variation(H.density, smp, direction, suite.mu_val, size)
        scale = max(1.0, var.max_abs())
        suite.record(f"variational derivative H{n}", (var - pairing).max_abs() / scale)


def _check_hamiltonian(suite: _Suite, smp: FieldSample, n_values: Sequence[int]):
    from .hamiltonian import build_J_corrected, build_Q, build_R, gradient_vector
    Q, R, J = build_Q(suite.mu), build_R(suite.mu), build_J_corrected(suite.mu)
    for n in n_values:
        levels = derive_levels(n + 1, suite.mu)
        flow = build_flow(n, levels, suite.mu).rhs
        vec = levels[n + 1].vector()
        G = gradient_vector(levels[n + 1], suite.mu)
        deg = max(degree(x) for x in list(flow) + list(G)) + 4
        size = suite.size_for(deg)
        jets = smp.jets(size)
        ev = lambda xs: [evaluate(x, jets, suite.mu_val) for x in xs]
        flow_n, vec_n, G_n = ev(flow), ev(vec), ev(G)
        for label, op, arg, want in (("flow = Q (level vector)", Q, vec_n, flow_n),
                                     ("level vector = R (gradient)", R, G_n, vec_n),
                                     ("flow = J (gradient)", J, G_n, flow_n)):
            mults: list = []
            got = apply_operator_numeric(op, arg, jets, suite.mu_val, collect=mults)
            worst = 0.0
            for i in range(6):
                res = (got[i] - want[i])
                scale = max(1.0, want[i].max_abs())
                worst = max(worst, residual_mod_constants(res, [m for r, m in mults if r == i]) / scale)
            suite.record(f"{label} n={n}", worst)


def identity_suite(cfg: Optional[NumcheckConfig] = None, mu="symbolic", n_max: int = 3,
                   parallel: bool = False) -> Report:
    """Every certified symbolic identity, evaluated on ``cfg.samples`` random samples."""
    cfg = cfg or NumcheckConfig()
    suite = _Suite(cfg, mu)
    rep = Report(f"numeric identities (mu={suite.mu}, samples={cfg.samples}, grid={cfg.grid}, "
                 f"modes={cfg.modes}, generators={cfg.generators})")
    for k in range(cfg.samples):
        smp = suite.sample(k)
        _check_stationary(suite, smp, n_max)
        _check_antiderivatives(suite, smp, n_max)
        for n in range(1, min(n_max, 2) + 1):
            _check_zero_curvature(suite, smp, n)
        _check_gradients(suite, smp, k, min(n_max, 2))
        _check_hamiltonian(suite, smp, (1, 2)[: max(1, min(n_max, 2))])
    for name in sorted(suite.worst):
        val = suite.worst[name]
        rep.add(name, PASS if val < cfg.tolerance else FAIL, max_residual=float(f"{val:.3e}"))
    rep.summary["tolerance"] = cfg.tolerance
    rep.summary["config"] = cfg.to_dict()
    return rep


# --------------------------------------------------------------------------
# skew-adjointness

U_PARITY = (0, 0, 1, 1, 0, 0)


def random_test_vector(rng: np.random.Generator, cfg: NumcheckConfig, parity: int,
                       size: int) -> List[GrassmannNumber]:
    """Six mean-zero components; component i has parity ``U_PARITY[i] + parity``."""
    x = grid_points(size)
    out = []
    k = np.arange(1, cfg.modes + 1)
    decay = cfg.amplitude / (1.0 + k)
    for up in U_PARITY:
        par = (up + parity) % 2
        g = GrassmannNumber.zeros(cfg.generators, (size,))
        masks = [m for m in range(1 << cfg.generators)
                 if bin(m).count("1") % 2 == par and bin(m).count("1") <= 3]
        for m in masks:
            c = (rng.standard_normal(k.size) + 1j * rng.standard_normal(k.size)) * decay
            g.coeffs[m] = np.real(c @ np.exp(1j * np.outer(k, x)))
        out.append(g)
    return out


def pairing(v: Sequence[Grid], w: Sequence[Grid]) -> GrassmannNumber:
    total = GrassmannNumber.zeros(v[0].n)
    for a, b in zip(v, w):
        total = total + (a * b).integral()
    return total


def skew_check(op: NonlocalOperator, trials: int = 50, cfg: Optional[NumcheckConfig] = None,
               mu="symbolic", tolerance: Optional[float] = None, name: str = "operator",
               graded: bool = False) -> Report:
    """``<v, Op w> + (-1)^{|v||w|} <w, Op v>`` on random test vectors.

    By default both vectors carry the parity pattern of a gradient, the case
    that makes the Poisson bracket of even functionals antisymmetric.
    ``graded`` also draws odd-parity vectors; the plain componentwise pairing
    is not graded, so that variant fails even for constant operators with an
    odd-odd block.
    """
    cfg = cfg or NumcheckConfig()
    tol = cfg.skew_tolerance if tolerance is None else tolerance
    mu_val = _mu_value(mu, cfg)
    rep = Report(f"skew-adjointness of {name} ({trials} trials)")
    size = resolved_size(cfg.grid, cfg.modes, 6)
    worst = 0.0
    passed = 0
    for t in range(trials):
        rng = np.random.default_rng([cfg.seed, 7, t])
        smp = FieldSample.random(rng, cfg.generators, cfg.modes, cfg.grid, cfg.amplitude)
        jets = smp.jets(size)
        pv, pw = (int(rng.integers(2)), int(rng.integers(2))) if graded else (0, 0)
        v = random_test_vector(rng, cfg, pv, size)
        w = random_test_vector(rng, cfg, pw, size)
        a = pairing(v, apply_operator_numeric(op, w, jets, mu_val, lenient=True))
        b = pairing(w, apply_operator_numeric(op, v, jets, mu_val, lenient=True))
        sign = -1.0 if pv and pw else 1.0
        scale = max(1.0, a.max_abs(), b.max_abs())
        rel = (a + b.scale(sign)).max_abs() / scale
        worst = max(worst, rel)
        ok = rel < tol
        passed += ok
        rep.add(f"trial {t}", PASS if ok else FAIL, parities=[pv, pw], relative=float(f"{rel:.3e}"))
    rep.summary.update({"passed": passed, "trials": trials, "worst": float(f"{worst:.3e}"),
                        "tolerance": tol})
    lopsided = structural_asymmetry(op)
    if lopsided:
        rep.add("entries without a transposed partner", INFO, entries=lopsided)
    return rep


def structural_asymmetry(op: NonlocalOperator) -> List[List[int]]:
    """Positions ``(i, j)`` with ``Op[i, j] != 0`` but ``Op[j, i] == 0``.

    Such an operator cannot be skew-adjoint for any sign convention.
    """
    n = op.shape[0]
    return [[i + 1, j + 1] for i in range(n) for j in range(n)
            if op[i, j] and not op[j, i]]


# --------------------------------------------------------------------------
# conservation along the n = 2 flow

def _compile(exprs: Sequence[DiffPoly], mu: float):
    def rhs(state: Sequence[Grid]) -> List[Grid]:
        jets = JetTable.from_grids(dict(zip(U_FIELDS, state)))
        return [evaluate(e, jets, mu) for e in exprs]
    return rhs


def _dealias(g: Grid, keep: int) -> Grid:
    spec = np.fft.fft(g.coeffs, axis=-1)
    k = np.abs(np.fft.fftfreq(g.shape[-1], 1.0 / g.shape[-1]))
    spec[..., k > keep] = 0.0
    return GrassmannNumber(g.n, np.real(np.fft.ifft(spec, axis=-1)))


def conservation_probe(n: int = 2, steps: int = 200, dt: float = 1e-3, mu=0,
                       cfg: Optional[NumcheckConfig] = None, modes: int = 2,
                       generators: int = 4, amplitude: float = 0.05,
                       blowup: float = 1e6, zero: bool = False,
                       tolerance: Optional[float] = None) -> Report:
    """RK4 along the flow; drift of ``∫(2a_m + e_m) dx`` for ``m = n`` and ``m = n + 1``.

    The two densities correspond to the two index conventions for the
    conserved functional of the ``n``-th flow. Several components of the flow
    are backward-heat equations, so data is band-limited and every stage is
    filtered to the lowest third of the spectrum.
    """
    cfg = cfg or NumcheckConfig()
    mu = normalize_mu(mu)
    if mu == "symbolic":
        raise ValueError("the conservation probe needs a rational mu")
    mu_val = float(mu)
    if tolerance is None:
        tolerance = 1e-5 if mu == 0 else 1e-4
    levels = derive_levels(n + 2, mu)
    flow = build_flow(n, levels, mu)
    rhs = _compile(flow.rhs, mu_val)
    densities = {f"2a{m}+e{m}": levels[m].a.scale(2) + levels[m].e for m in (n, n + 1)}
    size = cfg.grid
    keep = size // 3
    if zero:
        smp = FieldSample.zero(generators, modes, size)
    else:
        smp = FieldSample.random(np.random.default_rng([cfg.seed, 11]), generators, modes, size, amplitude)
    state = [smp.jet(f, 0) for f in U_FIELDS]

    def functionals(st):
        jets = JetTable.from_grids(dict(zip(U_FIELDS, st)))
        return {k: evaluate(d, jets, mu_val).integral() for k, d in densities.items()}

    start = functionals(state)
    rep = Report(f"conservation along flow n={n} (mu={mu}, dt={dt}, steps={steps})")
    for step in range(steps):
        k1 = rhs(state)
        k2 = rhs([s + k.scale(dt / 2) for s, k in zip(state, k1)])
        k3 = rhs([s + k.scale(dt / 2) for s, k in zip(state, k2)])
        k4 = rhs([s + k.scale(dt) for s, k in zip(state, k3)])
        state = [_dealias(s + (a + b.scale(2) + c.scale(2) + d).scale(dt / 6), keep)
                 for s, a, b, c, d in zip(state, k1, k2, k3, k4)]
        norm = max(s.max_abs() for s in state)
        if not np.isfinite(norm) or norm > blowup:
            raise BlowUp(step, float(norm))
    end = functionals(state)
    for k in densities:
        scale = start[k].max_abs()
        drift = (end[k] - start[k]).max_abs() / scale if scale > 0 else (end[k] - start[k]).max_abs()
        rep.add(f"drift of ∫({k}) dx", PASS if drift < tolerance else FAIL, relative=float(f"{drift:.3e}"),
                body=float(f"{abs(end[k].coeffs[0] - start[k].coeffs[0]):.3e}"))
        rep.summary[k] = drift
    rep.summary["max_state"] = max(s.max_abs() for s in state)
    rep.summary["tolerance"] = tolerance
    return rep
