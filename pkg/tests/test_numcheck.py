import numpy as np
import pytest

from superakns.diffring import d_total, parse, var
from superakns.hamiltonian import build_J_corrected, build_Q
from superakns.hierarchy import a_derivative, derive_levels
from superakns.numcheck import (BlowUp, FieldSample, GrassmannNumber, NonZeroMean, NumcheckConfig,
                                conservation_probe, evaluate, identity_suite, multiplication_table_brute,
                                numeric_antiderivative, product_table, resolved_size, skew_check,
                                spectral_derivative, structural_asymmetry)
from superakns.numcheck import eval as num_eval
from superakns.operators import NonlocalOperator, parse_operator

CFG = NumcheckConfig()


def sample(k=0, **kw):
    opts = dict(generators=CFG.generators, modes=CFG.modes, grid=CFG.grid, amplitude=CFG.amplitude)
    opts.update(kw)
    return FieldSample.random(np.random.default_rng([7, k]), **opts)


# Grassmann arithmetic ----------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_product_table_matches_brute_force(n):
    brute = multiplication_table_brute(n)
    for a in range(1 << n):
        for b in range(1 << n):
            got = GrassmannNumber.basis_element(n, a) * GrassmannNumber.basis_element(n, b)
            if a & b:
                assert got.max_abs() == 0
            else:
                sign, c = brute[(a, b)]
                assert got.coeffs[c] == sign and np.count_nonzero(got.coeffs) == 1
    assert sum(len(bs) for bs, _, _ in product_table(n)) == len(brute)


def test_generators_anticommute_and_square_to_zero():
    a, b = GrassmannNumber.generator(4, 0), GrassmannNumber.generator(4, 2)
    assert (a * b + b * a).max_abs() == 0
    assert (a * a).max_abs() == 0


# evaluation ---------------------------------------------------------------------

def test_leibniz_pointwise():
    smp = sample()
    size = resolved_size(CFG.grid, CFG.modes, 4)
    jets = smp.jets(size)
    f, g = parse("p*q + alpha*beta"), parse("r*s_x + alpha_x*beta")
    lhs = evaluate(d_total(f * g), jets)
    rhs = evaluate(d_total(f) * g + f * d_total(g), jets)
    assert (lhs - rhs).max_abs() < 1e-12
    assert (spectral_derivative(evaluate(f * g, jets)) - lhs).max_abs() < 1e-10


def test_odd_fields_anticommute():
    smp = sample()
    ab, ba = num_eval(var("alpha") * var("beta"), smp), num_eval(var("beta"), smp) * num_eval(var("alpha"), smp)
    assert (ab + ba).max_abs() < 1e-14 * ab.max_abs()
    assert num_eval(var("alpha") * var("alpha"), smp).max_abs() == 0


def test_antiderivative():
    smp = sample()
    p = smp.jet("p")
    mean = GrassmannNumber(p.n, p.coeffs.mean(axis=-1, keepdims=True))
    assert (numeric_antiderivative(smp.jet("p", 1)) - (p - mean)).max_abs() < 1e-12
    with pytest.raises(NonZeroMean):
        numeric_antiderivative(p + GrassmannNumber.scalar(p.n, 1.0, p.shape))
    # lenient mode drops the mean
    numeric_antiderivative(p + GrassmannNumber.scalar(p.n, 1.0, p.shape), lenient=True)


def test_antiderivative_of_level_integrand():
    lv = derive_levels(2)[2]
    smp = sample(1)
    size = resolved_size(CFG.grid, CFG.modes, 4)
    jets = smp.jets(size)
    num = numeric_antiderivative(evaluate(a_derivative(lv), jets))
    ref = evaluate(lv.a, jets)
    ref = ref - GrassmannNumber(ref.n, ref.coeffs.mean(axis=-1, keepdims=True))
    assert (num - ref).max_abs() < 1e-8


# identity suite -------------------------------------------------------------------

@pytest.mark.parametrize("mu", ["symbolic", 0])
def test_identity_suite_small(mu):
    rep = identity_suite(NumcheckConfig(samples=2), mu)
    assert rep.passed
    assert len(rep.entries) == 19


def test_identity_suite_is_deterministic():
    cfg = NumcheckConfig(samples=1)
    assert identity_suite(cfg, 0, 1).to_json() == identity_suite(cfg, 0, 1).to_json()


def test_oracle_detects_a_wrong_identity():
    # the pointwise residual of a false identity is far above tolerance
    smp = sample(2)
    jets = smp.jets(resolved_size(CFG.grid, CFG.modes, 3))
    wrong = d_total(parse("p*q")) - parse("p_x*q")
    assert evaluate(wrong, jets).max_abs() > 1e-3


# skew-adjointness -------------------------------------------------------------------

def test_J_skew_at_mu_zero():
    rep = skew_check(build_J_corrected(0), trials=10, mu=0)
    assert rep.passed and rep.summary["passed"] == 10


def test_constant_odd_block_is_skew():
    J3 = parse_operator("-1/2")
    zero = parse_operator("0")
    rows = [[zero] * 6 for _ in range(6)]
    rows[2][3] = rows[3][2] = J3
    assert skew_check(NonlocalOperator(rows), trials=5).passed


def test_J_structural_asymmetry_at_mu_nonzero():
    J = build_J_corrected()
    assert structural_asymmetry(J) == [[1, 3], [1, 4], [2, 3], [2, 4]]
    assert structural_asymmetry(build_J_corrected(0)) == []
    rep = skew_check(J, trials=3)
    assert not rep.passed and rep.summary["worst"] > 1e-2


def test_Q_at_mu_zero_is_not_skew_in_the_even_pairing():
    # the odd block of Q(0) is antisymmetric, which the even pairing does not accept
    rep = skew_check(build_Q(0), trials=3, mu=0)
    assert not rep.passed


def test_skew_check_rejects_a_symmetric_operator():
    one = parse_operator("1")
    rows = [[parse_operator("0")] * 6 for _ in range(6)]
    rows[0][0] = one
    assert not skew_check(NonlocalOperator(rows), trials=2).passed


# conservation probe ---------------------------------------------------------------

def test_probe_on_zero_data():
    rep = conservation_probe(steps=5, zero=True)
    assert rep.summary["max_state"] == 0
    assert rep.passed


def test_probe_conserves_at_mu_zero():
    rep = conservation_probe(steps=60, mu=0)
    assert rep.passed
    assert all(rep.summary[k] < 1e-5 for k in ("2a2+e2", "2a3+e3"))


def test_probe_blowup_and_symbolic_mu():
    with pytest.raises(BlowUp):
        conservation_probe(steps=5, mu=0, blowup=1e-6)
    with pytest.raises(ValueError):
        conservation_probe(mu="symbolic")


# configuration ------------------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(grid=30), dict(grid=2), dict(modes=16), dict(generators=0),
                                dict(generators=11), dict(samples=0), dict(skew_trials=-1)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        NumcheckConfig(**kw)


def test_resolved_size():
    assert resolved_size(32, 5, 1) == 32
    assert resolved_size(32, 5, 4) == 64
    assert resolved_size(32, 5, 7) == 128
