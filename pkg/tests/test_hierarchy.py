import json
from pathlib import Path

import pytest

from superakns import hierarchy
from superakns.diffring import DiffPoly, NotExact, parse, var
from superakns.hierarchy import (HierarchyLevel, build_flow, build_M, build_recursion_operator,
                                 build_time_matrix, derive_levels, h_identity_residual,
                                 install_levels, level_invariant_failures, level_zero,
                                 modification_term, stationary_residual, zero_curvature_residual)
from superakns.superlie import GRADING_41, LaurentPoly, SuperMatrix

FROZEN = json.loads((Path(__file__).parent / "data" / "frozen.json").read_text())
MU_MODES = ["symbolic", 0]
p, q, r, s, alpha, beta = (var(n) for n in ("p", "q", "r", "s", "alpha", "beta"))


def frozen_levels(mu):
    return [HierarchyLevel(m, **{k: parse(v) for k, v in d.items()})
            for m, d in enumerate(FROZEN["levels"][str(mu)])]


def mu_free(x: DiffPoly) -> bool:
    return x.mu_degree == 0


# spectral matrix -----------------------------------------------------------

def test_M_entries_and_grading():
    M = build_M()
    assert M[0, 4] == LaurentPoly.const(alpha)
    assert M[4, 0] == LaurentPoly.const(beta)
    assert M[0, 0] == LaurentPoly.lam() + LaurentPoly.const(parse("mu*(p*s + q*r + r*s - 2*alpha*beta)"))
    assert M.grading_violations() == []
    assert M.lambda_window() == (0, 1)


def test_M_at_mu_zero_is_the_plain_coupling():
    lam = LaurentPoly.lam()
    M0 = build_M(0)
    assert M0[0, 0] == lam and M0[1, 1] == -lam
    assert M0[2, 3] == LaurentPoly.const(p + r) and M0[3, 2] == LaurentPoly.const(q + s)
    assert all(mu_free(v) for _, _, x in M0.nonzero_entries() for v in x.coeffs.values())


# recursion -----------------------------------------------------------------

def test_level_one_and_two():
    lv = derive_levels(2)
    assert (lv[1].a, lv[1].e) == (0, 0)
    assert (lv[1].b, lv[1].c, lv[1].rho, lv[1].delta) == (p, q, alpha, beta)
    assert (lv[1].f, lv[1].g) == (p + 2 * r, q + 2 * s)
    h = hierarchy.h_poly()
    assert lv[2].a == parse("-1/2*(p*q + 2*alpha*beta)")
    assert lv[2].b == parse("1/2*p_x") - h * p
    assert lv[2].rho == var("alpha_x") - h * alpha


@pytest.mark.parametrize("mu", MU_MODES)
def test_levels_match_frozen(mu):
    assert derive_levels(3, mu) == frozen_levels(mu)


@pytest.mark.parametrize("mu", MU_MODES)
def test_frozen_levels_solve_stationary_equation(mu):
    # independent of the recursion code: N_x = [M, N] power by power
    levels = frozen_levels(mu)
    assert stationary_residual(levels, mu).is_zero


@pytest.mark.parametrize("mu", MU_MODES)
def test_level_invariants(mu):
    for lv in derive_levels(4, mu):
        assert level_invariant_failures(lv) == []


def test_mu_zero_levels_are_mu_free():
    for lv in derive_levels(4, 0):
        assert all(mu_free(x) for x in lv.as_dict().values())


def test_not_exact_is_propagated(monkeypatch):
    def broken(level):
        return var("p")
    monkeypatch.setattr(hierarchy, "a_derivative", broken)
    with pytest.raises(NotExact) as info:
        hierarchy.next_level(level_zero())
    assert info.value.context == {"level": 1, "quantity": "a"}


def test_level_cache(monkeypatch):
    hierarchy.clear_cache()
    fresh = derive_levels(3)
    calls = []
    original = hierarchy.next_level
    monkeypatch.setattr(hierarchy, "next_level", lambda *a: calls.append(a) or original(*a))
    assert derive_levels(2) == fresh[:3]
    assert calls == []
    derive_levels(4)
    assert len(calls) == 1


def test_install_levels_validates():
    with pytest.raises(ValueError):
        install_levels(frozen_levels("symbolic")[1:])
    install_levels(frozen_levels("symbolic"))
    with pytest.raises(ValueError):
        derive_levels(-1)


# flows and time matrices ------------------------------------------------------

@pytest.mark.parametrize("mu", MU_MODES)
def test_flows_match_frozen(mu):
    for n in range(3):
        assert [str(x) for x in build_flow(n, mu=mu).rhs] == FROZEN["flows"][str(mu)][str(n)]


def test_first_flow():
    assert build_flow(0).rhs == (2 * p, -2 * q, alpha, -beta, 2 * p + 4 * r, -2 * q - 4 * s)


def test_second_flow_at_mu_zero():
    flow = build_flow(2, mu=0)
    assert flow.rhs[0] == parse("1/2*p_xx - p^2*q - 2*p*alpha*beta + 2*alpha*alpha_x")
    assert [x.parity for x in flow.rhs] == ["even", "even", "odd", "odd", "even", "even"]
    assert not any(x.mu_degree for x in flow.rhs)


def test_time_matrix():
    N2 = build_time_matrix(2)
    assert N2[0, 0][2] == DiffPoly.one()
    assert N2[0, 0][1].is_zero
    assert N2[0, 3][1] == p + 2 * r
    assert N2[2, 3][1] == 2 * (p + r)
    assert N2.grading_violations() == []
    N0 = build_time_matrix(0)
    assert N0[0, 0] == LaurentPoly.const(1) and N0[2, 2] == LaurentPoly.const(2)


def test_modification_is_diagonal():
    D = modification_term(derive_levels(3)[3])
    off = [(i, j) for i, j, _ in D.nonzero_entries() if i != j]
    assert off == []
    assert D[4, 4].is_zero
    assert modification_term(derive_levels(3, 0)[3], 0).is_zero


@pytest.mark.parametrize("mu", MU_MODES)
@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_zero_curvature(n, mu):
    assert zero_curvature_residual(n, mu).is_zero


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_h_identity(n):
    assert h_identity_residual(n).is_zero


def test_zero_curvature_detects_a_wrong_flow(monkeypatch):
    real = hierarchy.build_flow

    def tampered(n, levels=None, mu="symbolic"):
        f = real(n, levels, mu)
        return hierarchy.FlowSystem(n, (f.rhs[0] + var("p_x"),) + f.rhs[1:])
    monkeypatch.setattr(hierarchy, "build_flow", tampered)
    res = zero_curvature_residual(2)
    assert not res.is_zero
    assert (0, 1) in [(i, j) for i, j, _ in res.nonzero_entries()]
    rep = hierarchy.verify_zero_curvature((2,))
    assert not rep.passed


# recursion operator ---------------------------------------------------------

@pytest.mark.parametrize("mu", MU_MODES)
def test_recursion_operator_steps_levels(mu):
    L = build_recursion_operator(mu)
    lv = derive_levels(4, mu)
    for m in range(1, 4):
        assert L.apply(lv[m].vector()) == lv[m + 1].vector()


def test_recursion_operator_at_mu_zero_has_no_h():
    L = build_recursion_operator(0)
    for row in L.rows:
        for op in row:
            assert all(mu_free(c) for c in op.local.values())
            assert all(mu_free(c) for c in op.words.values())


def test_L3_block_row():
    L = build_recursion_operator()
    # row 3 of the block (beta Dinv p - alpha, -beta Dinv q) on (p_x, q_x)
    x = L[2, 0].apply(var("p_x")) + L[2, 1].apply(var("q_x"))
    assert x == beta * (p * p - q * q) / 2 - alpha * var("p_x")


@pytest.mark.parametrize("n", [1, 2, 3])
def test_flow_from_recursion_operator(n):
    """The flow built from L^n applied to level 1 equals the direct flow."""
    L = build_recursion_operator()
    vec = derive_levels(1)[1].vector()
    for _ in range(n):
        vec = L.apply(vec)
    lv = derive_levels(n + 1)[n + 1]
    assert vec == lv.vector()
    c, b, de, rho, g, f = vec
    me = DiffPoly.mu() * lv.e
    combined = (2 * b - 4 * p * me, -2 * c + 4 * q * me, rho - 2 * alpha * me,
                -de + 2 * beta * me, 2 * f - 4 * r * me, -2 * g + 4 * s * me)
    assert build_flow(n).rhs == combined


def test_stationary_matrix_is_graded():
    levels = derive_levels(3)
    N = hierarchy.stationary_matrix(levels)
    assert isinstance(N, SuperMatrix) and N.grading == GRADING_41
    assert N.grading_violations() == []
