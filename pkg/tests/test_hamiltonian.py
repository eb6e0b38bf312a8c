import pytest

from superakns import hamiltonian
from superakns.diffring import DiffPoly, d_total, parse, var
from superakns.hamiltonian import (HamiltonianFunctional, build_J, build_J_composed, build_J_corrected,
                                   build_P_expected, build_Q, build_R, gradient_vector, hamiltonian as H,
                                   verify_bi_hamiltonian, verify_hamiltonian_form,
                                   verify_supertrace_identity)
from superakns.hierarchy import build_flow, build_recursion_operator, derive_levels
from superakns.operators import NonlocalOperator, parse_operator

FLOW_PARITY = ["even", "even", "odd", "odd", "even", "even"]


def statuses(rep):
    return {e["check"]: e["status"] for e in rep.entries}


# operators as printed ----------------------------------------------------------

def test_R_at_mu_zero_is_local_and_constant():
    R0 = build_R(0)
    for row in R0.rows:
        for op in row:
            assert not op.words and set(op.local) <= {0}


def test_Q_at_mu_zero_pairs_blocks():
    Q0 = build_Q(0)
    assert all(not op.words for row in Q0.rows for op in row)
    assert Q0[0, 1] == parse_operator("2") and Q0[1, 0] == parse_operator("-2")
    assert Q0[2, 3] == parse_operator("1") and Q0[3, 2] == parse_operator("-1")


def test_J_entry():
    assert build_J()[0, 1] == parse_operator("2 - 4*mu*p*Dinv*q")


def test_J3_block_on_odd_components():
    lv = derive_levels(2)[2]
    J = build_J()
    block = NonlocalOperator([[J[2, 2], J[2, 3]], [J[3, 2], J[3, 3]]])
    assert block.apply([lv.delta, lv.rho]) == [-lv.rho / 2, -lv.delta / 2]


def test_printed_J_differs_from_composition_in_three_entries():
    J, JC = build_J(), build_J_composed()
    diff = [(i + 1, j + 1) for i in range(6) for j in range(6) if J[i, j] != JC[i, j]]
    assert diff == [(1, 2), (1, 6), (5, 2)]
    assert JC[0, 1] == parse_operator("2 - 8*mu*p*Dinv*q")
    assert build_J_corrected() == JC


def test_J_and_composition_agree_at_mu_zero():
    assert build_J(0) == build_J_composed(0)


@pytest.mark.parametrize("builder", [build_R, build_Q, build_J_corrected, build_recursion_operator])
def test_parity_discipline(builder):
    lv = derive_levels(3)[3]
    G = gradient_vector(lv)
    assert [x.parity for x in G] == FLOW_PARITY
    vec = [lv.c, lv.b, lv.delta, lv.rho, lv.g, lv.f]
    arg = G if builder in (build_R, build_J_corrected) else vec
    out = builder().apply(arg)
    assert [x.has_parity(want) for x, want in zip(out, FLOW_PARITY)] == [True] * 6


@pytest.mark.parametrize("n", [1, 2, 3])
def test_gradient_recursion(n):
    lv = derive_levels(n + 1)[n + 1]
    assert build_R().apply(gradient_vector(lv)) == lv.vector()


def test_P_expected_parses_all_entries():
    P = build_P_expected()
    assert P.shape == (6, 6)
    assert not P[0, 0].is_zero


# functionals ------------------------------------------------------------------

def test_hamiltonian_density():
    lv = derive_levels(3)
    assert H(2).density == (lv[3].a * 2 + lv[3].e) * -1
    with pytest.raises(ValueError):
        H(0)


def test_functional_equivalence_modulo_total_derivatives():
    f = HamiltonianFunctional(1, parse("p*q_x"))
    g = HamiltonianFunctional(1, parse("-p_x*q"))
    assert f.equivalent(g)
    assert not f.equivalent(HamiltonianFunctional(1, parse("p*q")))
    assert HamiltonianFunctional(1, f.density + d_total(var("p") * var("s"))).gradient() == f.gradient()


# verification reports ---------------------------------------------------------

def test_supertrace_identity_report():
    rep = verify_supertrace_identity(3)
    st = statuses(rep)
    lines = ["Str(N dM/dlambda)"] + [f"Str(dM/d{f} N)" for f in ("p", "q", "alpha", "beta", "r", "s")]
    assert [st[k] for k in lines] == ["pass"] * 7
    assert rep.summary["gamma"] == "0"
    for n in range(4):
        assert st[f"identity n={n} with Str(N dM/du)"] == "pass"
        assert st[f"dH{n + 1}/du = Str(N dM/du) at level {n + 1}"] == "pass"
    assert rep.passed


def test_supertrace_odd_rows_fix_the_side(monkeypatch):
    # with left derivatives the odd rows of the formulas no longer hold
    from superakns import diffring
    monkeypatch.setattr(diffring, "SIDE", "left")
    st = statuses(verify_supertrace_identity(0))
    assert st["Str(dM/dalpha N)"] == "fail" and st["Str(dM/dbeta N)"] == "fail"
    assert st["Str(dM/dp N)"] == "pass"


def test_printed_gradient_odd_rows_are_ledgered():
    st = statuses(verify_supertrace_identity(1))
    assert st["printed gradient n=0 row alpha"] == "erratum"
    assert st["printed gradient n=0 row p"] == "pass"


@pytest.mark.parametrize("mu", ["symbolic", 0])
@pytest.mark.parametrize("n", [1, 2])
def test_hamiltonian_form(n, mu):
    rep = verify_hamiltonian_form(n, mu)
    st = statuses(rep)
    assert st["flow = Q (level vector)"] == "pass"
    assert st["flow = (Q o R) (gradient vector)"] == "pass"
    assert st["flow = J (gradient vector), J corrected"] == "pass"
    assert rep.passed
    if mu == 0:
        assert rep.count("erratum") == 0


@pytest.mark.parametrize("n", [2, 3])
def test_bi_hamiltonian(n):
    rep = verify_bi_hamiltonian(n)
    st = statuses(rep)
    assert st["flow = (Q o L) (level-n vector)"] == "pass"
    assert st["flow = (Q o L o R) (level-n gradient)"] == "pass"
    assert rep.summary["P entries differing from Q o L o R"] == 11
    assert rep.passed


def test_bi_hamiltonian_needs_n_two():
    with pytest.raises(ValueError):
        verify_bi_hamiltonian(1)


def test_unledgered_operator_mismatch_fails(monkeypatch):
    blocks = dict(hamiltonian._Q_BLOCKS)
    blocks["Q11"] = [["-4*mu*p*Dinv*r", "3 + 4*mu*p*Dinv*s"], blocks["Q11"][1]]
    monkeypatch.setattr(hamiltonian, "_Q_BLOCKS", blocks)
    rep = verify_hamiltonian_form(1)
    assert not rep.passed
    assert statuses(rep)["flow = Q (level vector)"] == "fail"


def test_flow_equals_direct_combination():
    # J (corrected) applied to the gradient is the flow itself for n = 1..3
    for n in (1, 2, 3):
        lv = derive_levels(n + 1)[n + 1]
        assert build_J_corrected().apply(gradient_vector(lv)) == list(build_flow(n).rhs)


def test_weight_vanishes_at_level_one():
    assert hamiltonian.weight(derive_levels(1)[1]) == DiffPoly.zero()
