"""Regenerate src/superakns/data/errata.json from the engine.

Each entry pairs a printed value with the value the engine derives and a
short resolution note. Run after any change to the derivation code and
review the diff by hand before committing.
"""

import json
from pathlib import Path

from superakns.diffring import to_text
from superakns.numcheck import structural_asymmetry
from superakns.hamiltonian import build_J, build_J_composed, build_P_expected, build_Q, build_R
from superakns.hierarchy import build_flow, build_recursion_operator, build_time_matrix, derive_levels

DATA = Path(__file__).resolve().parents[1] / "src" / "superakns" / "data"

NOTES = {
    "levels.1.f": "recursion with a0 = e0 = 1 gives f1 = r*a0 + (p+r)*e0 = p+2r; corroborated by the lambda part of N14 of the second time matrix",
    "levels.1.g": "same as f1: g1 = s*a0 + (q+s)*e0 = q+2s",
    "levels.2.f": "printed value is the recursion applied to the misprinted f1",
    "levels.2.g": "printed value is the recursion applied to the misprinted g1",
    "time_matrix_2.N14": "constant part inherits the f2 misprint",
    "time_matrix_2.N23": "constant part inherits the g2 misprint",
    "time_matrix_2.N34": "constant part inherits the f2 misprint",
    "time_matrix_2.N43": "constant part inherits the g2 misprint",
    "time_matrix_2.N15": "constant part should be rho2 = alpha_x - h*alpha; printed carries a spurious factor 1/2",
    "time_matrix_2.N25": "constant part should be delta2 = -beta_x - h*beta; printed carries a spurious factor 1/2",
    "flow_2.p": "mu-linear odd terms differ; derived flow is certified by the zero-curvature residual",
    "flow_2.q": "mu-linear terms differ; derived flow is certified by the zero-curvature residual",
    "flow_2.alpha": "printed line disagrees already at mu = 0 (q-terms in place of p*beta terms)",
    "flow_2.beta": "printed line disagrees already at mu = 0",
    "flow_2.r": "mu-linear odd terms differ",
    "flow_2.s": "mu-linear and mu^2 odd terms differ; the printed line also lacks a '+' before the mu bracket",
    "component_system.A": "the stationary equation gives +alpha*delta, consistent with the recursion for a_m",
}


def main():
    values = json.loads((DATA / "printed_values.json").read_text())
    levels = derive_levels(3)
    entries = []

    def add(location, printed, derived, note, kind="value"):
        entries.append({"location": location, "kind": kind, "printed": printed,
                        "derived": derived, "resolution": note})

    for loc in ("levels.1.f", "levels.1.g", "levels.2.f", "levels.2.g"):
        _, m, q = loc.split(".")
        add(loc, values["levels"][m][q], to_text(getattr(levels[int(m)], q)), NOTES[loc])

    N = build_time_matrix(2, modified=False)
    index = {"N14": (0, 3), "N15": (0, 4), "N23": (1, 2), "N25": (1, 4), "N34": (2, 3), "N43": (3, 2)}
    for key, (i, j) in sorted(index.items()):
        loc = f"time_matrix_2.{key}"
        derived = [[k, to_text(N[i, j][k])] for k in sorted(N[i, j].coeffs, reverse=True)]
        add(loc, values["time_matrix_2"][key], derived, NOTES[loc], kind="laurent")

    flow = build_flow(2).as_dict()
    for f in ("p", "q", "alpha", "beta", "r", "s"):
        loc = f"flow_2.{f}"
        add(loc, values["flow_2"][f], to_text(flow[f]), NOTES[loc])

    add("component_system.A", values["component_system"]["A"],
        [[0, "p*C-q*B+alpha*delta+beta*rho"]], NOTES["component_system.A"], kind="laurent")

    # operator entries
    J, JC = build_J(), build_J_composed()
    for i in range(6):
        for j in range(6):
            if J[i, j] != JC[i, j]:
                add(f"operator.J.{i + 1}{j + 1}", J[i, j].to_text(), JC[i, j].to_text(),
                    "coefficient of mu*p*Dinv*q in the J1 block is 8, not 4; the composition Q o R and skew-adjointness both require 8",
                    kind="operator")
    P = build_P_expected()
    QLR = build_Q() @ build_recursion_operator() @ build_R()
    for i in range(6):
        for j in range(6):
            diff = P[i, j] - QLR[i, j]
            if diff:
                add(f"operator.P.{i + 1}{j + 1}", "printed entry (see operator table)", (diff).to_text(),
                    "candidate erratum: printed entry minus the normal form of Q o L o R is nonzero (difference recorded)",
                    kind="operator-difference")

    formulas = [
        ("formula.a_recursion", "a_m = Dinv(r*c_m - q*b_m + alpha*delta_m + beta*rho_m)",
         "a_m = Dinv(p*c_m - q*b_m + alpha*delta_m + beta*rho_m)",
         "the printed integrand is not exact at m = 1 (r*q - p*q); the derivative line of the recursion has p"),
        ("formula.initial_conditions", "a0 = e0 = 1, b0 = c0 = e0 = f0 = g0 = rho0 = delta0 = 0",
         "a0 = e0 = 1, b0 = c0 = f0 = g0 = rho0 = delta0 = 0",
         "e0 is listed twice; e0 = 1 is the only choice reproducing b1 = p and the lambda parts of the second time matrix"),
        ("formula.gradient_odd_rows", "(2*delta + 4*mu*beta*W, -2*rho - 4*mu*alpha*W) with W = 2a+e",
         "left derivative: (2*delta - 4*mu*beta*W, -2*rho + 4*mu*alpha*W); right derivative: (-2*delta + 4*mu*beta*W, 2*rho - 4*mu*alpha*W)",
         "for n >= 1 the printed odd rows are not the variational derivative of the printed functional in either convention; they are the vector that R and J act on"),
        ("formula.supertrace_order", "Str(dM/du N) in the trace identity",
         "Str(N dM/du) under the right derivative (equivalently Str(dM/du N) under the left derivative)",
         "the printed supertrace lines equal Str(dM/du N) with right derivatives, but the identity only holds with the rotated order for odd u"),
        ("formula.hamiltonian_index", "u_t = J dH_n/du and u_t = P dH_{n-1}/du",
         "u_t = J G_{n+1} and u_t = P G_n",
         "by the gradient relation the vector at level n+1 corresponds to H_{n+1}, so the printed subscripts are one lower"),
    ]
    formulas.append((
        "time_matrix_2.modification", "the Lax pair of the second flow is M and the listed N^(2)",
        "N^(2) = listed matrix - 2*mu*e3*diag(1, -1, 1, -1, 0)",
        "the listed entries are the polynomial part only; zero curvature fails without the modification term when mu != 0"))
    for loc, printed, derived, note in formulas:
        add(loc, printed, derived, note, kind="formula")

    lopsided = structural_asymmetry(JC)
    add("operator.J.skew", "J is skew-adjoint (Hamiltonian)",
        json.dumps(lopsided),
        "the entries listed are nonzero in Q o R (and in the printed J) while their transposed entries vanish, "
        "so J is not skew-adjoint once mu != 0; at mu = 0 it is", kind="structure")

    out = {"version": 1, "entries": entries}
    (DATA / "errata.json").write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(entries)} entries")


if __name__ == "__main__":
    main()
