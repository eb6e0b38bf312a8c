"""Printed values, the errata ledger, and the three-class comparison.

Every printed quantity is compared with the engine's value and classed as
``match``, ``erratum`` (disagreement recorded in the ledger with exactly
this printed and derived pair) or ``mismatch`` (an unexplained disagreement).
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from typing import Dict, List, Optional, Sequence

from .diffring import DiffPoly, d_total, is_exact, parse, to_text, var
from .hierarchy import (build_M, build_time_matrix, build_flow, derive_levels,
                        h_poly, mu_poly, normalize_mu)
from .report import ERRATUM, FAIL, PASS, Report
from .superlie import GRADING_41, LaurentPoly, SuperMatrix, supercommutator

MATCH, ERRATUM_MATCH, MISMATCH = "match", "erratum", "mismatch"
_STATUS = {MATCH: PASS, ERRATUM_MATCH: ERRATUM, MISMATCH: FAIL}

#: stand-ins for the symbolic entries A..delta of the stationary matrix:
#: jets that do not occur in M, so they are independent of everything M uses
STANDINS = {"A": "p_x", "B": "q_x", "C": "r_x", "E": "s_x", "F": "p_xx", "G": "q_xx",
            "rho": "alpha_x", "delta": "beta_x"}
_N_POSITION = {"A": (0, 0), "B": (0, 1), "C": (1, 0), "E": (0, 2), "F": (0, 3), "G": (1, 2),
               "rho": (0, 4), "delta": (1, 4)}
_TIME_MATRIX_POSITION = {"N11": (0, 0), "N12": (0, 1), "N13": (0, 2), "N14": (0, 3), "N15": (0, 4),
                         "N21": (1, 0), "N23": (1, 2), "N25": (1, 4), "N33": (2, 2), "N34": (2, 3),
                         "N43": (3, 2)}


def _load(name: str) -> dict:
    return json.loads(resources.files("superakns.data").joinpath(name).read_text())


@lru_cache(maxsize=None)
def printed_values() -> dict:
    return _load("printed_values.json")


@lru_cache(maxsize=None)
def errata_ledger() -> dict:
    return _load("errata.json")


def ledger_entry(location: str) -> Optional[dict]:
    for e in errata_ledger()["entries"]:
        if e["location"] == location:
            return e
    return None


def names(mu="symbolic") -> Dict[str, DiffPoly]:
    h = h_poly(mu)
    return {"h": h, "h_x": d_total(h), "mu": mu_poly(mu)}


def standin_names() -> Dict[str, DiffPoly]:
    return {k: var(v) for k, v in STANDINS.items()}


def generic_stationary_matrix() -> SuperMatrix:
    """The stationary matrix with independent stand-ins for its entries."""
    s = standin_names()
    A, B, C, E, F, G, rho, de = (s[k] for k in ("A", "B", "C", "E", "F", "G", "rho", "delta"))
    rows = [
        [A, B, E, F, rho],
        [C, -A, G, -E, de],
        [0, 0, A + E, B + F, 0],
        [0, 0, C + G, -A - E, 0],
        [de, -rho, -de, rho, 0],
    ]
    return SuperMatrix(rows, GRADING_41)


def _laurent(spec, extra) -> LaurentPoly:
    return LaurentPoly({int(k): parse(t, extra) for k, t in spec})


def classify_value(location: str, printed_text, derived, extra) -> str:
    """Class of a printed value (DiffPoly or Laurent spec) against ``derived``."""
    laurent = isinstance(derived, LaurentPoly)
    printed = _laurent(printed_text, extra) if laurent else parse(printed_text, extra)
    if printed == derived:
        return MATCH
    entry = ledger_entry(location)
    if entry is None or entry["printed"] != printed_text:
        return MISMATCH
    expected = _laurent(entry["derived"], extra) if laurent else parse(entry["derived"], extra)
    return ERRATUM_MATCH if expected == derived else MISMATCH


def _add(rep: Report, location: str, cls: str, derived, printed_text):
    details = {"class": cls}
    if cls != MATCH:
        details["printed"] = printed_text
        details["derived"] = (to_text(derived) if isinstance(derived, DiffPoly)
                              else {k: to_text(v) for k, v in derived.coeffs.items()})
        entry = ledger_entry(location)
        if entry is not None:
            details["resolution"] = entry["resolution"]
    rep.add(location, _STATUS[cls], **details)


def compare_levels(n_max: int = 3, mu="symbolic") -> Report:
    mu = normalize_mu(mu)
    rep = Report(f"printed levels (mu={mu})")
    extra = names(mu)
    levels = derive_levels(n_max, mu)
    for m_text, values in sorted(printed_values()["levels"].items()):
        m = int(m_text)
        if m > n_max:
            continue
        for q, text in values.items():
            derived = getattr(levels[m], q)
            loc = f"levels.{m}.{q}"
            _add(rep, loc, classify_value(loc, text, derived, extra), derived, text)
    return rep


def compare_time_matrix(mu="symbolic") -> Report:
    mu = normalize_mu(mu)
    rep = Report(f"printed time matrix n=2 (mu={mu})")
    extra = names(mu)
    # the printed entries are the polynomial part; the modification term is
    # checked separately below
    N = build_time_matrix(2, mu=mu, modified=False)
    for key, (i, j) in _TIME_MATRIX_POSITION.items():
        spec = printed_values()["time_matrix_2"][key]
        loc = f"time_matrix_2.{key}"
        _add(rep, loc, classify_value(loc, spec, N[i, j], extra), N[i, j], spec)
    delta = build_time_matrix(2, mu=mu) - N
    entry = ledger_entry("time_matrix_2.modification")
    if delta.is_zero:
        rep.add("time_matrix_2.modification", PASS)
    else:
        rep.add("time_matrix_2.modification", ERRATUM if entry else FAIL,
                derived=to_text(delta[0, 0][0]),
                resolution=entry["resolution"] if entry else None)
    return rep


def compare_flow(mu="symbolic") -> Report:
    mu = normalize_mu(mu)
    rep = Report(f"printed flow n=2 (mu={mu})")
    extra = names(mu)
    flow = build_flow(2, mu=mu).as_dict()
    for f, text in printed_values()["flow_2"].items():
        loc = f"flow_2.{f}"
        _add(rep, loc, classify_value(loc, text, flow[f], extra), flow[f], text)
    return rep


def compare_component_system(mu="symbolic") -> Report:
    """Right-hand sides of the stationary equation, entry by entry."""
    mu = normalize_mu(mu)
    rep = Report(f"component system (mu={mu})")
    extra = dict(names(mu))
    extra.update(standin_names())
    bracket = supercommutator(build_M(mu), generic_stationary_matrix())
    for key, spec in printed_values()["component_system"].items():
        if key == "comment":
            continue
        i, j = _N_POSITION[key]
        loc = f"component_system.{key}"
        _add(rep, loc, classify_value(loc, spec, bracket[i, j], extra), bracket[i, j], spec)
    return rep


def check_a_formula(mu="symbolic") -> Report:
    """The printed antiderivative formula for a_m against the derivative line."""
    rep = Report("a_m formula")
    levels = derive_levels(2, mu)
    p, q, r, al, be = (var(k) for k in ("p", "q", "r", "alpha", "beta"))
    lv = levels[1]
    printed = r * lv.c - q * lv.b + al * lv.delta + be * lv.rho
    exact = is_exact(printed)
    entry = ledger_entry("formula.a_recursion")
    rep.add("formula.a_recursion m=1", ERRATUM if (not exact and entry) else (PASS if exact else FAIL),
            printed_integrand=to_text(printed), exact=exact,
            resolution=entry["resolution"] if entry else None)
    return rep


def compare_all(n_max: int = 3, mu="symbolic") -> List[Report]:
    mu = normalize_mu(mu)
    reps = [compare_levels(n_max, mu)]
    if n_max >= 3:
        reps += [compare_time_matrix(mu), compare_flow(mu)]
    reps += [compare_component_system(mu), check_a_formula(mu)]
    return reps


def class_counts(reports: Sequence[Report]) -> Dict[str, int]:
    out = {MATCH: 0, ERRATUM_MATCH: 0, MISMATCH: 0}
    for rep in reports:
        for e in rep.entries:
            if "class" in e:
                out[e["class"]] += 1
    return out
