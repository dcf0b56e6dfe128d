"""Scenario-driven command-line front end.

Each command runs one section of checks on a scenario and writes a JSON
report. Exit codes: 0 all applicable checks pass, 1 some check fails,
2 the scenario cannot be parsed, 3 a module precondition is violated,
4 a numerical ambiguity was flagged (the report is still written).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from vnlab import __version__
from vnlab.config import DEFAULT_TOLERANCE
from vnlab.config import tolerance as tolerance_scope
from vnlab.crossed import (
    convolution_product,
    crossed_center_check,
    crossed_product,
    dual_coaction,
    fourier_range_dim,
    inner_fourier,
    involution,
    op_fourier,
    pi_alpha,
    semi_duality_check,
    semi_duality_witness,
    takesaki_duality_check,
    theorem1_split_check,
)
from vnlab.dynsys import (
    classify_type,
    is_ergodic,
    is_free,
    modular_spectrum,
    proposition2_check,
    proposition3_check,
)
from vnlab.errors import NumericalAmbiguityError, PreconditionError
from vnlab.groups import DualGroup, fourier_transform
from vnlab.io import REPORT_SCHEMA, ScenarioError, encode_matrix, load_scenario, parse_scenario, to_jsonable
from vnlab.kt import (
    EW_checks,
    build_V,
    build_V_prime,
    build_W,
    coupling_EstarV,
    fourier_conjugacy_residual,
    intertwining_residuals,
    modified_pentagon_residual,
    representation_from_generators,
    spectral_measure,
)
from vnlab.measure import (
    instrument,
    instrument_via_invariant_mean,
    outcome_distribution,
    perfect_correlation_check,
    post_state,
    repeatability_check,
    sample_outcomes,
)
from vnlab.modular import (
    cocycle_chain_residual,
    connes_cocycle,
    connes_cocycle_operator_residual,
    dual_weight_check,
    kms_check,
    left_hilbert_algebra_check,
    relative_modular,
    standard_form,
)
from vnlab.vna import (
    OperatorAlgebra,
    StateOnAlgebra,
    center,
    central_support,
    commutant,
    generate,
    intersect,
    is_masa,
    qc_channel,
    wedderburn,
)

COMMANDS = ["sectors", "measure", "crossed-product", "duality-check", "theorem1", "classify", "verify-props", "modular"]
EXIT_PASS, EXIT_FAIL, EXIT_PARSE, EXIT_PRECONDITION, EXIT_AMBIGUITY = 0, 1, 2, 3, 4
SHOTS = 1000


class NotApplicable(Exception):
    """The scenario lacks what a section needs."""


def _num(x):
    """Residuals rounded to three significant digits so reports stay stable."""
    return float(f"{float(x):.2e}")


class Section:
    def __init__(self, name, tol):
        self.name = name
        self.tol = tol
        self.checks = []
        self.details = {}

    def check(self, name, residual=None, passed=None, threshold=None, invariants=(), verdict=None):
        """Record one check; ``passed`` defaults to residual <= threshold (10 tol)."""
        if verdict is None:
            if passed is None:
                threshold = 10 * self.tol if threshold is None else threshold
                passed = residual is not None and residual <= threshold
            verdict = "pass" if passed else "fail"
        entry = {"name": name, "verdict": verdict}
        if residual is not None:
            entry["residual"] = _num(residual)
        if invariants:
            entry["invariants"] = list(invariants)
        self.checks.append(entry)
        return verdict == "pass"

    def as_dict(self):
        verdicts = [c["verdict"] for c in self.checks]
        status = "fail" if "fail" in verdicts else ("pass" if "pass" in verdicts else "not-applicable")
        return {"status": status, "checks": self.checks, "details": to_jsonable(self.details)}


def _rng(seed, salt):
    return np.random.default_rng([seed, salt])


def _abstract(inv):
    return "{" + ", ".join(f"({n},1)" for n in inv.abstract) + "}"


def _random_faithful_density(d, rng, M):
    x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = x @ x.conj().T + 0.5 * np.eye(d)
    rho = M.project(rho / np.trace(rho).real)
    return (rho + rho.conj().T) / 2


# sections


def run_sectors(scn, sec):
    M = scn.algebra
    sec.check("algebra_closure", residual=max(M.closure_residuals().values()))
    inv = M.invariant
    sec.details["invariant"] = inv
    sec.details["sectors"] = [
        {"block_size": s.block_size, "multiplicity": s.multiplicity, "rank": s.rank} for s in M.sectors
    ]
    comm = commutant(M)
    dual_pairs = sorted([m, n] for n, m in inv.as_list())
    sec.check(
        "commutant_swaps_block_data",
        passed=sorted(comm.invariant.as_list()) == dual_pairs,
        invariants=["M' has blocks (m, n) where M has (n, m)"],
    )
    z = center(M)
    sec.details["center_dim"] = z.dim
    sec.check("center_dim_equals_sector_count", passed=z.dim == len(M.sectors))
    zc = intersect(M, comm)
    sec.check("center_is_M_cap_commutant", residual=z.distance(zc) if z.dim == zc.dim else 1.0)
    w = wedderburn(M)
    rng = _rng(scn.seed, 1)
    x = M.random_element(rng)
    sec.check("wedderburn_round_trip", residual=float(np.linalg.norm(w.lift(w.reduce(x)) - x)))
    worst = 0.0
    for k, s in enumerate(M.sectors):
        e = w.matrix_unit(k, 0, 0)
        worst = max(worst, float(np.linalg.norm(central_support(e, M) - s.projection)))
    sec.check("central_support_of_minimal_projection", residual=worst)
    if scn.masa is not None:
        sec.check("declared_masa_is_maximal_abelian", passed=is_masa(scn.masa, M))
    if scn.state is not None:
        state = StateOnAlgebra(scn.state)
        mu = qc_channel(state, M)
        direct = np.array([np.trace(state.rho @ s.projection).real for s in M.sectors])
        sec.details["sector_distribution"] = [_num(p) for p in mu]
        sec.check("qc_channel_normalized", residual=abs(mu.sum() - 1))
        sec.check("qc_channel_matches_direct_evaluation", residual=float(np.max(np.abs(mu - direct))))


def _group_checks(scn, sec):
    g = scn.group
    f = fourier_transform(g)
    sec.check("fourier_unitary", residual=float(np.linalg.norm(f @ f.conj().T - np.eye(g.order))))
    dual = DualGroup(g)
    sec.check("double_dual_is_identity", passed=dual.double_dual_map() == list(range(g.order)))
    V, W, Vp = build_V(dual), build_W(g), build_V_prime(g)
    for op in (V, W, Vp):
        sec.check(f"pentagon_{op.variant}", residual=op.pentagon_residual())
        sec.check(f"unitary_{op.variant}", residual=op.unitarity_residual())
    sec.check("fourier_conjugacy_W_V", residual=fourier_conjugacy_residual(g))
    rv, rw = intertwining_residuals(g)
    sec.check("intertwining_V", residual=rv)
    sec.check("intertwining_W", residual=rw)
    return dual, V


def run_measure(scn, sec):
    action = scn.action
    if not action.inner:
        raise NotApplicable("measurement needs an inner action (implementing unitaries in M)")
    dual, V = _group_checks(scn, sec)
    g = scn.group
    gens = [action.unitaries[g.index(x)] for x in g.generators]
    representation_from_generators(g, gens)
    A = scn.masa if scn.masa is not None else generate(list(action.unitaries), d=scn.d)
    E = spectral_measure(A, action.unitaries, g)
    sec.details["atom_characters"] = E.characters
    sec.details["injective"] = E.injective
    sec.check("spectral_reconstruction", residual=E.reconstruction_residual())
    # the coupling is built from the (possibly corrupted) labelling, correlation is
    # always judged against the true characters
    labelled = E
    swap = scn.controls.get("swap_characters")
    if swap is not None:
        labelled = E.with_swapped_characters(*swap)
        sec.details["control"] = f"characters of atoms {swap[0]} and {swap[1]} swapped"
    C = coupling_EstarV(labelled, dual)
    n = g.order
    sec.check("coupling_modified_pentagon", residual=modified_pentagon_residual(C, V.matrix, scn.d, n))
    pc = perfect_correlation_check(C, E)
    sec.details["perfect_correlation"] = [{**r, "residual": _num(r["residual"])} for r in pc]
    sec.details["perfect_correlation_exact"] = all(r["passed"] for r in pc)
    sec.check("perfect_correlation", residual=max(r["residual"] for r in pc), threshold=1e-10)
    for key, val in EW_checks(E, rng=_rng(scn.seed, 2)).items():
        sec.check(f"EW_{key}", residual=val)
    if scn.state is None:
        return
    state = StateOnAlgebra(scn.state)
    p = outcome_distribution(state, E, C)
    born = np.zeros(n)
    for a in E.atoms:
        born[a.character] += np.trace(state.rho @ a.projection).real
    sec.details["outcome_distribution"] = [_num(x) for x in p]
    sec.check("probabilities_sum_to_one", residual=abs(p.sum() - 1))
    sec.check("born_rule", residual=float(np.max(np.abs(p - born))), threshold=1e-10)
    eye = np.eye(scn.d)
    total = instrument(range(n), state, eye, C, n)
    sec.check("instrument_total_mass", residual=abs(total - 1))
    worst = 0.0
    for k in range(n):
        worst = max(worst, abs(instrument([k], state, eye, C, n) - instrument_via_invariant_mean([k], state, eye, C, g)))
    sec.check("neutral_position_is_invariant_mean", residual=worst)
    worst = 0.0
    atoms = []
    for k, a in enumerate(E.atoms):
        r = post_state([a.character], state, C, n)
        atoms.append({
            "atom": k,
            "character": a.character,
            "probability": _num(r.probability),
            "post_state": encode_matrix(r.normalized, digits=9) if r.defined else None,
        })
        if r.defined:
            z = a.projection
            expect = z @ state.rho @ z / r.probability
            worst = max(worst, float(np.linalg.norm(r.normalized - expect)))
    sec.details["atoms"] = atoms
    sec.check("post_state_is_normalized_projection", residual=worst, threshold=1e-10)
    rep = repeatability_check(state, E, C)
    sec.check("repeatability", residual=rep["residual"], threshold=1e-10)
    sec.details["sampled_counts"] = sample_outcomes(state, E, SHOTS, seed=scn.seed, coupling=C).tolist()


def run_crossed(scn, sec):
    M, action = scn.algebra, scn.action
    C = crossed_product(M, action)
    for key, val in C.residuals.items():
        sec.check(f"action_{key}", residual=val)
    sec.details["invariant"] = C.invariant
    sec.details["dim"] = C.algebra.dim
    hat = dual_coaction(C)
    for key, val in hat.residuals.items():
        sec.check(f"dual_action_{key}", residual=val)
    sec.check("fourier_range_spans_crossed_product", passed=fourier_range_dim(action) == C.algebra.dim)
    rng = _rng(scn.seed, 3)
    n = scn.group.order
    X = np.array([M.random_element(rng) for _ in range(n)])
    Y = np.array([M.random_element(rng) for _ in range(n)])
    XY = convolution_product(X, Y, action)
    sec.check("fourier_multiplicative", residual=float(np.linalg.norm(op_fourier(XY, action) - op_fourier(X, action) @ op_fourier(Y, action))))
    sec.check("fourier_adjoint", residual=float(np.linalg.norm(op_fourier(involution(X, action), action) - op_fourier(X, action).conj().T)))
    x, y = M.random_element(rng), M.random_element(rng)
    sec.check("pi_multiplicative", residual=float(np.linalg.norm(pi_alpha(action, x @ y) - pi_alpha(action, x) @ pi_alpha(action, y))))
    if action.inner:
        sec.check("inner_fourier_multiplicative", residual=float(np.linalg.norm(inner_fourier(XY, action) - inner_fourier(X, action) @ inner_fourier(Y, action))))
        cc = crossed_center_check(C)
        sec.details["center_dim"] = cc["center_dim"]
        sec.check("center_formula", residual=cc["distance"], invariants=[f"dim Z = {cc['center_dim']}"])
    else:
        sec.details["center_dim"] = center(C.algebra).dim


def run_duality(scn, sec):
    r = takesaki_duality_check(scn.algebra, scn.action)
    sec.details.update(
        invariant_first=r["invariant_first"],
        invariant_second=r["invariant_second"],
        invariant_target=r["invariant_target"],
        abstract_second=_abstract(r["invariant_second"]),
        abstract_target=_abstract(r["invariant_target"]),
        stabilization_step=r["stabilization_step"],
    )
    sec.check(
        "second_crossed_product_matches_M_tensor_B",
        passed=r["match"],
        invariants=[_abstract(r["invariant_second"]), _abstract(r["invariant_target"])],
    )
    for key, val in r["dual_action_residuals"].items():
        sec.check(f"dual_action_{key}", residual=val)


def run_theorem1(scn, sec):
    if scn.masa is None:
        raise NotApplicable("no MASA declared")
    r = theorem1_split_check(scn.algebra, scn.action, scn.masa)
    sec.details["hypotheses"] = r["hypotheses"]
    if not r["hypotheses_hold"]:
        sec.check("amplification", verdict="not-applicable")
        sec.check("reconstruction", verdict="not-applicable")
    else:
        amp, rec = r["amplification"], r["reconstruction"]
        sec.check("amplification", verdict=amp["verdict"], invariants=[str(amp["crossed_product"]), str(amp["target"])])
        sec.check(
            "reconstruction",
            verdict=rec["verdict"],
            invariants=[_abstract(rec["second_crossed_product"]), _abstract(rec["target"])],
        )
        sec.check("transport_isomorphism", residual=rec["isomorphism_residual"])
        sec.details["central_permutation"] = rec["central_permutation"]
        sec.details["representation"] = rec["representation"]
    v = semi_duality_witness(scn.action, seed=scn.seed)
    if v is None:
        sec.check("semi_duality_witness", verdict="not-applicable")
        return
    res = semi_duality_check(scn.action, v)
    sec.check("semi_duality_witness", residual=res["residual"], passed=res["holds"])
    trivial = semi_duality_check(scn.action, np.eye(v.shape[0]))
    sec.check("identity_is_not_a_witness", passed=not trivial["holds"])


def _need_system(scn):
    if scn.system is None:
        raise NotApplicable("no abelian dynamical system in the scenario")
    return scn.system


def run_classify(scn, sec):
    _need_system(scn)
    r = classify_type(scn.covariant)
    sec.details.update(r)
    sec.check("classification_consistent", passed=r["consistent"])
    if r["factor"] and r["centrally_ergodic"]:
        sec.check("type_I_with_flow_isomorphism", passed=r["type"] == "I" and r["flow_isomorphism"] is not None)
    measure = r["invariant_measure"]
    sec.check("invariant_measure_exists", passed=measure is not None)


def run_props(scn, sec):
    system = _need_system(scn)
    free, ergodic = is_free(system), is_ergodic(system)
    sec.details.update(free=free, ergodic=ergodic, faithful=system.is_faithful, orbits=system.orbits())
    r2 = proposition2_check(system)
    sec.details["crossed_product_invariant"] = r2["invariant"]
    sec.check("free_iff_masa", verdict=r2["clause_i"], invariants=[f"free={free}", f"masa={r2['masa']}"])
    sec.check("factor_iff_ergodic_when_free", verdict=r2["clause_ii_factor"])
    sec.check("center_is_fixed_points_when_free", verdict=r2["clause_ii_center"])
    if ergodic and system.is_faithful:
        sec.check("ergodic_faithful_implies_free", passed=free)
    r3 = proposition3_check(scn.covariant)
    sec.details["centrally_free"] = r3["centrally_free"]
    sec.details["relations"] = r3["relations"]
    sec.details["center_chain"] = r3["center_chain"]
    for key, val in r3["relations"].items():
        verdict = val["verdict"] if r3["covered_by_hypothesis"] else "not-applicable"
        sec.check(key, verdict=verdict, residual=val["residual"])
    for key, val in r3["center_chain"].items():
        verdict = val["verdict"] if isinstance(val, dict) else val
        sec.check(key, verdict=verdict if r3["covered_by_hypothesis"] else "not-applicable")


def run_modular(scn, sec):
    if scn.faithful_state is None:
        raise NotApplicable("no faithful state declared")
    M = scn.algebra
    sf = standard_form(M, scn.faithful_state)
    for key, val in sf.invariants().items():
        sec.check(key, residual=val)
    sec.details["delta_spectrum"] = [_num(x) for x in sf.spectrum()]
    rng = _rng(scn.seed, 4)
    worst = max(kms_check(sf, M.random_element(rng), M.random_element(rng)) for _ in range(5))
    sec.check("kms", residual=worst)
    psi = _random_faithful_density(scn.d, rng, M)
    chi = _random_faithful_density(scn.d, rng, M)
    rho = sf.rho
    rel, _ = relative_modular(psi, rho, M)
    sec.check("relative_modular_positive", passed=bool(np.linalg.eigvalsh(rel).min() > 0))
    times = (0.3, 1.0, float(np.sqrt(2)))
    sec.check("cocycle_chain_rule", residual=max(cocycle_chain_residual(psi, rho, chi, M, t) for t in times))
    sec.check("cocycle_operator_form", residual=max(connes_cocycle_operator_residual(psi, rho, M, t) for t in times))
    u = connes_cocycle(psi, rho, M, 0.7)
    sec.check("cocycle_unitary", residual=float(np.linalg.norm(u @ u.conj().T - np.eye(scn.d))))
    dw = dual_weight_check(scn.action, rho, times)
    for key in ("sigma_pi", "sigma_lambda", "tomita_delta", "conjugation"):
        sec.check(f"dual_weight_{key}", residual=dw[key])
    sec.details["state_invariant_under_action"] = dw["invariant_state"]
    for key, val in left_hilbert_algebra_check(scn.action, rho, seed=scn.seed).items():
        sec.check(f"left_hilbert_algebra_{key}", residual=val)
    if scn.system is not None:
        ms = modular_spectrum(scn.system, scn.weights)
        sec.details["modular_spectrum"] = [_num(x) for x in ms["spectrum"]]
        sec.details["modular_spectrum_note"] = ms["note"]
        sec.check("modular_spectrum_contains_one", passed=any(abs(x - 1) < 1e-6 for x in ms["spectrum"]))


SECTIONS = {
    "sectors": run_sectors,
    "measure": run_measure,
    "crossed-product": run_crossed,
    "duality-check": run_duality,
    "theorem1": run_theorem1,
    "classify": run_classify,
    "verify-props": run_props,
    "modular": run_modular,
}


def _exit_code(sections, errors):
    kinds = {e["kind"] for e in errors}
    if "precondition" in kinds:
        return EXIT_PRECONDITION
    if "ambiguity" in kinds:
        return EXIT_AMBIGUITY
    if any(s["status"] == "fail" for s in sections.values()):
        return EXIT_FAIL
    return EXIT_PASS


def run(command, scenario_path, tolerance=None, seed=None):
    """Run ``command`` on a scenario file; returns (exit_code, report dict)."""
    start = time.perf_counter()
    report = {
        "schema": REPORT_SCHEMA,
        "tool_version": __version__,
        "command": command,
        "scenario_file": Path(scenario_path).name,
    }
    try:
        data = load_scenario(scenario_path)
        report["scenario"] = data
        tol = _pick_tolerance(tolerance, data)
        with tolerance_scope(tol) as used_tol:
            report["tolerance"] = used_tol
            scn = parse_scenario(data, name=Path(scenario_path).stem)
            if seed is not None:
                scn.seed = seed
            report["seed"] = scn.seed
            return _run_sections(command, scn, used_tol, report, start)
    except ScenarioError as exc:
        report["errors"] = [{"kind": "parse", "message": str(exc)}]
        report["exit_code"] = EXIT_PARSE
    except PreconditionError as exc:
        report["errors"] = [{"kind": "precondition", "stage": "scenario", "message": str(exc)}]
        report["exit_code"] = EXIT_PRECONDITION
    report["timing"] = {"total_seconds": round(time.perf_counter() - start, 3)}
    return report["exit_code"], report


def _pick_tolerance(flag, data):
    """The --tolerance flag wins over the scenario's override, which wins over the default."""
    tol = flag
    if tol is None and isinstance(data, dict):
        tol = data.get("tolerance")
    if tol is None:
        return DEFAULT_TOLERANCE
    if isinstance(tol, bool) or not isinstance(tol, (int, float)) or not 0 < tol < 1:
        raise ScenarioError(f"tolerance must be a number in (0, 1), got {tol!r}")
    return float(tol)


def _run_sections(command, scn, tol, report, start):
    names = COMMANDS if command == "all" else [command]
    sections, errors, timing = {}, [], {}
    for name in names:
        t0 = time.perf_counter()
        sec = Section(name, tol)
        try:
            SECTIONS[name](scn, sec)
            sections[name] = sec.as_dict()
        except NotApplicable as exc:
            if command != "all":
                errors.append({"kind": "precondition", "stage": name, "message": str(exc)})
            sections[name] = {"status": "not-applicable", "reason": str(exc), "checks": sec.checks, "details": {}}
        except NumericalAmbiguityError as exc:
            errors.append({"kind": "ambiguity", "stage": name, "message": str(exc)})
            sections[name] = {"status": "ambiguous", "checks": sec.checks, "details": to_jsonable(sec.details)}
        except PreconditionError as exc:
            errors.append({"kind": "precondition", "stage": name, "message": str(exc)})
            sections[name] = {"status": "precondition-failed", "checks": sec.checks, "details": to_jsonable(sec.details)}
        timing[name] = round(time.perf_counter() - t0, 3)
    all_checks = [c for s in sections.values() for c in s["checks"]]
    report["sections"] = sections
    report["summary"] = {
        v: sum(1 for c in all_checks if c["verdict"] == v) for v in ("pass", "fail", "not-applicable")
    }
    report["errors"] = errors
    report["exit_code"] = _exit_code(sections, errors)
    timing["total_seconds"] = round(time.perf_counter() - start, 3)
    report["timing"] = timing
    return report["exit_code"], report


def dumps(report):
    return json.dumps(report, indent=2, sort_keys=True)


def build_parser():
    p = argparse.ArgumentParser(prog="vnlab", description="Finite-dimensional operator-algebra checks on scenario files.")
    p.add_argument("--version", action="version", version=f"vnlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS + ["all"]:
        s = sub.add_parser(name, help=f"run the {name} checks" if name != "all" else "run every section in order")
        s.add_argument("scenario", help="path to a scenario JSON file")
        s.add_argument("--tolerance", type=float, default=None, help="numerical tolerance (default 1e-9)")
        s.add_argument("--seed", type=int, default=None, help="random seed (default 0 or the scenario's)")
        s.add_argument("--output", default=None, help="write the report here instead of stdout")
        s.add_argument("--format", choices=["json"], default="json")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code not in (0, None) else 0
    code, report = run(args.command, args.scenario, tolerance=args.tolerance, seed=args.seed)
    text = dumps(report)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    summary = report.get("summary", {})
    print(
        f"vnlab {args.command} {Path(args.scenario).name}: exit {code} "
        f"(pass {summary.get('pass', 0)}, fail {summary.get('fail', 0)}, n/a {summary.get('not-applicable', 0)})",
        file=sys.stderr,
    )
    return code


if __name__ == "__main__":
    sys.exit(main())
