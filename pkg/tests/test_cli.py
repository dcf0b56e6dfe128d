import importlib
import inspect
import json
import sys
from pathlib import Path

import pytest
from report_digest import digest

from vnlab import cli
from vnlab.errors import NumericalAmbiguityError
from vnlab.io import SCENARIO_SCHEMA, bundled_scenarios

FIXTURES = Path(__file__).parent / "fixtures"
SCENARIOS = {p.stem: p for p in bundled_scenarios()}
LIBRARY_MODULES = ["groups", "vna", "kt", "measure", "crossed", "dynsys", "modular", "io"]

# helpers that exist for the test corpus or for callers, not for the pipeline
NOT_CLI_REACHABLE = {
    "dynsys.enumerate_actions": "builds the bundled action corpus",
    "dynsys.load_action_corpus": "reads the bundled action corpus",
    "io.bundled_scenarios": "lists the shipped scenario files",
    "io.encode_vector": "serialization helper for library callers",
}


def public_functions():
    out = {}
    for m in LIBRARY_MODULES:
        mod = importlib.import_module(f"vnlab.{m}")
        for name in mod.__all__:
            obj = getattr(mod, name)
            if inspect.isfunction(obj):
                out[obj.__code__] = f"{m}.{name}"
    return out


@pytest.fixture(scope="module")
def full_runs():
    """`all` on every bundled scenario, recording which public functions ran."""
    targets = public_functions()
    seen = set()

    def tracer(frame, event, arg):
        name = targets.get(frame.f_code)
        if name is not None:
            seen.add(name)
        return None

    reports = {}
    old = sys.gettrace()
    sys.settrace(tracer)
    try:
        for stem, path in SCENARIOS.items():
            reports[stem] = cli.run("all", path)
    finally:
        sys.settrace(old)
    return reports, seen, set(targets.values())


def strip_timing(report):
    out = dict(report)
    out.pop("timing", None)
    return out


# expected reports


@pytest.mark.parametrize("stem", sorted(SCENARIOS))
def test_report_matches_fixture(full_runs, stem):
    reports, _, _ = full_runs
    code, report = reports[stem]
    expected = json.loads((FIXTURES / f"{stem}.expected.json").read_text())
    assert digest(report) == expected
    assert code == expected["exit_code"]


def test_every_bundled_scenario_has_a_fixture():
    assert {p.name.removesuffix(".expected.json") for p in FIXTURES.glob("*.expected.json")} == set(SCENARIOS)


def test_every_public_operation_is_reachable(full_runs):
    _, seen, targets = full_runs
    missing = targets - seen - set(NOT_CLI_REACHABLE)
    assert missing == set()


@pytest.mark.parametrize("command", cli.COMMANDS)
@pytest.mark.parametrize("stem", sorted(SCENARIOS))
def test_single_command_agrees_with_all(full_runs, command, stem):
    reports, _, _ = full_runs
    _, whole = reports[stem]
    expected = whole["sections"][command]
    code, report = cli.run(command, SCENARIOS[stem])
    if expected["status"] == "not-applicable":
        assert code == cli.EXIT_PRECONDITION
        assert report["errors"][0]["stage"] == command
    else:
        assert report["sections"][command] == expected
        assert code == (cli.EXIT_FAIL if expected["status"] == "fail" else cli.EXIT_PASS)


# documented examples


def test_sectors_on_diagonal_qubit():
    code, report = cli.run("sectors", SCENARIOS["qubit"])
    assert code == 0
    assert report["sections"]["sectors"]["details"]["invariant"]["text"] == "{(1,1), (1,1)}"


def test_duality_check_on_qubit_z2():
    code, report = cli.run("duality-check", SCENARIOS["qubit_z2"])
    assert code == 0
    check = report["sections"]["duality-check"]["checks"][0]
    assert check["verdict"] == "pass"
    assert check["invariants"] == ["{(4,1)}", "{(4,1)}"]


def test_corrupted_scenario_fails_perfect_correlation(full_runs):
    reports, _, _ = full_runs
    code, report = reports["corrupted"]
    assert code == cli.EXIT_FAIL
    checks = {c["name"]: c["verdict"] for c in report["sections"]["measure"]["checks"]}
    assert checks["perfect_correlation"] == "fail"
    assert report["sections"]["measure"]["details"]["perfect_correlation_exact"] is False


def test_measure_report_lists_atoms(full_runs):
    reports, _, _ = full_runs
    details = reports["qubit_z2"][1]["sections"]["measure"]["details"]
    assert [a["probability"] for a in details["atoms"]] == [0.36, 0.64]
    assert details["atoms"][1]["post_state"] == [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]
    assert details["perfect_correlation_exact"] is True
    assert sum(details["sampled_counts"]) == cli.SHOTS


# determinism and flags


def test_reports_are_deterministic(full_runs):
    reports, _, _ = full_runs
    for stem in ("qubit_z2", "z2_covariant"):
        _, again = cli.run("all", SCENARIOS[stem])
        assert cli.dumps(strip_timing(again)) == cli.dumps(strip_timing(reports[stem][1]))


def test_report_records_seed_and_tolerance(full_runs):
    reports, _, _ = full_runs
    _, report = reports["qubit_z2"]
    assert report["schema"] == "vnlab.report/1"
    assert report["tolerance"] == 1e-9 and report["seed"] == 0
    _, report = cli.run("sectors", SCENARIOS["qubit_z2"], tolerance=1e-8, seed=5)
    assert report["tolerance"] == 1e-8 and report["seed"] == 5


def test_scenario_tolerance_override(tmp_path):
    data = json.loads(SCENARIOS["qubit"].read_text())
    data["tolerance"] = 1e-7
    path = tmp_path / "s.json"
    path.write_text(json.dumps(data))
    assert cli.run("sectors", path)[1]["tolerance"] == 1e-7
    assert cli.run("sectors", path, tolerance=1e-6)[1]["tolerance"] == 1e-6


def test_main_writes_output_and_summary(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = cli.main(["sectors", str(SCENARIOS["qubit"]), "--output", str(out), "--format", "json"])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["command"] == "sectors"
    err = capsys.readouterr().err
    assert "exit 0" in err


def test_main_prints_json_to_stdout(capsys):
    assert cli.main(["classify", str(SCENARIOS["qubit"])]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["sections"]["classify"]["details"]["type"] == "I"


# exit codes


def test_exit_2_on_bad_arguments(capsys):
    assert cli.main(["teleport", "x.json"]) == cli.EXIT_PARSE
    assert cli.main([]) == cli.EXIT_PARSE


def test_exit_2_on_unreadable_or_malformed_scenarios(tmp_path):
    assert cli.run("sectors", tmp_path / "missing.json")[0] == cli.EXIT_PARSE
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": "nope"}')
    code, report = cli.run("sectors", bad)
    assert code == cli.EXIT_PARSE
    assert report["errors"][0]["kind"] == "parse"
    assert cli.run("sectors", SCENARIOS["qubit"], tolerance=2.0)[0] == cli.EXIT_PARSE


def test_exit_3_on_precondition_violation(tmp_path):
    data = {
        "schema": SCENARIO_SCHEMA,
        "group": [2],
        "algebra": {"blocks": [[2, 1]]},
        "action": {"kind": "inner", "generators": [[[1, 0], [0, 2]]]},
    }
    path = tmp_path / "s.json"
    path.write_text(json.dumps(data))
    code, report = cli.run("crossed-product", path)
    assert code == cli.EXIT_PRECONDITION
    assert report["errors"][0]["kind"] == "precondition"


def test_exit_3_for_explicit_inapplicable_command():
    code, report = cli.run("theorem1", SCENARIOS["qubit"])
    assert code == cli.EXIT_PRECONDITION
    assert "sections" in report


def test_exit_4_on_numerical_ambiguity(monkeypatch):
    def ambiguous(scn, sec):
        raise NumericalAmbiguityError("eigenvalue gap below tolerance")

    monkeypatch.setitem(cli.SECTIONS, "sectors", ambiguous)
    code, report = cli.run("all", SCENARIOS["qubit"])
    assert code == cli.EXIT_AMBIGUITY
    assert report["sections"]["sectors"]["status"] == "ambiguous"
    # the rest of the pipeline still ran and the report is complete
    assert report["sections"]["classify"]["status"] == "pass"
