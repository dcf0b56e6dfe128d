import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vnlab.io import (
    SCENARIO_SCHEMA,
    ScenarioError,
    bundled_scenarios,
    decode_matrix,
    decode_vector,
    encode_matrix,
    encode_vector,
    load_scenario,
    parse_scenario,
    to_jsonable,
)
from vnlab.vna import BlockInvariant

QUBIT_Z2 = {
    "schema": SCENARIO_SCHEMA,
    "group": [2],
    "algebra": {"blocks": [[2, 1]]},
    "action": {"kind": "inner", "generators": [[[1, 0], [0, -1]]]},
    "masa": "diagonal",
    "state": {"vector": [0.6, [0, 0.8]]},
}


def scenario(**changes):
    data = json.loads(json.dumps(QUBIT_Z2))
    for k, v in changes.items():
        if v is None:
            data.pop(k, None)
        else:
            data[k] = v
    return data


def test_bundled_scenarios_parse():
    names = [p.name for p in bundled_scenarios()]
    assert names == sorted(names)
    assert {"qubit_z2.json", "qutrit_z3.json", "z2xz2_m4.json", "corrupted.json", "nonfree.json"} <= set(names)
    for p in bundled_scenarios():
        scn = parse_scenario(load_scenario(p), name=p.stem)
        assert scn.algebra.d == scn.action.d


def test_parse_qubit():
    scn = parse_scenario(scenario())
    assert scn.group.order == 2
    assert scn.algebra.dim == 4
    assert scn.action.inner
    assert scn.masa.dim == 2
    np.testing.assert_allclose(scn.state, [0.6, 0.8j])
    assert scn.system is None


def test_parse_block_permutation_derives_system():
    data = scenario(
        algebra={"blocks": [[1, 1], [1, 1], [1, 1]]},
        action={"kind": "block_permutation", "generators": [{"perm": [1, 0, 2]}]},
        masa=None,
        state=None,
    )
    scn = parse_scenario(data)
    assert scn.system is not None
    assert scn.system.perms.tolist() == [[0, 1, 2], [1, 0, 2]]


def test_parse_dynamics_with_hilbert_unitaries():
    data = {
        "schema": SCENARIO_SCHEMA,
        "group": [2],
        "dynamics": {"atoms": 2, "generators": [[1, 0]], "hilbert_unitaries": [[[0, 1], [1, 0]]]},
    }
    scn = parse_scenario(data)
    assert scn.d == 4
    assert scn.covariant.h == 2
    assert scn.blocks is None


@pytest.mark.parametrize(
    "changes",
    [
        {"schema": "vnlab.scenario/0"},
        {"group": []},
        {"group": [0]},
        {"algebra": {"blocks": [[2]]}},
        {"algebra": {}},
        {"action": {"kind": "teleport", "generators": []}},
        {"action": {"kind": "inner", "generators": [[[1, 0, 0], [0, 1, 0], [0, 0, 1]]]}},
        {"state": [0.6, 0.8]},
        {"state": {"vector": [1, 0, 0]}},
        {"state": {"vector": [1, "x"]}},
        {"masa": "offdiagonal"},
        {"tolerance": -1},
        {"seed": "zero"},
        {"controls": []},
    ],
)
def test_parse_errors(changes):
    with pytest.raises(ScenarioError):
        parse_scenario(scenario(**changes))


def test_load_errors(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ScenarioError):
        load_scenario(bad)


def test_decode_rejects_bad_entries():
    with pytest.raises(ScenarioError):
        decode_matrix([[1, 2]])
    with pytest.raises(ScenarioError):
        decode_vector([])
    with pytest.raises(ScenarioError):
        decode_vector([[1, 2, 3]])
    with pytest.raises(ScenarioError):
        decode_vector([True])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 10_000))
def test_matrix_round_trip(d, seed):
    rng = np.random.default_rng(seed)
    m = np.round(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)), 6)
    back = decode_matrix(json.loads(json.dumps(encode_matrix(m))))
    np.testing.assert_allclose(back, m, atol=1e-12)
    v = m[0]
    np.testing.assert_allclose(decode_vector(json.loads(json.dumps(encode_vector(v)))), v, atol=1e-12)


def test_to_jsonable():
    out = to_jsonable({"a": np.int64(3), "b": np.array([1.0, 2.0]), "c": BlockInvariant([(2, 1)]), 4: (np.float64(0.5),)})
    assert out == {"a": 3, "b": [1.0, 2.0], "c": {"pairs": [[2, 1]], "text": "{(2,1)}"}, "4": [0.5]}
    json.dumps(to_jsonable({"z": np.array([1j, 0])}))
