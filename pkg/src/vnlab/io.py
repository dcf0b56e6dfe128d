"""Scenario files and report serialization.

Matrices are nested lists whose entries are either real numbers or
``[re, im]`` pairs; vectors likewise. All keys are lower_snake_case and
every file carries a versioned ``schema`` field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from vnlab.config import DEFAULT_SEED, DEFAULT_TOLERANCE
from vnlab.crossed import GroupAction
from vnlab.dynsys import AbelianDynamicalSystem, CovariantSystem
from vnlab.errors import VNLabError
from vnlab.groups import FiniteAbelianGroup
from vnlab.vna import OperatorAlgebra, direct_sum_blocks, generate

__all__ = [
    "SCENARIO_SCHEMA",
    "REPORT_SCHEMA",
    "ScenarioError",
    "Scenario",
    "load_scenario",
    "parse_scenario",
    "bundled_scenarios",
    "decode_matrix",
    "decode_vector",
    "encode_matrix",
    "encode_vector",
    "to_jsonable",
]

SCENARIO_SCHEMA = "vnlab.scenario/1"
REPORT_SCHEMA = "vnlab.report/1"


class ScenarioError(VNLabError):
    """The scenario file is malformed (exit code 2)."""


def _entry(x):
    if isinstance(x, (list, tuple)):
        if len(x) != 2 or not all(isinstance(v, (int, float)) for v in x):
            raise ScenarioError(f"complex entries must be [re, im] pairs, got {x!r}")
        return complex(x[0], x[1])
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    raise ScenarioError(f"matrix entry {x!r} is not a number or [re, im] pair")


def decode_vector(data):
    if not isinstance(data, list) or not data:
        raise ScenarioError("a vector must be a non-empty list")
    return np.array([_entry(x) for x in data])


def decode_matrix(data):
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise ScenarioError("a matrix must be a non-empty list of rows")
    rows = [[_entry(x) for x in r] for r in data]
    if len({len(r) for r in rows}) != 1 or len(rows) != len(rows[0]):
        raise ScenarioError(f"matrix must be square, got row lengths {[len(r) for r in rows]}")
    return np.array(rows)


def _encode_number(z, digits=12):
    z = complex(z)
    re, im = round(z.real, digits) + 0.0, round(z.imag, digits) + 0.0
    return [re, im]


def encode_vector(v, digits=12):
    return [_encode_number(z, digits) for z in np.asarray(v).ravel()]


def encode_matrix(m, digits=12):
    return [[_encode_number(z, digits) for z in row] for row in np.asarray(m)]


def to_jsonable(obj):
    """Recursively convert numpy values and invariants to plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return _encode_number(obj)
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return encode_matrix(obj) if obj.ndim == 2 else encode_vector(obj)
        return obj.tolist()
    if hasattr(obj, "as_list"):
        return {"pairs": obj.as_list(), "text": str(obj)}
    return obj


def _require(data, key, kind):
    if key not in data:
        raise ScenarioError(f"missing required field '{key}'")
    if not isinstance(data[key], kind):
        raise ScenarioError(f"field '{key}' has the wrong type")
    return data[key]


def _state(data, d, label):
    """``{"vector": [...]}`` or ``{"density": [[...]]}``."""
    if data is None:
        return None
    if not isinstance(data, dict) or len(data) != 1 or not ({"vector", "density"} & set(data)):
        raise ScenarioError(f"'{label}' must be an object with a single 'vector' or 'density' field")
    if "vector" in data:
        out = decode_vector(data["vector"])
        if out.shape != (d,):
            raise ScenarioError(f"{label} vector has length {len(out)}, expected {d}")
    else:
        out = decode_matrix(data["density"])
        if out.shape != (d, d):
            raise ScenarioError(f"{label} density has shape {out.shape}, expected {(d, d)}")
    return out


@dataclass
class Scenario:
    """A parsed scenario: group, algebra, action and optional extras."""

    name: str
    raw: dict
    group: FiniteAbelianGroup
    algebra: OperatorAlgebra
    action: GroupAction
    masa: OperatorAlgebra | None = None
    state: np.ndarray | None = None
    faithful_state: np.ndarray | None = None
    weights: list = field(default_factory=list)
    system: AbelianDynamicalSystem | None = None
    covariant: CovariantSystem | None = None
    controls: dict = field(default_factory=dict)
    tolerance: float = DEFAULT_TOLERANCE
    seed: int = DEFAULT_SEED
    blocks: list | None = None

    @property
    def d(self):
        return self.algebra.d


def _parse_algebra(spec):
    if not isinstance(spec, dict):
        raise ScenarioError("'algebra' must be an object")
    if "blocks" in spec:
        blocks = spec["blocks"]
        if not isinstance(blocks, list) or not blocks:
            raise ScenarioError("'algebra.blocks' must be a non-empty list of [n, m] pairs")
        pairs = []
        for b in blocks:
            if not (isinstance(b, list) and len(b) == 2 and all(isinstance(v, int) and v > 0 for v in b)):
                raise ScenarioError(f"block {b!r} is not a pair of positive integers")
            pairs.append((b[0], b[1]))
        return direct_sum_blocks(pairs), pairs
    if "generators" in spec:
        mats = [decode_matrix(m) for m in _require(spec, "generators", list)]
        d = mats[0].shape[0]
        if any(m.shape != (d, d) for m in mats):
            raise ScenarioError("algebra generators have different sizes")
        return generate(mats, d=d), None
    raise ScenarioError("'algebra' needs 'blocks' or 'generators'")


def _parse_action(spec, group, algebra, blocks):
    if not isinstance(spec, dict):
        raise ScenarioError("'action' must be an object")
    kind = spec.get("kind")
    if kind == "trivial":
        return GroupAction.trivial(group, algebra)
    gens = _require(spec, "generators", list)
    if kind == "inner":
        mats = [decode_matrix(m) for m in gens]
        if any(m.shape != (algebra.d, algebra.d) for m in mats):
            raise ScenarioError(f"inner generators must be {algebra.d} x {algebra.d}")
        return GroupAction.from_generators(group, algebra, mats, kind="inner")
    if kind == "block_permutation":
        if blocks is None:
            raise ScenarioError("block permutations need an algebra given by 'blocks'")
        specs = []
        for g in gens:
            if not isinstance(g, dict) or "perm" not in g:
                raise ScenarioError("each block-permutation generator needs a 'perm'")
            us = g.get("unitaries")
            specs.append((list(g["perm"]), None if us is None else [decode_matrix(u) for u in us]))
        return GroupAction.from_block_permutations(group, blocks, specs, algebra=algebra)
    raise ScenarioError(f"unknown action kind {kind!r}")


def _parse_dynamics(spec, group):
    n = _require(spec, "atoms", int)
    perms = _require(spec, "generators", list)
    system = AbelianDynamicalSystem.from_generators(group, perms, n_atoms=n)
    hu = spec.get("hilbert_unitaries")
    if hu is None:
        cov = CovariantSystem(system)
    else:
        cov = CovariantSystem.from_generators(system, [decode_matrix(u) for u in hu])
    return system, cov


def _system_from_blocks(group, blocks, action_spec):
    """Recover the atom permutations when the algebra is C^n with a block-permutation action."""
    if blocks is None or any(b != (1, 1) for b in blocks):
        return None
    if not isinstance(action_spec, dict) or action_spec.get("kind") not in ("block_permutation", "trivial"):
        return None
    if action_spec.get("kind") == "trivial":
        gens = [list(range(len(blocks)))] * sum(1 for n in group.orders if n > 1)
    else:
        gens = [g["perm"] for g in action_spec["generators"]]
    return AbelianDynamicalSystem.from_generators(group, gens, n_atoms=len(blocks))


def parse_scenario(data, name="scenario"):
    """Build a Scenario from a decoded JSON object; raises ScenarioError on malformed input.

    Module preconditions (unitarity, homomorphism, ...) raise PreconditionError.
    """
    if not isinstance(data, dict):
        raise ScenarioError("a scenario must be a JSON object")
    schema = data.get("schema")
    if schema != SCENARIO_SCHEMA:
        raise ScenarioError(f"unsupported schema {schema!r}, expected {SCENARIO_SCHEMA!r}")
    orders = _require(data, "group", list)
    if not orders or not all(isinstance(n, int) and n >= 1 for n in orders):
        raise ScenarioError("'group' must be a non-empty list of positive integers")
    group = FiniteAbelianGroup(orders)
    system = cov = None
    blocks = None
    if "dynamics" in data:
        system, cov = _parse_dynamics(_require(data, "dynamics", dict), group)
        algebra, action = cov.algebra, cov.action
        if cov.h == 1:
            blocks = [(1, 1)] * system.n_atoms
    else:
        algebra, blocks = _parse_algebra(_require(data, "algebra", dict))
        action = _parse_action(_require(data, "action", dict), group, algebra, blocks)
        system = _system_from_blocks(group, blocks, data["action"])
        cov = CovariantSystem(system) if system is not None else None
    d = algebra.d
    masa = None
    if "masa" in data:
        m = data["masa"]
        if m == "diagonal":
            masa = OperatorAlgebra.diagonal(d)
        elif isinstance(m, list):
            mats = [decode_matrix(x) for x in m]
            masa = generate(mats, d=d)
        else:
            raise ScenarioError("'masa' must be \"diagonal\" or a list of generator matrices")
    weights = []
    for w in data.get("weights", []):
        v = np.asarray(w, dtype=float)
        if v.ndim != 1:
            raise ScenarioError("weights are lists of positive numbers, one per atom")
        weights.append(v)
    tol = data.get("tolerance", DEFAULT_TOLERANCE)
    seed = data.get("seed", DEFAULT_SEED)
    if not isinstance(tol, (int, float)) or tol <= 0:
        raise ScenarioError("'tolerance' must be a positive number")
    if not isinstance(seed, int):
        raise ScenarioError("'seed' must be an integer")
    controls = data.get("controls", {})
    if not isinstance(controls, dict):
        raise ScenarioError("'controls' must be an object")
    return Scenario(
        name=data.get("name", name),
        raw=data,
        group=group,
        algebra=algebra,
        action=action,
        masa=masa,
        state=_state(data.get("state"), d, "state"),
        faithful_state=_state(data.get("faithful_state"), d, "faithful_state"),
        weights=weights,
        system=system,
        covariant=cov,
        controls=controls,
        tolerance=float(tol),
        seed=seed,
        blocks=blocks,
    )


def load_scenario(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    return data


def bundled_scenarios():
    """Paths of the scenarios shipped with the package, sorted by name."""
    root = resources.files("vnlab").joinpath("data/scenarios")
    return sorted((p for p in root.iterdir() if p.name.endswith(".json")), key=lambda p: p.name)
