"""JSON, DOT and JSON-lines codecs.

Poc-set files look like ``{"alphabet": ["a", "b"], "relations": [["a", "b*"]]}``
where a relation may also be written ``"a < b*"``. Weights are written as
integers, floats or ``"p/q"`` strings; the last form reads back as an exact
fraction.
"""

from __future__ import annotations

import json
from dataclasses import replace
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Mapping, Optional, TextIO, Tuple

from config import ConfigManager
from deformation import MoveLog, Retraction
from median_dual import MedianGraph, build_dual, edge_label, positive_tags
from observer_update import Observer, PropagationBudget
from pocset_core import Element, PocSet, PocSetError, Vertex, close_order
from realization import Realization, RealizationError, Weight, World, encode_weight
from scenarios import build_scenario
from simulation import Scenario, SimulationError

__all__ = [
    "FormatError",
    "decode_weight",
    "dual_to_dot",
    "dual_to_json",
    "dump_json",
    "dump_record",
    "encode_weight",
    "load_json",
    "moves_to_jsonl",
    "observer_to_json",
    "parse_pocset",
    "parse_realization",
    "parse_scenario",
    "pocset_to_json",
    "realization_to_json",
    "retraction_to_json",
    "trace_to_jsonl",
    "write_trace",
]


class FormatError(ValueError):
    """Raised for unreadable or ill-shaped documents."""


def load_json(text: str, source: str = "<input>") -> Any:
    """Parse JSON, reporting the line and column of syntax errors.

    Raises:
        FormatError: If the text is not JSON
    """
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(
            f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


def dump_json(document: Any) -> str:
    return json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def dump_record(record: Mapping[str, Any]) -> str:
    """One JSON-lines record with stable key order."""
    return json.dumps(record, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def trace_to_jsonl(records: Iterable[Mapping[str, Any]]) -> str:
    return "".join(dump_record(record) + "\n" for record in records)


def write_trace(records: Iterable[Mapping[str, Any]], stream: TextIO) -> None:
    stream.write(trace_to_jsonl(records))


def decode_weight(value: Any) -> Weight:
    """Read ``1``, ``0.25`` or ``"1/4"``.

    Raises:
        FormatError: If the value is not a weight
    """
    if isinstance(value, bool):
        raise FormatError(f"Not a weight: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError as exc:
            raise FormatError(f"Not a weight: {value!r}") from exc
    raise FormatError(f"Not a weight: {value!r}")


_KIND_NAMES = {dict: "an object", list: "a list", int: "an integer", str: "a string"}


def _require(document: Any, key: str, kind: type, where: str) -> Any:
    if not isinstance(document, dict):
        raise FormatError(f"{where}: expected an object")
    if key not in document:
        raise FormatError(f"{where}: missing {key!r}")
    value = document[key]
    if not isinstance(value, kind):
        expected = _KIND_NAMES.get(kind, kind.__name__)
        raise FormatError(f"{where}: {key!r} must be {expected}")
    return value


def _is_integer(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value: Any) -> bool:
    return _is_integer(value) or isinstance(value, float)


def _integer(document: Dict[str, Any], key: str, default: int) -> int:
    value = document.get(key, default)
    if not _is_integer(value):
        raise FormatError(f"scenario: {key!r} must be an integer, got {value!r}")
    return int(value)


# ============================================================================
# Poc-sets
# ============================================================================


def _parse_relation(entry: Any) -> Tuple[str, str]:
    if isinstance(entry, str) and "<" in entry:
        left, _, right = entry.partition("<")
        return left.strip(), right.strip()
    if (
        isinstance(entry, list)
        and len(entry) == 2
        and all(isinstance(x, str) for x in entry)
    ):
        return entry[0], entry[1]
    raise FormatError(f"Relation must be [x, y] or 'x < y', got {entry!r}")


def parse_pocset(document: Any, where: str = "pocset") -> PocSet:
    """Build the closed poc-set a document declares.

    Raises:
        FormatError: If the document is ill-shaped
        PocSetError: If the closure is inconsistent
    """
    alphabet = _require(document, "alphabet", list, where)
    if not all(isinstance(tag, str) for tag in alphabet):
        raise FormatError(f"{where}: alphabet entries must be strings")
    relations = document.get("relations", [])
    if not isinstance(relations, list):
        raise FormatError(f"{where}: 'relations' must be a list")
    return close_order(alphabet, [_parse_relation(entry) for entry in relations])


def pocset_to_json(p: PocSet) -> Dict[str, Any]:
    return {
        "alphabet": list(p.alphabet),
        "relations": [[str(x), str(y)] for x, y in p.declared_relations()],
    }


# ============================================================================
# Dual graphs
# ============================================================================


def _vertex_names(vertex: Iterable[Element]) -> List[str]:
    return [str(e) for e in sorted(vertex)]


def _tag_set(vertex: Vertex) -> str:
    return "{" + ", ".join(positive_tags(vertex)) + "}"


def dual_to_json(g: MedianGraph) -> Dict[str, Any]:
    """Vertices as positive-tag lists, edges as index pairs, V(a) per tag."""
    return {
        "alphabet": list(g.source.alphabet),
        "vertices": [list(positive_tags(v)) for v in g.vertices],
        "edges": [[i, j] for i, j in g.edges],
        "halfspaces": {
            tag: sorted(g.index[v] for v in g.halfspace(tag)) for tag in g.source.alphabet
        },
    }


def dual_to_dot(g: MedianGraph, name: str = "dual") -> str:
    lines = [f"graph {name} {{"]
    for i, vertex in enumerate(g.vertices):
        lines.append(f'  v{i} [label="{_tag_set(vertex)}"];')
    for i, j in g.edges:
        tag = edge_label(g, g.vertices[i], g.vertices[j])
        lines.append(f'  v{i} -- v{j} [label="{tag}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ============================================================================
# Realizations and observers
# ============================================================================


def parse_realization(document: Any, where: str = "realization") -> Realization:
    """Read ``{"pocset": ..., "atoms": n, "mu": [...], "sensors": {...}}``.

    ``mu`` defaults to the uniform measure.
    """
    pocset = parse_pocset(_require(document, "pocset", dict, where), f"{where}.pocset")
    atoms = _require(document, "atoms", int, where)
    if "mu" in document:
        mu = document["mu"]
        if not isinstance(mu, list) or len(mu) != atoms:
            raise FormatError(f"{where}: 'mu' must list one weight per atom")
        world = World(tuple(decode_weight(w) for w in mu))
    else:
        world = World.uniform(atoms)
    sensors = _require(document, "sensors", dict, where)
    for tag, members in sensors.items():
        if not isinstance(members, list) or not all(
            isinstance(i, int) and not isinstance(i, bool) for i in members
        ):
            raise FormatError(f"{where}: sensor {tag!r} must list atom indices")
    positive = document.get("measure_positive")
    if positive is not None and not isinstance(positive, bool):
        raise FormatError(f"{where}: 'measure_positive' must be a boolean")
    return Realization.from_sensors(pocset, world, sensors, positive)


def realization_to_json(r: Realization) -> Dict[str, Any]:
    return {
        "pocset": pocset_to_json(r.pocset),
        "atoms": r.world.size,
        "mu": [encode_weight(w) for w in r.world.mu],
        "sensors": {tag: sorted(atoms) for tag, atoms in r.sensors},
        "measure_positive": r.measure_positive,
    }


def observer_to_json(o: Observer) -> Dict[str, Any]:
    return {
        "pocset": pocset_to_json(o.pocset),
        "epsilon": _vertex_names(o.epsilon),
        "p": {str(i): encode_weight(w) for i, w in enumerate(o.excitation) if w},
    }


def retraction_to_json(r: Retraction) -> Dict[str, Any]:
    record = r.to_dict()
    record["source"] = pocset_to_json(r.source)
    record["target"] = pocset_to_json(r.target)
    return record


def moves_to_jsonl(log: MoveLog) -> str:
    return "".join(dump_record(move.to_dict()) + "\n" for move in log.moves)


# ============================================================================
# Scenarios
# ============================================================================


def parse_scenario(
    document: Any,
    seed: Optional[int] = None,
    budget: Optional[str] = None,
    threshold: Optional[float] = None,
) -> Scenario:
    """Read a scenario document; explicit arguments override its fields.

    The world comes from ``"builtin": {"name": ..., "params": [...]}``, an
    inline ``"realization"`` or a bare ``"pocset"`` (explicit streams only).

    Raises:
        FormatError: If a field is missing, ill-typed or rejected by its builder
        SimulationError: If the seed or step count is negative
    """
    if not isinstance(document, dict):
        raise FormatError("scenario: expected an object")
    simulation = ConfigManager.load_config().simulation
    update = ConfigManager.load_config().update
    assert simulation is not None and update is not None

    if seed is None:
        seed = _integer(document, "seed", simulation.default_seed)
    if seed < 0:
        raise SimulationError(f"Seed must be non-negative, got {seed}")
    realization: Optional[Realization] = None
    if "builtin" in document:
        builtin = _require(document, "builtin", dict, "scenario")
        name = _require(builtin, "name", str, "scenario.builtin")
        params = builtin.get("params", [])
        if not isinstance(params, list) or not all(_is_number(x) for x in params):
            raise FormatError("scenario.builtin: 'params' must list numbers")
        try:
            built = build_scenario(name, params, seed)
        except KeyError as exc:
            raise FormatError(f"scenario: unknown builtin {name!r}") from exc
        except (PocSetError, RealizationError):
            raise
        except (TypeError, ValueError) as exc:
            message = f"scenario: builtin {name!r} rejects params {params}"
            raise FormatError(message) from exc
        if isinstance(built, Realization):
            realization, pocset = built, built.pocset
        else:
            pocset = built
    elif "realization" in document:
        realization = parse_realization(document["realization"], "scenario.realization")
        pocset = realization.pocset
        name = str(document.get("name", "realization"))
    elif "pocset" in document:
        pocset = parse_pocset(document["pocset"], "scenario.pocset")
        name = str(document.get("name", "pocset"))
    else:
        raise FormatError("scenario: needs 'builtin', 'realization' or 'pocset'")

    stream = document.get("stream")
    if stream is not None and not (
        isinstance(stream, list) and all(isinstance(e, str) for e in stream)
    ):
        raise FormatError("scenario: 'stream' must list element names")
    epsilon = document.get("epsilon", [])
    if not isinstance(epsilon, list):
        raise FormatError("scenario: 'epsilon' must list element names")

    if threshold is None:
        threshold = document.get("threshold")
        if threshold is not None and not _is_number(threshold):
            raise FormatError("scenario: 'threshold' must be a number")
    if budget is None:
        budget = str(document.get("budget", update.default_budget))
    initial_atom = document.get("initial_atom")
    if initial_atom is not None and not _is_integer(initial_atom):
        raise FormatError("scenario: 'initial_atom' must be an integer")
    scenario = Scenario.build(
        str(document.get("name", name)),
        pocset,
        realization,
        stream,
        epsilon,
        steps=_integer(document, "steps", simulation.default_steps),
        seed=seed,
        budget=PropagationBudget.parse(budget),
        threshold=None if threshold is None else float(threshold),
        initial_atom=initial_atom,
        report_misperception=bool(document.get("misperception", False)),
    )
    if "p" in document:
        scenario = replace(scenario, excitation=_parse_excitation(document["p"], pocset))
    return scenario


def _parse_excitation(document: Any, pocset: PocSet) -> Tuple[Weight, ...]:
    """Read ``{vertex-index: weight}``; missing vertices weigh zero."""
    if not isinstance(document, dict):
        raise FormatError("scenario: 'p' must map vertex indices to weights")
    size = len(build_dual(pocset))
    weights: List[Weight] = [Fraction(0)] * size
    for key, value in document.items():
        try:
            index = int(key)
        except ValueError as exc:
            raise FormatError(f"scenario: vertex index {key!r} is not an integer") from exc
        if not 0 <= index < size:
            raise FormatError(f"scenario: vertex index {index} is out of range")
        weights[index] = decode_weight(value)
    return tuple(weights)
