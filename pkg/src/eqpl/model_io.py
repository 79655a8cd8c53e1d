"""JSON model files for quantum interpretation structures.

Layout::

    {
      "frame": ["cati", "cata", "catm"],
      "admissible": ["011", "010", "000", "111", "110", "100"],
      "partition": [["cati"], ["cata", "catm"]],
      "blocks": {
        "cati":      {"0": [0.7071067811865476, 0.0], "1": [...]},
        "cata,catm": {"11": [...], "10": [...], "00": [...]}
      },
      "nu_overrides": [{"F": ["cata"], "A": [], "value": [0.1, 0.0]}],
      "assignment": {"x1": 0.5, "z1": [0.0, 1.0]}
    }

Frame names of the form qb<k> pin the internal index k (and must then be
listed in ascending order); any other names are aliases for indices
0,1,... in list order.  Bitstrings follow the frame order; block tables
follow the block's own qubit order.  Amplitudes are [re, im] pairs.
"""

from __future__ import annotations

import json
import re as _re
from typing import Any, Mapping

from .errors import EqplError
from .semantics import Assignment
from .structures import QuantumStructure, StateVector, Valuation

_QB = _re.compile(r"qb(\d+)$")
_XVAR = _re.compile(r"x(\d+)$")
_ZVAR = _re.compile(r"z(\d+)$")


class ModelFileError(EqplError):
    pass


def frame_indices(names: list[str]) -> dict[str, int]:
    """Map frame names to qubit indices (see module docstring)."""
    if len(set(names)) != len(names):
        raise ModelFileError("duplicate names in frame")
    pinned = [name for name in names if _QB.match(name)]
    if pinned and len(pinned) != len(names):
        raise ModelFileError("frame mixes qb<k> names with aliases")
    if pinned:
        indices = [int(_QB.match(name).group(1)) for name in names]
        if indices != sorted(indices):
            raise ModelFileError("qb<k> frame names must be listed in ascending order")
        return dict(zip(names, indices))
    return {name: i for i, name in enumerate(names)}


def _cnum(pair) -> complex:
    if not (isinstance(pair, list) and len(pair) == 2):
        raise ModelFileError(f"expected an [re, im] pair, got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def load_structure(data: Mapping[str, Any]) -> tuple[QuantumStructure, Assignment, dict[str, int]]:
    """Build (structure, assignment, alias table) from parsed JSON."""
    try:
        names = list(data["frame"])
    except KeyError:
        raise ModelFileError("model file lacks a frame") from None
    aliases = frame_indices(names)
    order = [aliases[name] for name in names]
    frame = tuple(sorted(order))

    def valuation(bits: str, qubits: list[int]) -> Valuation:
        if len(bits) != len(qubits) or set(bits) - {"0", "1"}:
            raise ModelFileError(f"bad bitstring {bits!r} for qubits {qubits}")
        return Valuation(tuple(sorted(qubits)),
                         frozenset(q for q, b in zip(qubits, bits) if b == "1"))

    admissible = frozenset(valuation(bits, order) for bits in data.get("admissible", []))
    partition = []
    for block in data.get("partition", []):
        try:
            partition.append(tuple(sorted(aliases[name] for name in block)))
        except KeyError as err:
            raise ModelFileError(f"partition names unknown qubit {err}") from None
    blocks = {}
    for key, table in data.get("blocks", {}).items():
        block_names = [s.strip() for s in key.split(",") if s.strip()]
        try:
            qubits = [aliases[name] for name in block_names]
        except KeyError as err:
            raise ModelFileError(f"block key names unknown qubit {err}") from None
        amps = {valuation(bits, qubits): _cnum(pair) for bits, pair in table.items()}
        blocks[frozenset(qubits)] = StateVector(tuple(sorted(qubits)), amps)
    nu = {}
    for entry in data.get("nu_overrides", []):
        target = frozenset(aliases[name] for name in entry["F"])
        positives = frozenset(aliases[name] for name in entry["A"])
        nu[(target, positives)] = _cnum(entry["value"])
    reals: dict[int, float] = {}
    cplx: dict[int, complex] = {}
    for key, value in data.get("assignment", {}).items():
        m = _XVAR.match(key)
        if m:
            reals[int(m.group(1))] = float(value)
            continue
        m = _ZVAR.match(key)
        if m:
            cplx[int(m.group(1))] = _cnum(value)
            continue
        raise ModelFileError(f"assignment key {key!r} is not x<k> or z<k>")
    w = QuantumStructure.build(frame, admissible, partition, blocks, nu)
    return w, Assignment(reals, cplx), aliases


def load_model_file(path: str) -> tuple[QuantumStructure, Assignment, dict[str, int]]:
    with open(path, encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as err:
            raise ModelFileError(f"{path}: {err}") from None
    return load_structure(data)


def dump_structure(w: QuantumStructure, rho: Assignment | None = None,
                   names: Mapping[int, str] | None = None) -> dict:
    """The JSON-ready dictionary for a structure (stable key order)."""
    def name(k: int) -> str:
        return names[k] if names and k in names else f"qb{k}"

    frame = [name(k) for k in w.frame]
    out: dict[str, Any] = {"frame": frame}
    out["admissible"] = sorted(v.bits() for v in w.admissible)
    out["partition"] = [[name(k) for k in block] for block in w.partition]
    blocks = {}
    for block in w.partition:
        state = w.block_states[frozenset(block)]
        table = {v.bits(): [value.real, value.imag]
                 for v, value in sorted(state.amplitudes.items(),
                                        key=lambda kv: kv[0].bits())}
        blocks[",".join(name(k) for k in block)] = table
    out["blocks"] = blocks
    overrides = []
    for (target, positives), value in sorted(
            w.nu_defaults.items(),
            key=lambda kv: (sorted(kv[0][0]), sorted(kv[0][1]))):
        overrides.append({"F": [name(k) for k in sorted(target)],
                          "A": [name(k) for k in sorted(positives)],
                          "value": [value.real, value.imag]})
    out["nu_overrides"] = overrides
    assignment: dict[str, Any] = {}
    if rho is not None:
        for k in sorted(rho.reals):
            assignment[f"x{k}"] = rho.reals[k]
        for k in sorted(rho.complexes):
            value = complex(rho.complexes[k])
            assignment[f"z{k}"] = [value.real, value.imag]
    out["assignment"] = assignment
    return out


def save_model_file(path: str, w: QuantumStructure, rho: Assignment | None = None,
                    names: Mapping[int, str] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(dump_structure(w, rho, names), handle, indent=2)
        handle.write("\n")
