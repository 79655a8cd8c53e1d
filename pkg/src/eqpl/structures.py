"""Finite-frame quantum interpretation structures.

A structure fixes a finite frame of qubits; conceptually every qubit outside
the frame is false in all admissible valuations and lives in an implicit
remainder block, so nothing in scope can observe it.  Operations reject
formulas that mention qubits outside the frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .errors import NotUnitNorm, OutOfFrame, OverlappingCarriers
from .syntax.nodes import subsets_in_order

EPS_NORM = 1e-9
EPS_RANK = 1e-7


# ---------------------------------------------------------------------------
# valuations

@dataclass(frozen=True)
class Valuation:
    """Total truth assignment on an ordered finite set of qubits."""

    frame: tuple[int, ...]
    trues: frozenset[int]

    def __post_init__(self):
        if tuple(sorted(self.frame)) != self.frame:
            object.__setattr__(self, "frame", tuple(sorted(self.frame)))
        if not self.trues <= set(self.frame):
            raise ValueError("valuation assigns qubits outside its frame")

    @classmethod
    def of(cls, frame: Iterable[int], trues: Iterable[int]) -> "Valuation":
        return cls(tuple(sorted(frame)), frozenset(trues))

    @classmethod
    def from_bits(cls, frame: Iterable[int], bits: str) -> "Valuation":
        frame = tuple(sorted(frame))
        if len(bits) != len(frame) or set(bits) - {"0", "1"}:
            raise ValueError(f"bad bitstring {bits!r} for frame {frame}")
        return cls(frame, frozenset(q for q, b in zip(frame, bits) if b == "1"))

    def __call__(self, qubit: int) -> bool:
        if qubit not in self.frame:
            raise OutOfFrame(f"qubit qb{qubit} outside frame {self.frame}")
        return qubit in self.trues

    def restrict(self, qubits: Iterable[int]) -> "Valuation":
        sub = tuple(sorted(qubits))
        if not set(sub) <= set(self.frame):
            raise OutOfFrame(f"restriction {sub} outside frame {self.frame}")
        return Valuation(sub, self.trues & set(sub))

    def join(self, other: "Valuation") -> "Valuation":
        if set(self.frame) & set(other.frame):
            raise ValueError("join of overlapping valuations")
        return Valuation(tuple(sorted(self.frame + other.frame)),
                         self.trues | other.trues)

    def bits(self) -> str:
        return "".join("1" if q in self.trues else "0" for q in self.frame)

    def __repr__(self):
        return f"Valuation({list(self.frame)}:{self.bits()})"


def all_valuations(qubits: Iterable[int]) -> list[Valuation]:
    frame = tuple(sorted(qubits))
    return [Valuation(frame, a) for a in subsets_in_order(frozenset(frame))]


def project_valuations(vals: Iterable[Valuation], subset: Iterable[int],
                       side: str = "inside") -> frozenset[Valuation]:
    """Restriction V_[S] (side="inside") or co-restriction V_]S[ ("outside")
    of a set of valuations, duplicates collapsed."""
    vals = list(vals)
    sub = set(subset)
    if vals and not sub <= set(vals[0].frame):
        raise OutOfFrame(f"{sorted(sub)} outside frame {vals[0].frame}")
    if side == "inside":
        return frozenset(v.restrict(sub) for v in vals)
    if side == "outside":
        return frozenset(v.restrict(set(v.frame) - sub) for v in vals)
    raise ValueError("side must be 'inside' or 'outside'")


# ---------------------------------------------------------------------------
# state vectors

@dataclass(frozen=True)
class StateVector:
    """Unit vector of the Hilbert space freely generated by the valuations
    over `carrier`; missing valuations carry amplitude zero."""

    carrier: tuple[int, ...]
    amplitudes: Mapping[Valuation, complex]

    def amplitude(self, v: Valuation) -> complex:
        return complex(self.amplitudes.get(v, 0.0))

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values())))

    def support(self, eps: float = 0.0) -> list[Valuation]:
        return [v for v, a in self.amplitudes.items() if abs(a) > eps]

    def scaled(self, factor: complex) -> "StateVector":
        return StateVector(self.carrier,
                           {v: a * factor for v, a in self.amplitudes.items()})

    def __repr__(self):
        entries = ", ".join(f"{v.bits()}:{a:.4g}" for v, a in sorted(
            self.amplitudes.items(), key=lambda kv: kv[0].bits()))
        return f"StateVector({list(self.carrier)}; {entries})"


def make_vector(carrier: Iterable[int], entries: Mapping[Valuation, complex],
                eps_norm: float = EPS_NORM) -> StateVector:
    """Build a state vector, checking unit norm; never renormalizes."""
    carrier = tuple(sorted(carrier))
    amps = {}
    for v, a in entries.items():
        if v.frame != carrier:
            raise ValueError(f"entry {v!r} not a valuation over {carrier}")
        if a != 0:
            amps[v] = complex(a)
    norm = float(np.sqrt(sum(abs(a) ** 2 for a in amps.values())))
    if abs(norm - 1.0) > eps_norm:
        raise NotUnitNorm(norm)
    return StateVector(carrier, amps)


def basis_vector(carrier: Iterable[int], trues: Iterable[int]) -> StateVector:
    carrier = tuple(sorted(carrier))
    return StateVector(carrier, {Valuation(carrier, frozenset(trues)): 1.0})


def tensor(a: StateVector, b: StateVector) -> StateVector:
    if set(a.carrier) & set(b.carrier):
        raise OverlappingCarriers(
            f"carriers {a.carrier} and {b.carrier} overlap")
    amps = {}
    for va, xa in a.amplitudes.items():
        for vb, xb in b.amplitudes.items():
            amps[va.join(vb)] = xa * xb
    return StateVector(tuple(sorted(a.carrier + b.carrier)), amps)


def tensor_all(vectors: Iterable[StateVector]) -> StateVector:
    out = StateVector((), {Valuation((), frozenset()): 1.0})
    for v in vectors:
        out = tensor(out, v)
    return out


def _amplitude_matrix(v: StateVector, part: frozenset) -> tuple[np.ndarray, list, list]:
    rest = frozenset(v.carrier) - part
    rows = all_valuations(part)
    cols = all_valuations(rest)
    row_index = {val: i for i, val in enumerate(rows)}
    col_index = {val: j for j, val in enumerate(cols)}
    m = np.zeros((len(rows), len(cols)), dtype=complex)
    for val, a in v.amplitudes.items():
        m[row_index[val.restrict(part)], col_index[val.restrict(rest)]] = a
    return m, rows, cols


@dataclass
class FactorResult:
    factorizable: bool
    left: StateVector | None = None
    right: StateVector | None = None


def schmidt_factor(v: StateVector, part: Iterable[int],
                   eps_rank: float = EPS_RANK) -> FactorResult:
    """Decide whether `v` splits as a tensor product between `part` and the
    rest of its carrier; on success return unit factors reproducing `v`,
    global phase carried by the left factor."""
    part = frozenset(part)
    if not part or not part < frozenset(v.carrier):
        raise ValueError("part must be a nonempty proper subset of the carrier")
    m, rows, cols = _amplitude_matrix(v, part)
    u, s, vh = np.linalg.svd(m)
    if s[0] == 0 or s[1] / s[0] >= eps_rank:
        return FactorResult(False)
    left_vec = u[:, 0] * s[0]
    right_vec = vh[0, :].conj()
    # make the right factor's first nonzero amplitude real positive
    k = int(np.argmax(np.abs(right_vec) > eps_rank))
    phase = right_vec[k] / abs(right_vec[k])
    right_vec = right_vec / phase
    left_vec = left_vec * phase
    left = StateVector(tuple(sorted(part)),
                       {val: complex(left_vec[i]) for i, val in enumerate(rows)
                        if abs(left_vec[i]) > 0})
    right = StateVector(tuple(sorted(frozenset(v.carrier) - part)),
                        {val: complex(right_vec[j]) for j, val in enumerate(cols)
                         if abs(right_vec[j]) > 0})
    return FactorResult(True, left, right)


def is_nonfactorizable(v: StateVector, eps_rank: float = EPS_RANK) -> bool:
    """True when no bipartition of the carrier splits `v` (vacuously true
    for single-qubit carriers)."""
    carrier = frozenset(v.carrier)
    if len(carrier) < 2:
        return True
    seen = set()
    for part in subsets_in_order(carrier):
        if not part or part == carrier or frozenset(carrier - part) in seen:
            continue
        seen.add(part)
        if schmidt_factor(v, part, eps_rank).factorizable:
            return False
    return True


# ---------------------------------------------------------------------------
# quantum interpretation structures

@dataclass(frozen=True)
class QuantumStructure:
    """The admissible-valuations / partition / block-states / amplitude-
    defaults tuple over a finite frame."""

    frame: tuple[int, ...]
    admissible: frozenset[Valuation]
    partition: tuple[tuple[int, ...], ...]
    block_states: Mapping[frozenset, StateVector]
    nu_defaults: Mapping[tuple[frozenset, frozenset], complex] = field(
        default_factory=dict)

    @classmethod
    def build(cls, frame, admissible, partition, block_states, nu_defaults=None):
        frame = tuple(sorted(frame))
        partition = tuple(tuple(sorted(b)) for b in partition)
        states = {frozenset(k): v for k, v in dict(block_states).items()}
        return cls(frame, frozenset(admissible), partition, states,
                   dict(nu_defaults or {}))

    def check_frame(self, qubits: Iterable[int]) -> None:
        extra = set(qubits) - set(self.frame)
        if extra:
            raise OutOfFrame(f"qubits {sorted(extra)} outside frame {list(self.frame)}")

    def is_block_union(self, target: frozenset) -> bool:
        """Whether `target` belongs to the union-closure of the partition."""
        self.check_frame(target)
        return all(set(b) <= target or not set(b) & target for b in self.partition)

    def blocks_within(self, target: frozenset) -> list[frozenset]:
        return [frozenset(b) for b in self.partition if set(b) <= target]

    @cached_property
    def full_state(self) -> StateVector:
        return tensor_all(self.block_states[frozenset(b)] for b in self.partition)

    def restricted_state(self, target: frozenset) -> StateVector:
        """The tensor of the block states inside `target` (which must be a
        union of blocks)."""
        if not self.is_block_union(target):
            raise ValueError(f"{sorted(target)} is not a union of blocks")
        return tensor_all(self.block_states[b] for b in self.blocks_within(target))

    def amp(self, target: frozenset, positives: frozenset) -> complex:
        """The amplitude value: computed from block states on unions of
        blocks, taken from the defaults (0 when absent) elsewhere."""
        self.check_frame(target)
        if self.is_block_union(target):
            value = 1.0 + 0.0j
            for b in self.blocks_within(target):
                v = Valuation(tuple(sorted(b)), frozenset(positives & b))
                value *= self.block_states[b].amplitude(v)
            return value
        return complex(self.nu_defaults.get((frozenset(target), frozenset(positives)),
                                            0.0))


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str

    def __str__(self):
        return f"{self.code}: {self.message}"


def validate_structure(w: QuantumStructure, eps_norm: float = EPS_NORM,
                       eps_rank: float = EPS_RANK) -> list[Diagnostic]:
    """Check the defining clauses; an empty list means the structure is
    valid.  The implicit remainder block outside the frame is exempt."""
    out: list[Diagnostic] = []
    frame = set(w.frame)
    covered: set[int] = set()
    for b in w.partition:
        bs = set(b)
        if not bs:
            out.append(Diagnostic("EmptyBlock", "partition contains an empty block"))
        if bs & covered:
            out.append(Diagnostic("PartitionNotDisjoint",
                                  f"block {sorted(bs)} overlaps another block"))
        covered |= bs
    if covered != frame:
        out.append(Diagnostic("PartitionCoverage",
                              f"partition covers {sorted(covered)}, frame is"
                              f" {sorted(frame)}"))
    for b in w.partition:
        state = w.block_states.get(frozenset(b))
        if state is None:
            out.append(Diagnostic("MissingBlockState", f"no state for block {list(b)}"))
            continue
        if tuple(sorted(state.carrier)) != tuple(sorted(b)):
            out.append(Diagnostic("BlockCarrierMismatch",
                                  f"state over {state.carrier} attached to block {list(b)}"))
            continue
        norm = state.norm()
        if abs(norm - 1.0) > eps_norm:
            out.append(Diagnostic("UnitNormViolation",
                                  f"block {list(b)} state has norm {norm}"))
        if not is_nonfactorizable(state, eps_rank):
            out.append(Diagnostic("NonFactorizableBlockViolation",
                                  f"block {list(b)} state is a tensor product"))
    if not w.admissible:
        out.append(Diagnostic("EmptyAdmissibleSet", "no admissible valuations"))
    for v in w.admissible:
        if v.frame != w.frame:
            out.append(Diagnostic("AdmissibleOutOfFrame",
                                  f"{v!r} is not a valuation over the frame"))
    if not any(d.code in ("MissingBlockState", "BlockCarrierMismatch",
                          "PartitionCoverage", "PartitionNotDisjoint", "EmptyBlock")
               for d in out):
        for v in w.full_state.support(eps_norm):
            if v not in w.admissible:
                out.append(Diagnostic(
                    "AdmissibilityViolation",
                    f"state gives amplitude {w.full_state.amplitude(v):.4g} to"
                    f" inadmissible valuation {v.bits()}"))
    for (target, positives), _ in w.nu_defaults.items():
        if not set(target) <= frame:
            out.append(Diagnostic("NuOverrideOutsideFrame",
                                  f"amplitude default for {sorted(target)} outside frame"))
        elif w.is_block_union(frozenset(target)):
            out.append(Diagnostic("NuOverrideShadowsBlocks",
                                  f"amplitude default for {sorted(target)} is computed"
                                  " from block states, not stored"))
        if not set(positives) <= set(target):
            out.append(Diagnostic("NuOverrideBadSubset",
                                  f"default for A={sorted(positives)} not within"
                                  f" F={sorted(target)}"))
    return out
