"""Shared test machinery: random structures, random formulas, and the
independent brute-force oracles the properties are checked against."""

from __future__ import annotations

import math
import random

import numpy as np

from eqpl.semantics import Assignment
from eqpl.structures import (
    QuantumStructure, StateVector, Valuation, all_valuations,
    is_nonfactorizable, _amplitude_matrix,
)
from eqpl.syntax.nodes import subsets_in_order


# ---------------------------------------------------------------------------
# random structures

def random_block_state(rng: random.Random, block: frozenset) -> StateVector:
    carrier = tuple(sorted(block))
    vals = all_valuations(carrier)
    for _ in range(24):
        if len(block) == 1:
            size = rng.choice([1, 2, 2])
        else:
            size = rng.randint(2, len(vals))
        support = rng.sample(vals, size)
        amps = {v: complex(rng.gauss(0, 1), rng.gauss(0, 1)) for v in support}
        norm = math.sqrt(sum(abs(a) ** 2 for a in amps.values()))
        state = StateVector(carrier, {v: a / norm for v, a in amps.items()})
        if is_nonfactorizable(state):
            return state
    amps = {v: complex(rng.gauss(0, 1), rng.gauss(0, 1)) + 0.1 for v in vals}
    norm = math.sqrt(sum(abs(a) ** 2 for a in amps.values()))
    return StateVector(carrier, {v: a / norm for v, a in amps.items()})


def random_structure(rng: random.Random, frame, block_unions=(),
                     extra_valuations=True, nu_defaults=True) -> QuantumStructure:
    """A random valid structure over `frame`; each set in `block_unions`
    comes out as a union of partition blocks."""
    frame = tuple(sorted(frame))
    sets = [frozenset(s) for s in block_unions]
    groups: dict[tuple, list] = {}
    for q in frame:
        key = tuple(q in s for s in sets)
        groups.setdefault(key, []).append(q)
    blocks: list[frozenset] = []
    for members in groups.values():
        members = list(members)
        rng.shuffle(members)
        while members:
            size = rng.randint(1, min(3, len(members)))
            blocks.append(frozenset(members[:size]))
            members = members[size:]
    states = {b: random_block_state(rng, b) for b in blocks}
    support_sets = [list(states[b].amplitudes) for b in blocks]
    admissible = set()

    def joins(parts):
        v = Valuation((), frozenset())
        for p in parts:
            v = v.join(p)
        return v

    import itertools

    for combo in itertools.product(*support_sets):
        admissible.add(joins(combo))
    if extra_valuations:
        universe = all_valuations(frame)
        for _ in range(rng.randint(0, 2)):
            admissible.add(rng.choice(universe))
    defaults = {}
    if nu_defaults:
        candidates = [g for g in subsets_in_order(frozenset(frame))
                      if g and not all(b <= g or not b & g for b in blocks)]
        for g in rng.sample(candidates, min(len(candidates), rng.randint(0, 2))):
            a = rng.choice(list(subsets_in_order(g)))
            value = rng.choice([0j, complex(rng.gauss(0, 1), rng.gauss(0, 1))])
            defaults[(g, a)] = value
    return QuantumStructure.build(frame, admissible, blocks, states, defaults)


def random_assignment(rng: random.Random, max_index: int = 5) -> Assignment:
    reals = {k: rng.gauss(0, 2) for k in range(1, max_index)}
    cplx = {k: complex(rng.gauss(0, 1), rng.gauss(0, 1))
            for k in range(1, max_index)}
    return Assignment(reals, cplx)


# ---------------------------------------------------------------------------
# brute-force factorizability: alternating least squares for the best
# rank-one approximation (independent of the SVD route)

def rank_one_residual(v: StateVector, part, seed: int = 0,
                      tries: int = 8, iters: int = 80) -> float:
    m, _, _ = _amplitude_matrix(v, frozenset(part))
    rng = np.random.default_rng(seed)
    best = float("inf")
    for _ in range(tries):
        b = rng.normal(size=m.shape[1]) + 1j * rng.normal(size=m.shape[1])
        b /= np.linalg.norm(b)
        for _ in range(iters):
            a = m @ b
            na = np.linalg.norm(a)
            if na == 0:
                break
            b = (m.conj().T @ a) / na**2
            nb = np.linalg.norm(b)
            if nb == 0:
                break
            b /= nb
            a = m @ b
        residual = float(np.linalg.norm(m - np.outer(a, b.conj())))
        best = min(best, residual)
    return best


def bruteforce_factorizable(v: StateVector, part, eps: float = 1e-7) -> bool:
    return rank_one_residual(v, part) < eps


# ---------------------------------------------------------------------------
# independent propositional validity check (literal-set DNF construction)

def independent_quantum_validity(core) -> bool:
    """DNF-based validity for core quantum formulas: compute the literal
    branches of the negation; valid iff every branch is contradictory."""
    from eqpl.syntax import nodes as n

    def branches(phi, positive):
        if isinstance(phi, n.QNeg):
            return branches(phi.arg, not positive)
        if isinstance(phi, n.QImp):
            if positive:
                return branches(phi.left, False) + branches(phi.right, True)
            out = []
            for x in branches(phi.left, True):
                for y in branches(phi.right, False):
                    out.append(x | y)
            return out
        return [frozenset([(phi, positive)])]

    for branch in branches(core, False):
        atoms = {atom for atom, _ in branch}
        if all(not ((atom, True) in branch and (atom, False) in branch)
               for atom in atoms):
            return False
    return True


def amplitudes_of(w: QuantumStructure, target: frozenset) -> dict:
    return {a: w.amp(target, a) for a in subsets_in_order(target)}
