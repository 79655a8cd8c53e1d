"""Derived-theorem corpus.

Two kinds of entries: full derivation scripts where a derivation is short
enough to display (the probability-of-verum theorem, and the derivation of
classical modus ponens from the quantum rule plus the lifting axiom), and
schema instantiators for the remaining theorems, which are validated
semantically on randomly generated structures by the test suite.
"""

from __future__ import annotations

import random
from typing import Sequence

from .syntax import amp_of, render, sq_abs, unit_sum
from .syntax import nodes as n
from .syntax.expand import vector_components, vector_eq, vector_subseteq
from .syntax.nodes import subsets_in_order


# ---------------------------------------------------------------------------
# derivation scripts

def punit_script(bound: Sequence[int]) -> str:
    """The seven-line derivation of (Pr(top) = 1) for the given bound."""
    bound = frozenset(bound)
    sum_txt = render(unit_sum(bound))
    names = ",".join(f"qb{k}" for k in sorted(bound))
    lines = [
        f"bound F = {names}",
        f"1. [{names}] ; NETG_F",
        f"2. ([{names}] ==> ({sum_txt} = 1)) ; UNIT({names})",
        f"3. ({sum_txt} = 1) ; QMP(1,2)",
        f"4. (Pr(top) = {sum_txt}) ; PROB(top)",
        f"5. ((Pr(top) = {sum_txt}) ==> (({sum_txt} = 1) ==> (Pr(top) = 1))) ; ORACLE",
        f"6. (({sum_txt} = 1) ==> (Pr(top) = 1)) ; QMP(4,5)",
        "7. (Pr(top) = 1) ; QMP(3,6)",
    ]
    return "\n".join(lines) + "\n"


#: classical modus ponens carried out with the quantum rule and the lifting
#: axiom only (qb0, (qb0 -> qb1) as premises)
CMP_FROM_QMP_SCRIPT = """\
bound F = qb0, qb1
1. qb0 ; PREMISE
2. (qb0 -> qb1) ; PREMISE
3. ((qb0 -> qb1) ==> (qb0 ==> qb1)) ; LIFT
4. (qb0 ==> qb1) ; QMP(2,3)
5. qb1 ; QMP(1,4)
"""


# ---------------------------------------------------------------------------
# random formula material

def random_classical(rng: random.Random, qubits: Sequence[int],
                     depth: int = 3) -> n.ClassicalFormula:
    qubits = list(qubits)
    if depth <= 0 or rng.random() < 0.3:
        return n.Qubit(rng.choice(qubits))
    pick = rng.random()
    if pick < 0.25:
        return n.CNeg(random_classical(rng, qubits, depth - 1))
    ctor = rng.choice([n.CImp, n.CConj, n.CDisj, n.CEquiv])
    return ctor(random_classical(rng, qubits, depth - 1),
                random_classical(rng, qubits, depth - 1))


def random_subset(rng: random.Random, qubits: Sequence[int],
                  nonempty: bool = True) -> frozenset:
    out = frozenset(q for q in qubits if rng.random() < 0.5)
    if nonempty and not out:
        out = frozenset({rng.choice(list(qubits))})
    return out


def _const_complex(value: complex) -> n.ComplexTerm:
    def dec(x: float) -> n.ConstExpr:
        from fractions import Fraction

        f = Fraction(x).limit_denominator(10**6)
        mag: n.ConstExpr = n.CRat(Fraction(abs(f.numerator)))
        if f.denominator != 1:
            mag = n.CDiv(mag, n.CRat(Fraction(f.denominator)))
        return n.CNegC(mag) if f < 0 else mag

    return n.Cart(n.Const(dec(value.real)), n.Const(dec(value.imag)))


def random_complex_term(rng: random.Random) -> n.ComplexTerm:
    pick = rng.random()
    if pick < 0.4:
        return n.ComplexVar(rng.randrange(1, 4))
    return _const_complex(complex(round(rng.uniform(-1, 1), 3),
                                  round(rng.uniform(-1, 1), 3)))


# ---------------------------------------------------------------------------
# theorem schema instantiators

def _vec(alpha, target):
    return vector_components(alpha, target)


def _zip_sum(left, right):
    return [n.CSum(a, b) for a, b in zip(left, right)]


def theorem_punit(rng, frame, w=None):
    return n.EqR(n.Prob(n.Top()), n.Const(n.rat(1)))


def theorem_netg_cap(rng, frame, w=None):
    g1, g2 = random_subset(rng, frame), random_subset(rng, frame)
    return n.QImp(n.NonEtg(g1), n.QImp(n.NonEtg(g2), n.NonEtg(g1 & g2)))


def _amplitude_target(rng, frame, w):
    """A qubit set for amplitude-vector theorems; drawn from the structure's
    factorizable sets when one is supplied, since free default amplitudes
    are unconstrained."""
    if w is not None:
        unions = [g for g in subsets_in_order(frozenset(frame))
                  if g and w.is_block_union(g)]
        return rng.choice(unions)
    return random_subset(rng, frame)


def theorem_aadd(rng, frame, w=None):
    g = random_subset(rng, frame)
    a1, a2 = (random_classical(rng, sorted(g), 2) for _ in range(2))
    lhs = _zip_sum(_vec(n.CDisj(a1, a2), g), _vec(n.CConj(a1, a2), g))
    rhs = _zip_sum(_vec(a1, g), _vec(a2, g))
    return vector_eq(lhs, rhs)


def theorem_amon(rng, frame, w=None):
    g = random_subset(rng, frame)
    a1 = random_classical(rng, sorted(g), 2)
    a2 = rng.choice([n.CDisj(a1, random_classical(rng, sorted(g), 1)), a1])
    return n.QImp(n.CImp(a1, a2), vector_subseteq(_vec(a1, g), _vec(a2, g)))


def theorem_asoe(rng, frame, w=None):
    g = random_subset(rng, frame)
    a1 = random_classical(rng, sorted(g), 2)
    a2 = rng.choice([n.CNeg(n.CNeg(a1)), a1, random_classical(rng, sorted(g), 2)])
    return n.QImp(n.CEquiv(a1, a2), vector_eq(_vec(a1, g), _vec(a2, g)))


def theorem_anec(rng, frame, w=None):
    g = random_subset(rng, frame)
    a = random_classical(rng, sorted(g), 2)
    return n.QImp(a, vector_eq(_vec(a, g), _vec(n.Top(), g)))


def theorem_amexc(rng, frame, w=None):
    g = _amplitude_target(rng, frame, w)
    a = random_classical(rng, sorted(g), 2)
    lhs = _zip_sum(_vec(a, g), _vec(n.CNeg(a), g))
    return vector_eq(lhs, _vec(n.Top(), g))


def theorem_padd(rng, frame, w=None):
    a1, a2 = (random_classical(rng, frame, 2) for _ in range(2))
    return n.EqR(n.RSum(n.Prob(n.CDisj(a1, a2)), n.Prob(n.CConj(a1, a2))),
                 n.RSum(n.Prob(a1), n.Prob(a2)))


def _poss_pair(rng, frame, w):
    """Target set and amplitude term; when a structure is supplied the term
    is its actual amplitude for a random pattern, making the possibility
    antecedent non-vacuous about half the time."""
    if w is not None and rng.random() < 0.7:
        unions = [g for g in subsets_in_order(frozenset(frame))
                  if g and w.is_block_union(g)]
        g = rng.choice(unions)
        pattern = rng.choice(list(subsets_in_order(g)))
        u = _const_complex(w.amp(g, pattern))
        return g, pattern, u
    g = random_subset(rng, frame)
    pattern = rng.choice(list(subsets_in_order(g)))
    return g, pattern, random_complex_term(rng)


def theorem_meas(rng, frame, w=None):
    g, pattern, u = _poss_pair(rng, frame, w)
    mol = n.BigConj(g, pattern)
    return n.QImp(n.Poss(g, ((mol, u),)),
                  n.EqR(n.Prob(mol), sq_abs(u)))


def theorem_pmon(rng, frame, w=None):
    a1 = random_classical(rng, frame, 2)
    a2 = rng.choice([n.CDisj(a1, random_classical(rng, frame, 1)), a1])
    return n.QImp(n.CImp(a1, a2), n.Leq(n.Prob(a1), n.Prob(a2)))


def theorem_qnorm(rng, frame, w=None):
    g, _, u = _poss_pair(rng, frame, w)
    a1, a2 = (random_classical(rng, sorted(g), 1) for _ in range(2))
    return n.QEquiv(n.Poss(g, ((n.CDisj(a1, a2), u),)),
                    n.QDisj(n.Poss(g, ((a1, u),)), n.Poss(g, ((a2, u),))))


def theorem_qmon(rng, frame, w=None):
    g, _, u = _poss_pair(rng, frame, w)
    a1 = random_classical(rng, sorted(g), 1)
    a2 = rng.choice([n.CDisj(a1, random_classical(rng, sorted(g), 1)), a1])
    return n.QImp(n.CImp(a1, a2),
                  n.QImp(n.Poss(g, ((a1, u),)), n.Poss(g, ((a2, u),))))


def theorem_qcong(rng, frame, w=None):
    g, _, u = _poss_pair(rng, frame, w)
    u2 = u if rng.random() < 0.7 else random_complex_term(rng)
    a = random_classical(rng, sorted(g), 1)
    return n.QImp(n.EqC(u, u2),
                  n.QImp(n.Poss(g, ((a, u),)), n.Poss(g, ((a, u2),))))


def theorem_pnec(rng, frame, w=None):
    a = random_classical(rng, frame, 2)
    return n.QImp(a, n.Box(a))


def theorem_pnorm(rng, frame, w=None):
    a1, a2 = (random_classical(rng, frame, 2) for _ in range(2))
    return n.QImp(n.Box(n.CImp(a1, a2)), n.QImp(n.Box(a1), n.Box(a2)))


THEOREMS = {
    "PUnit": theorem_punit,
    "NEtgCap": theorem_netg_cap,
    "AAdd": theorem_aadd,
    "AMon": theorem_amon,
    "ASoE": theorem_asoe,
    "ANec": theorem_anec,
    "AMExc": theorem_amexc,
    "PAdd": theorem_padd,
    "Meas": theorem_meas,
    "PMon": theorem_pmon,
    "QNorm": theorem_qnorm,
    "QMon": theorem_qmon,
    "QCong": theorem_qcong,
    "PNec": theorem_pnec,
    "PNorm": theorem_pnorm,
}
