"""Denotation of terms and satisfaction of formulas over structures.

Comparisons of denoted values use the tolerance EPS_CMP: values within
EPS_CMP of each other count as equal, so `<=` holds whenever the left side
exceeds the right by at most EPS_CMP.  The argument of the complex number 0
is defined to be 0.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import OutOfFrame, UnboundVariable
from .structures import QuantumStructure, Valuation
from .syntax import expand, free_symbols
from .syntax import nodes as n

EPS_CMP = 1e-9


@dataclass(frozen=True)
class Assignment:
    """Values for real and complex variables; lookups of unset variables
    fail at the use site."""

    reals: Mapping[int, float] = field(default_factory=dict)
    complexes: Mapping[int, complex] = field(default_factory=dict)

    def real(self, index: int) -> float:
        try:
            return float(self.reals[index])
        except KeyError:
            raise UnboundVariable(f"x{index} has no value") from None

    def cplx(self, index: int) -> complex:
        try:
            return complex(self.complexes[index])
        except KeyError:
            raise UnboundVariable(f"z{index} has no value") from None


EMPTY_ASSIGNMENT = Assignment({}, {})


# ---------------------------------------------------------------------------
# classical satisfaction and extents

def classical_sat(v: Valuation, alpha: n.ClassicalFormula) -> bool:
    """Truth of a classical formula at a single valuation."""
    alpha = expand(alpha)
    return _sat_core(v, alpha)


def _sat_core(v: Valuation, alpha) -> bool:
    if isinstance(alpha, n.Qubit):
        return v(alpha.index)
    if isinstance(alpha, n.CNeg):
        return not _sat_core(v, alpha.arg)
    if isinstance(alpha, n.CImp):
        return not _sat_core(v, alpha.left) or _sat_core(v, alpha.right)
    raise TypeError(f"not a core classical formula: {alpha!r}")


def extent(alpha: n.ClassicalFormula, admissible: Iterable[Valuation],
           subset: Iterable[int]) -> frozenset[Valuation]:
    """The valuations over `subset` obtained by restricting `admissible`
    that satisfy alpha."""
    subset = frozenset(subset)
    alpha = expand(alpha)
    qs, _, _ = free_symbols(alpha)
    if not qs <= subset:
        raise OutOfFrame(f"formula over {sorted(qs)} not within {sorted(subset)}")
    restricted = {v.restrict(subset) for v in admissible}
    return frozenset(v for v in restricted if _sat_core(v, alpha))


def measure(w: QuantumStructure, target: Iterable[int],
            outcomes: Iterable[Valuation]) -> float:
    """Probability of observing the qubits in `target` in one of the given
    valuations, under logical projective measurement."""
    target = frozenset(target)
    w.check_frame(target)
    outcomes = frozenset(outcomes)
    total = 0.0
    for v, a in w.full_state.amplitudes.items():
        if v.restrict(target) in outcomes:
            total += abs(a) ** 2
    return total


# ---------------------------------------------------------------------------
# term denotation

def denote(term, w: QuantumStructure, rho: Assignment = EMPTY_ASSIGNMENT):
    """Value of a real (float) or complex (complex) term."""
    term = expand(term)
    return _denote_core(term, w, rho)


def _denote_core(term, w, rho):
    d = lambda t: _denote_core(t, w, rho)
    if isinstance(term, n.RealVar):
        return rho.real(term.index)
    if isinstance(term, n.Const):
        return term.expr.value()
    if isinstance(term, n.Prob):
        qs, _, _ = free_symbols(term.arg)
        return measure(w, qs, extent(term.arg, w.admissible, qs))
    if isinstance(term, n.RSum):
        return d(term.left) + d(term.right)
    if isinstance(term, n.RProd):
        return d(term.left) * d(term.right)
    if isinstance(term, n.Re):
        return d(term.arg).real
    if isinstance(term, n.Im):
        return d(term.arg).imag
    if isinstance(term, n.Arg):
        value = d(term.arg)
        return 0.0 if value == 0 else cmath.phase(value)
    if isinstance(term, n.Abs):
        return abs(d(term.arg))
    if isinstance(term, n.ComplexVar):
        return rho.cplx(term.index)
    if isinstance(term, n.Amp):
        return w.amp(term.target, term.positives)
    if isinstance(term, n.Cart):
        return complex(d(term.re), d(term.im))
    if isinstance(term, n.Polar):
        return d(term.mod) * cmath.exp(1j * d(term.ang))
    if isinstance(term, n.Conj):
        return d(term.arg).conjugate()
    if isinstance(term, n.CSum):
        return d(term.left) + d(term.right)
    if isinstance(term, n.CProd):
        return d(term.left) * d(term.right)
    if isinstance(term, n.Ite):
        branch = term.then if _holds_core(term.guard, w, rho) else term.other
        return d(branch)
    raise TypeError(f"not a core term: {term!r}")


# ---------------------------------------------------------------------------
# quantum satisfaction

def satisfies(w: QuantumStructure, rho: Assignment, gamma,
              eps_cmp: float = EPS_CMP) -> bool:
    """Global satisfaction of a quantum formula."""
    gamma = expand(gamma)
    return _holds_core(gamma, w, rho, eps_cmp)


def _holds_core(gamma, w, rho, eps_cmp: float = EPS_CMP) -> bool:
    if isinstance(gamma, n.ClassicalFormula):
        qs, _, _ = free_symbols(gamma)
        w.check_frame(qs)
        return all(_sat_core(v, gamma) for v in w.admissible)
    if isinstance(gamma, n.Leq):
        left = _denote_core(gamma.left, w, rho)
        right = _denote_core(gamma.right, w, rho)
        return left <= right + eps_cmp
    if isinstance(gamma, n.NonEtg):
        return w.is_block_union(gamma.target)
    if isinstance(gamma, n.QNeg):
        return not _holds_core(gamma.arg, w, rho, eps_cmp)
    if isinstance(gamma, n.QImp):
        return (not _holds_core(gamma.left, w, rho, eps_cmp)
                or _holds_core(gamma.right, w, rho, eps_cmp))
    raise TypeError(f"not a core quantum formula: {gamma!r}")


def entails(premises: Iterable, conclusion, structures: Iterable[QuantumStructure],
            rho: Assignment = EMPTY_ASSIGNMENT) -> bool:
    """Finite-set entailment check: every supplied structure satisfying all
    premises satisfies the conclusion."""
    for w in structures:
        if all(satisfies(w, rho, g) for g in premises):
            if not satisfies(w, rho, conclusion):
                return False
    return True
