"""Abbreviation expansion and symbol extraction.

``expand`` rewrites any sugared AST into the core constructors, following
the definitional equations exactly (including fold order: iterated
conjunctions/disjunctions/sums associate to the left, and iterated families
run over subsets in ``subsets_in_order``).  Expansion is deterministic and
idempotent.
"""

from __future__ import annotations

from functools import reduce

from ..errors import ProvisoViolation
from . import nodes as n
from .nodes import (
    Abs, Amp, AmpOf, Arg, BigConj, BigQConj, Bot, Box, Cart, CConj, CDisj,
    CEquiv, CImp, CNeg, CondNonEtg, Conj, Const, CProd, CSum, ComplexVar,
    Dia, EntangledPair, EqC, EqR, Im, Ite, Leq, Lt, NonEtg, Node, Polar,
    Poss, Prob, QConj, QDisj, QEquiv, QImp, QNeg, Qubit, Re, RealVar, RProd,
    RSum, Top, CZERO, rat, subsets_in_order,
)


# ---------------------------------------------------------------------------
# fold helpers (shared with calculus instance builders)

def fold_cconj(items: list) -> n.ClassicalFormula:
    if not items:
        raise ValueError("empty classical conjunction has no core form")
    return reduce(CConj, items)


def fold_qconj(items: list) -> n.QuantumFormula:
    if not items:
        raise ValueError("empty quantum conjunction has no core form")
    return reduce(QConj, items)


def fold_qdisj(items: list) -> n.QuantumFormula:
    if not items:
        raise ValueError("empty quantum disjunction has no core form")
    return reduce(QDisj, items)


def fold_rsum(items: list) -> n.RealTerm:
    if not items:
        raise ValueError("empty sum of real terms has no core form")
    return reduce(RSum, items)


def amp_of(alpha: n.ClassicalFormula, target: frozenset, positives: frozenset) -> n.ComplexTerm:
    """The amplitude-of-alpha term: the primitive amplitude when alpha is
    verum, the conditional abbreviation otherwise."""
    if alpha == Top():
        return Amp(target, positives)
    return AmpOf(alpha, target, positives)


def sq_abs(u: n.ComplexTerm) -> n.RealTerm:
    """|u|^2 spelt as the product of two modulus terms."""
    return RProd(Abs(u), Abs(u))


def unit_sum(target: frozenset) -> n.RealTerm:
    """Sum over A of |amp(target, A)|^2 in canonical subset order."""
    return fold_rsum([sq_abs(Amp(target, a)) for a in subsets_in_order(target)])


def prob_sum(alpha: n.ClassicalFormula, bound: frozenset) -> n.RealTerm:
    """Sum over A of |alpha-amplitude(bound, A)|^2 in canonical order."""
    return fold_rsum([sq_abs(amp_of(alpha, bound, a)) for a in subsets_in_order(bound)])


def cond_nonetg_equations(inner: frozenset, outer: frozenset) -> list[n.QuantumFormula]:
    """The product equations of [inner|outer]: outer-amplitudes equal the
    products of the split amplitudes, for every pair of part-subsets."""
    if not inner <= outer:
        raise ProvisoViolation(
            f"[G|F] requires G within F, got G={sorted(inner)} F={sorted(outer)}")
    rest = outer - inner
    eqs: list[n.QuantumFormula] = []
    for a1 in subsets_in_order(inner):
        for a2 in subsets_in_order(rest):
            eqs.append(EqC(Amp(outer, a1 | a2), CProd(Amp(inner, a1), Amp(rest, a2))))
    return eqs


def vector_components(alpha: n.ClassicalFormula, target: frozenset) -> list[n.ComplexTerm]:
    """Components of the amplitude vector of alpha over target."""
    qs, _, _ = free_symbols(alpha)
    if not qs <= target:
        raise ProvisoViolation(
            f"vector term needs QB(alpha) within F, got {sorted(qs)} vs {sorted(target)}")
    return [amp_of(alpha, target, a) for a in subsets_in_order(target)]


def vector_eq(lhs: list[n.ComplexTerm], rhs: list[n.ComplexTerm]) -> n.QuantumFormula:
    if len(lhs) != len(rhs):
        raise ProvisoViolation("vector comparison over mismatched targets")
    return fold_qconj([EqC(a, b) for a, b in zip(lhs, rhs)])


def vector_subseteq(lhs: list[n.ComplexTerm], rhs: list[n.ComplexTerm]) -> n.QuantumFormula:
    if len(lhs) != len(rhs):
        raise ProvisoViolation("vector comparison over mismatched targets")
    return fold_qconj(
        [QImp(QNeg(EqC(a, CZERO)), EqC(a, b)) for a, b in zip(lhs, rhs)])


# ---------------------------------------------------------------------------
# expansion

def expand(ast: Node) -> Node:
    """Rewrite every abbreviation into the core constructors."""
    e = expand
    # classical -------------------------------------------------------
    if isinstance(ast, Qubit):
        return ast
    if isinstance(ast, CNeg):
        return CNeg(e(ast.arg))
    if isinstance(ast, CImp):
        return CImp(e(ast.left), e(ast.right))
    if isinstance(ast, CConj):
        return CNeg(CImp(e(ast.left), CNeg(e(ast.right))))
    if isinstance(ast, CDisj):
        return CImp(CNeg(e(ast.left)), e(ast.right))
    if isinstance(ast, CEquiv):
        return e(CConj(CImp(ast.left, ast.right), CImp(ast.right, ast.left)))
    if isinstance(ast, Top):
        return CImp(Qubit(0), Qubit(0))
    if isinstance(ast, Bot):
        return CNeg(CImp(Qubit(0), Qubit(0)))
    if isinstance(ast, BigConj):
        return _expand_bigconj(ast)
    # real terms ------------------------------------------------------
    if isinstance(ast, (RealVar, Const)):
        return ast
    if isinstance(ast, Prob):
        return Prob(e(ast.arg))
    if isinstance(ast, RSum):
        return RSum(e(ast.left), e(ast.right))
    if isinstance(ast, RProd):
        return RProd(e(ast.left), e(ast.right))
    if isinstance(ast, (Re, Im, Arg, Abs)):
        return type(ast)(e(ast.arg))
    # complex terms ---------------------------------------------------
    if isinstance(ast, ComplexVar):
        return ast
    if isinstance(ast, Amp):
        _check_amp(ast.target, ast.positives)
        return ast
    if isinstance(ast, AmpOf):
        return _expand_ampof(ast)
    if isinstance(ast, Cart):
        return Cart(e(ast.re), e(ast.im))
    if isinstance(ast, Polar):
        return Polar(e(ast.mod), e(ast.ang))
    if isinstance(ast, Conj):
        return Conj(e(ast.arg))
    if isinstance(ast, CSum):
        return CSum(e(ast.left), e(ast.right))
    if isinstance(ast, CProd):
        return CProd(e(ast.left), e(ast.right))
    if isinstance(ast, Ite):
        return Ite(e(ast.guard), e(ast.then), e(ast.other))
    # quantum ---------------------------------------------------------
    if isinstance(ast, Leq):
        return Leq(e(ast.left), e(ast.right))
    if isinstance(ast, NonEtg):
        return ast
    if isinstance(ast, QNeg):
        return QNeg(e(ast.arg))
    if isinstance(ast, QImp):
        return QImp(e(ast.left), e(ast.right))
    if isinstance(ast, QDisj):
        return QImp(QNeg(e(ast.left)), e(ast.right))
    if isinstance(ast, QConj):
        # g1 && g2  ==  !((!g1) || (!g2))  ==  !((!!g1) ==> (!g2))
        return QNeg(QImp(QNeg(QNeg(e(ast.left))), QNeg(e(ast.right))))
    if isinstance(ast, QEquiv):
        return e(QConj(QImp(ast.left, ast.right), QImp(ast.right, ast.left)))
    if isinstance(ast, Lt):
        return e(QConj(Leq(ast.left, ast.right), QNeg(Leq(ast.right, ast.left))))
    if isinstance(ast, EqR):
        return e(QConj(Leq(ast.left, ast.right), Leq(ast.right, ast.left)))
    if isinstance(ast, EqC):
        return e(QConj(EqR(Re(ast.left), Re(ast.right)),
                       EqR(Im(ast.left), Im(ast.right))))
    if isinstance(ast, CondNonEtg):
        return e(fold_qconj(cond_nonetg_equations(ast.inner, ast.outer)))
    if isinstance(ast, EntangledPair):
        return _expand_entangled(ast)
    if isinstance(ast, Poss):
        return _expand_poss(ast)
    if isinstance(ast, Dia):
        return e(Lt(Const(rat(0)), Prob(ast.arg)))
    if isinstance(ast, Box):
        return e(EqR(Const(rat(1)), Prob(ast.arg)))
    if isinstance(ast, BigQConj):
        return _expand_bigqconj(ast)
    raise TypeError(f"not an AST node: {ast!r}")


def _check_amp(target: frozenset, positives: frozenset) -> None:
    if not positives <= target:
        raise ProvisoViolation(
            f"amplitude term needs A within F, got A={sorted(positives)} F={sorted(target)}")


def _expand_bigconj(ast: BigConj) -> n.ClassicalFormula:
    if not ast.positives <= ast.frame:
        raise ProvisoViolation(
            f"molecular formula needs A within F, got A={sorted(ast.positives)}"
            f" F={sorted(ast.frame)}")
    pos = [Qubit(k) for k in sorted(ast.frame & ast.positives)]
    neg = [CNeg(Qubit(k)) for k in sorted(ast.frame - ast.positives)]
    if pos and neg:
        return expand(CConj(fold_cconj(pos), fold_cconj(neg)))
    if pos:
        return expand(fold_cconj(pos))
    if neg:
        return expand(fold_cconj(neg))
    return expand(Top())


def _expand_ampof(ast: AmpOf) -> n.ComplexTerm:
    _check_amp(ast.target, ast.positives)
    if ast.arg == Top():
        return Amp(ast.target, ast.positives)
    qs, _, _ = free_symbols(ast.arg)
    if not qs <= ast.target:
        raise ProvisoViolation(
            f"alpha-amplitude needs QB(alpha) within F, got {sorted(qs)}"
            f" vs {sorted(ast.target)}")
    guard = expand(CImp(BigConj(ast.target, ast.positives), ast.arg))
    return Ite(guard, Amp(ast.target, ast.positives), expand(CZERO))


def _expand_entangled(ast: EntangledPair) -> n.QuantumFormula:
    if ast.first == ast.second:
        raise ProvisoViolation("entanglement assertion needs two distinct qubits")
    if ast.first not in ast.scope or ast.second not in ast.scope:
        raise ProvisoViolation("entanglement assertion needs both qubits in scope")
    gs = [g for g in subsets_in_order(ast.scope)
          if g != ast.scope and ast.first in g and ast.second not in g]
    return QNeg(expand(fold_qdisj([NonEtg(g) for g in gs])))


def _expand_poss(ast: Poss) -> n.QuantumFormula:
    if not ast.pairs:
        raise ProvisoViolation("possibility listing needs at least one pair")
    singles = []
    for alpha, u in ast.pairs:
        qs, _, _ = free_symbols(alpha)
        if not qs <= ast.target:
            raise ProvisoViolation(
                f"possibility pair needs QB(alpha) within F, got {sorted(qs)}"
                f" vs {sorted(ast.target)}")
        options = fold_qdisj([EqC(amp_of(alpha, ast.target, a), u)
                              for a in subsets_in_order(ast.target)])
        singles.append(QConj(QConj(NonEtg(ast.target),
                                   Lt(Const(rat(0)), Abs(u))),
                             options))
    return expand(fold_qconj(singles))


def _expand_bigqconj(ast: BigQConj) -> n.QuantumFormula:
    chosen = list(ast.chosen)
    for d in chosen:
        if d not in ast.atoms:
            raise ProvisoViolation("molecular formula needs D within Q")
    if not ast.atoms:
        raise ProvisoViolation("molecular formula over an empty atom set")
    rest = [q for q in ast.atoms if q not in chosen]
    if chosen and rest:
        return expand(QConj(fold_qconj(chosen), fold_qconj([QNeg(q) for q in rest])))
    if chosen:
        return expand(fold_qconj(chosen))
    return expand(fold_qconj([QNeg(q) for q in rest]))


# ---------------------------------------------------------------------------
# free symbols

def free_symbols(ast: Node) -> tuple[frozenset[int], frozenset[int], frozenset[int]]:
    """Occurring (qubits, real variables, complex variables).

    Defined so that the sets agree with those of the expanded form; nodes
    whose expansion introduces bookkeeping qubits (verum/falsum use qb0)
    delegate to their expansion.
    """
    qs: set[int] = set()
    xs: set[int] = set()
    zs: set[int] = set()
    _collect(ast, qs, xs, zs)
    return frozenset(qs), frozenset(xs), frozenset(zs)


def _collect(ast: Node, qs: set, xs: set, zs: set) -> None:
    if isinstance(ast, Qubit):
        qs.add(ast.index)
    elif isinstance(ast, (CNeg, Conj, Re, Im, Arg, Abs, QNeg, Prob, Dia, Box)):
        _collect(ast.arg, qs, xs, zs)
    elif isinstance(ast, (CImp, CConj, CDisj, CEquiv, RSum, RProd, CSum, CProd,
                          QImp, QDisj, QConj, QEquiv, Leq, Lt, EqR, EqC)):
        _collect(ast.left, qs, xs, zs)
        _collect(ast.right, qs, xs, zs)
    elif isinstance(ast, (Top, Bot)):
        qs.add(0)
    elif isinstance(ast, BigConj):
        qs.update(ast.frame) if ast.frame else qs.add(0)
    elif isinstance(ast, RealVar):
        xs.add(ast.index)
    elif isinstance(ast, Const):
        pass
    elif isinstance(ast, ComplexVar):
        zs.add(ast.index)
    elif isinstance(ast, Amp):
        qs.update(ast.target)
    elif isinstance(ast, AmpOf):
        if ast.arg == Top():
            qs.update(ast.target)
        else:
            qs.update(ast.target) if ast.target else qs.add(0)
            _collect(ast.arg, qs, xs, zs)
    elif isinstance(ast, (Cart, Polar)):
        _collect(ast.re if isinstance(ast, Cart) else ast.mod, qs, xs, zs)
        _collect(ast.im if isinstance(ast, Cart) else ast.ang, qs, xs, zs)
    elif isinstance(ast, Ite):
        _collect(ast.guard, qs, xs, zs)
        _collect(ast.then, qs, xs, zs)
        _collect(ast.other, qs, xs, zs)
    elif isinstance(ast, NonEtg):
        qs.update(ast.target)
    elif isinstance(ast, CondNonEtg):
        qs.update(ast.outer)
    elif isinstance(ast, EntangledPair):
        qs.update(ast.scope - {ast.second})
    elif isinstance(ast, Poss):
        qs.update(ast.target)
        for alpha, u in ast.pairs:
            _collect(alpha, qs, xs, zs)
            _collect(u, qs, xs, zs)
    elif isinstance(ast, BigQConj):
        for a in ast.atoms:
            _collect(a, qs, xs, zs)
    else:
        raise TypeError(f"not an AST node: {ast!r}")
