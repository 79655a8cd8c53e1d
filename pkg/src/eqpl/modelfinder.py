"""Model search by reduction to polynomial constraint systems.

The pipeline mirrors the completeness construction: put the formula in
quantum disjunctive normal form, rewrite non-entanglement atoms into
amplitude product equations, complete each disjunct (probability terms
expanded to squared-amplitude sums, alternative-term guards decided by
branching, the admissible-valuation set fixed), search for the finest
partition of the bound compatible with the constraints, emit a polynomial
system over real-decomposed amplitude variables, solve it numerically, and
rebuild a structure from the solution.

Derivability tests of the original construction are replaced by
satisfiability tests of the accumulated system (an exact linear tier plus a
seeded numeric probe); every returned model is re-checked against the
independent satisfaction semantics, so models are sound even though the
numeric search is incomplete: a NoModelFound verdict never means
unsatisfiable, while Inconsistent is backed by an exact refutation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

import numpy as np

from .arithmetic import _Eliminations, _fm_feasible, _BranchCap
from .errors import AtomBudgetExceeded, OutOfFrame
from .calculus import eval_skeleton, quantum_atoms
from .semantics import EPS_CMP, Assignment, classical_sat, satisfies
from .structures import (
    QuantumStructure, StateVector, Valuation, all_valuations, schmidt_factor,
    validate_structure,
)
from .syntax import cond_nonetg_equations, expand, free_symbols, prob_sum, render
from .syntax import nodes as n
from .syntax.nodes import subsets_in_order


@dataclass(frozen=True)
class FindConfig:
    seed: int = 0
    restarts: int = 64
    tol: float = 1e-8
    probe_restarts: int = 10
    atom_budget: int = 20
    branch_budget: int = 4000
    refine_rounds: int = 4


DEFAULT_CONFIG = FindConfig()


# ---------------------------------------------------------------------------
# quantum DNF

@dataclass(frozen=True)
class MolecularFormula:
    """(atoms, chosen): the conjunction of the chosen atoms and the
    negations of the rest."""

    atoms: tuple
    chosen: tuple

    def formula(self) -> n.QuantumFormula:
        return n.BigQConj(self.atoms, self.chosen)


def quantum_dnf(gamma, bound: Sequence[int],
                atom_budget: int = DEFAULT_CONFIG.atom_budget) -> list[MolecularFormula]:
    """All molecular formulas over gamma's atom set whose abstraction
    propositionally implies gamma's abstraction."""
    bound = frozenset(bound)
    qs, _, _ = free_symbols(gamma)
    if not qs <= bound:
        raise OutOfFrame(f"formula over {sorted(qs)} exceeds bound {sorted(bound)}")
    core = expand(gamma)
    atoms = quantum_atoms(core)
    if len(atoms) > atom_budget:
        raise AtomBudgetExceeded(
            f"{len(atoms)} atoms exceed the budget of {atom_budget}")
    out = []
    for mask in range(1 << len(atoms)):
        values = {a: bool(mask >> i & 1) for i, a in enumerate(atoms)}
        if eval_skeleton(core, values):
            out.append(MolecularFormula(
                tuple(atoms), tuple(a for a in atoms if values[a])))
    return out


def _branch_dnf(core, positive: bool, budget: int) -> list[dict]:
    """Partial-assignment DNF branches: each branch maps atoms to
    polarities and implies the (possibly negated) formula.  Conjunctions
    contribute single merged branches, so only genuine disjunctions
    multiply."""
    if isinstance(core, (n.ClassicalFormula, n.Leq, n.NonEtg)):
        return [{core: positive}]
    if isinstance(core, n.QNeg):
        return _branch_dnf(core.arg, not positive, budget)
    if isinstance(core, n.QImp):
        if positive:
            return (_branch_dnf(core.left, False, budget)
                    + _branch_dnf(core.right, True, budget))
        merged = []
        for left in _branch_dnf(core.left, True, budget):
            for right in _branch_dnf(core.right, False, budget):
                combined = _merge_branch(left, right)
                if combined is not None:
                    merged.append(combined)
                if len(merged) > budget:
                    raise AtomBudgetExceeded("disjunct branch budget exceeded")
        return merged
    raise TypeError(f"not a core quantum formula: {core!r}")


def _merge_branch(a: dict, b: dict) -> dict | None:
    out = dict(a)
    for atom, pol in b.items():
        if out.get(atom, pol) != pol:
            return None  # contradictory polarities
        out[atom] = pol
    return out


# ---------------------------------------------------------------------------
# non-entanglement elimination

def eliminate_nonentanglement(m: MolecularFormula, bound: Sequence[int]) -> n.QuantumFormula | None:
    """Replace every non-entanglement literal by (the negation of) the
    corresponding conditional-factorizability equations over the bound.
    Returns None when the molecular formula denies factorizability of the
    bound itself, which no bounded structure satisfies."""
    bound = frozenset(bound)
    parts: list[n.QuantumFormula] = []
    for atom in m.atoms:
        positive = atom in m.chosen
        if isinstance(atom, n.NonEtg):
            if atom.target == bound:
                if not positive:
                    return None
                continue
            equations = cond_nonetg_equations(atom.target, bound)
            block = equations[0]
            for eq in equations[1:]:
                block = n.QConj(block, eq)
            parts.append(block if positive else n.QNeg(block))
        else:
            parts.append(atom if positive else n.QNeg(atom))
    if not parts:
        return n.Leq(n.Const(n.rat(0)), n.Const(n.rat(0)))
    out = parts[0]
    for p in parts[1:]:
        out = n.QConj(out, p)
    return out


# ---------------------------------------------------------------------------
# Henkin completion

@dataclass
class CompletedForm:
    """One fully decided disjunct: a fixed admissible set over the bound,
    alternative terms resolved, probabilities expanded."""

    bound: frozenset
    positives: tuple            # classical core formulas holding globally
    witnesses: tuple            # classical core formulas each violated somewhere
    eq_atoms: tuple             # (core Leq with Prob/Ite removed, polarity)
    admitted: tuple             # subsets A of the bound with v^F_A admissible
    refused: tuple
    valuations: frozenset       # the admissible set (maximal for positives)
    forced_unions: tuple = ()   # qubit sets the disjunct asserts unentangled


@dataclass
class Refutation:
    exact: bool
    reason: str


def _subst_prob(term, bound: frozenset):
    """Replace probability terms by their squared-amplitude sums over the
    bound (the squares follow the probability axiom)."""
    if isinstance(term, n.Prob):
        return expand(prob_sum(term.arg, bound))
    if isinstance(term, (n.RSum, n.RProd, n.CSum, n.CProd)):
        return type(term)(_subst_prob(term.left, bound), _subst_prob(term.right, bound))
    if isinstance(term, (n.Re, n.Im, n.Arg, n.Abs, n.Conj)):
        return type(term)(_subst_prob(term.arg, bound))
    if isinstance(term, n.Cart):
        return n.Cart(_subst_prob(term.re, bound), _subst_prob(term.im, bound))
    if isinstance(term, n.Polar):
        return n.Polar(_subst_prob(term.mod, bound), _subst_prob(term.ang, bound))
    if isinstance(term, n.Ite):
        return n.Ite(term.guard, _subst_prob(term.then, bound),
                     _subst_prob(term.other, bound))
    return term


def _collect_guards(term, out: dict) -> None:
    """Map each alternative-term guard to its ite occurrences."""
    if isinstance(term, n.Ite):
        out.setdefault(term.guard, []).append(term)
        _collect_guards(term.then, out)
        _collect_guards(term.other, out)
    elif isinstance(term, (n.RSum, n.RProd, n.CSum, n.CProd)):
        _collect_guards(term.left, out)
        _collect_guards(term.right, out)
    elif isinstance(term, (n.Re, n.Im, n.Arg, n.Abs, n.Conj)):
        _collect_guards(term.arg, out)
    elif isinstance(term, n.Cart):
        _collect_guards(term.re, out)
        _collect_guards(term.im, out)
    elif isinstance(term, n.Polar):
        _collect_guards(term.mod, out)
        _collect_guards(term.ang, out)


_CZERO_CORE = expand(n.CZERO)


def _amplitude_shaped(guard, ites: list) -> bool:
    """Whether every alternative term with this guard is an amplitude
    selector ite((molecular -> alpha); amp; 0).  For those, deciding the
    guard against the maximal admissible set subsumes the other branch:
    refusing the valuation only adds zero constraints on the amplitude the
    guard selects, so no search branching is needed."""
    for ite in ites:
        if not (isinstance(ite.then, n.Amp) and ite.other == _CZERO_CORE):
            return False
        if not (isinstance(guard, n.CImp)
                and guard.left == expand(n.BigConj(ite.then.target,
                                                   ite.then.positives))):
            return False
    return True


def _resolve_ites(term, decisions: Mapping):
    if isinstance(term, n.Ite):
        branch = term.then if decisions[term.guard] else term.other
        return _resolve_ites(branch, decisions)
    if isinstance(term, (n.RSum, n.RProd, n.CSum, n.CProd)):
        return type(term)(_resolve_ites(term.left, decisions),
                          _resolve_ites(term.right, decisions))
    if isinstance(term, (n.Re, n.Im, n.Arg, n.Abs, n.Conj)):
        return type(term)(_resolve_ites(term.arg, decisions))
    if isinstance(term, n.Cart):
        return n.Cart(_resolve_ites(term.re, decisions),
                      _resolve_ites(term.im, decisions))
    if isinstance(term, n.Polar):
        return n.Polar(_resolve_ites(term.mod, decisions),
                       _resolve_ites(term.ang, decisions))
    return term


def henkin_completions(branch: Mapping, bound: frozenset,
                       refutations: list,
                       forced_unions: tuple = ()) -> Iterator[CompletedForm]:
    """All completions of a branch (a map from core classical/ineq atoms to
    polarities), branching over alternative-term guards depth-first.

    The admissible set is always the maximal one for the accumulated
    positive classical constraints; failed completions append exact
    refutation records."""
    classical_pos = [a for a, pol in branch.items()
                     if isinstance(a, n.ClassicalFormula) and pol]
    classical_neg = [a for a, pol in branch.items()
                     if isinstance(a, n.ClassicalFormula) and not pol]
    ineqs = [(_subst_prob_atom(a, bound), pol) for a, pol in branch.items()
             if isinstance(a, n.Leq)]
    guard_map: dict = {}
    for atom, _ in ineqs:
        _collect_guards(atom.left, guard_map)
        _collect_guards(atom.right, guard_map)
    branching = [g for g, ites in guard_map.items()
                 if not _amplitude_shaped(g, ites)]
    forced = [g for g in guard_map if g not in branching]

    universe = all_valuations(bound)

    def sat_set(formulas) -> frozenset:
        return frozenset(v for v in universe
                         if all(classical_sat(v, f) for f in formulas))

    def dfs(index: int, positives: list, negatives: list) -> Iterator[CompletedForm]:
        candidates = sat_set(positives)
        if not candidates:
            refutations.append(Refutation(
                True, "no valuation satisfies the classical constraints "
                      + ", ".join(render(f) for f in positives)))
            return
        if index == len(branching):
            decisions = {g: (g in positives) for g in branching}
            for g in forced:
                decisions[g] = all(classical_sat(v, g) for v in candidates)
            for beta in negatives:
                if all(classical_sat(v, beta) for v in candidates):
                    refutations.append(Refutation(
                        True, f"{render(beta)} must fail somewhere, but every"
                              " admissible valuation satisfies it"))
                    return
            eq_atoms = tuple(
                (n.Leq(_resolve_ites(a.left, decisions),
                       _resolve_ites(a.right, decisions)), pol)
                for a, pol in ineqs)
            admitted = tuple(sorted((v.trues for v in candidates),
                                    key=lambda s: sorted(s)))
            refused = tuple(a for a in subsets_in_order(bound) if a not in admitted)
            yield CompletedForm(bound, tuple(positives), tuple(negatives),
                                eq_atoms, admitted, refused, candidates,
                                forced_unions)
            return
        guard = branching[index]
        if all(classical_sat(v, guard) for v in candidates):
            yield from dfs(index + 1, positives + [guard], negatives)
            return
        # paper order: add the negated guard first, keeping the set maximal
        yield from dfs(index + 1, positives, negatives + [guard])
        yield from dfs(index + 1, positives + [guard], negatives)

    yield from dfs(0, list(classical_pos), list(classical_neg))


def _subst_prob_atom(atom: n.Leq, bound: frozenset) -> n.Leq:
    return n.Leq(_subst_prob(atom.left, bound), _subst_prob(atom.right, bound))

# ---------------------------------------------------------------------------
# polynomials over real-decomposed variables

# atom keys: ("x", k) user real; ("re", k)/("im", k) user complex parts;
# ("ar", G, A)/("ai", G, A) amplitude parts (G, A sorted tuples);
# ("op", term) opaque real subterm evaluated directly.


def _p_const(c):
    return {(): c} if c else {}


def _p_atom(key):
    return {((key, 1),): Fraction(1)}


def _p_add(a, b):
    out = dict(a)
    for mono, c in b.items():
        s = out.get(mono, 0) + c
        if s == 0 and not isinstance(s, float):
            out.pop(mono, None)
        else:
            out[mono] = s
    return out


def _p_scale(a, c):
    if c == 0 and not isinstance(c, float):
        return {}
    return {m: v * c for m, v in a.items()}


def _p_mul(a, b):
    out = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            merged = {}
            for key, e in itertools.chain(m1, m2):
                merged[key] = merged.get(key, 0) + e
            mono = tuple(sorted(merged.items()))
            s = out.get(mono, 0) + c1 * c2
            if s == 0 and not isinstance(s, float):
                out.pop(mono, None)
            else:
                out[mono] = s
    return out


def _p_sub(a, b):
    return _p_add(a, _p_scale(b, Fraction(-1)))


class TermContext:
    """Term-to-polynomial conversion with amplitude substitution: on unions
    of partition blocks an amplitude is the product of block variables,
    elsewhere it is its own free variable pair."""

    def __init__(self, bound: frozenset, partition: Sequence[frozenset]):
        self.bound = bound
        self.partition = [frozenset(b) for b in partition]

    def is_union(self, target: frozenset) -> bool:
        return all(b <= target or not b & target for b in self.partition)

    def amp_pair(self, target: frozenset, positives: frozenset):
        if target <= self.bound and self.is_union(target):
            re_p, im_p = _p_const(Fraction(1)), _p_const(Fraction(0))
            for block in self.partition:
                if block <= target:
                    key = (tuple(sorted(block)), tuple(sorted(positives & block)))
                    bre, bim = _p_atom(("ar",) + key), _p_atom(("ai",) + key)
                    re_p, im_p = (_p_sub(_p_mul(re_p, bre), _p_mul(im_p, bim)),
                                  _p_add(_p_mul(re_p, bim), _p_mul(im_p, bre)))
            return re_p, im_p
        key = (tuple(sorted(target)), tuple(sorted(positives)))
        return _p_atom(("ar",) + key), _p_atom(("ai",) + key)

    def real(self, t):
        if isinstance(t, n.RealVar):
            return _p_atom(("x", t.index))
        if isinstance(t, n.Const):
            exact = t.expr.exact()
            return _p_const(exact if exact is not None else t.expr.value())
        if isinstance(t, n.RSum):
            return _p_add(self.real(t.left), self.real(t.right))
        if isinstance(t, n.RProd):
            if (isinstance(t.left, n.Abs) and t.left == t.right):
                re_p, im_p = self.cplx(t.left.arg)
                return _p_add(_p_mul(re_p, re_p), _p_mul(im_p, im_p))
            return _p_mul(self.real(t.left), self.real(t.right))
        if isinstance(t, n.Re):
            return self.cplx(t.arg)[0]
        if isinstance(t, n.Im):
            return self.cplx(t.arg)[1]
        if isinstance(t, (n.Arg, n.Abs)):
            try:
                re_p, im_p = self.cplx(t.arg)
            except TypeError:
                return _p_atom(("op", t))
            if set(re_p) <= {()} and set(im_p) <= {()}:
                re_v = float(re_p.get((), 0.0))
                im_v = float(im_p.get((), 0.0))
                if isinstance(t, n.Abs):
                    return _p_const(math.hypot(re_v, im_v))
                angle = 0.0 if re_v == im_v == 0 else math.atan2(im_v, re_v)
                return _p_const(angle)
            if isinstance(t, n.Abs) and set(im_p) <= {()} and im_p.get((), 0) == 0:
                # |real-valued| stays polynomial only via its square; keep opaque
                return _p_atom(("op", t))
            return _p_atom(("op", t))
        raise TypeError(f"unexpected term in constraints: {t!r}")

    def cplx(self, u):
        if isinstance(u, n.ComplexVar):
            return _p_atom(("re", u.index)), _p_atom(("im", u.index))
        if isinstance(u, n.Amp):
            return self.amp_pair(u.target, u.positives)
        if isinstance(u, n.Cart):
            return self.real(u.re), self.real(u.im)
        if isinstance(u, n.Polar):
            mod, ang = self.real(u.mod), self.real(u.ang)
            if set(ang) <= {()} and set(mod) <= {()}:
                m = float(mod.get((), 0))
                a = float(ang.get((), 0))
                return _p_const(m * math.cos(a)), _p_const(m * math.sin(a))
            return (_p_atom(("op", n.Re(u))), _p_atom(("op", n.Im(u))))
        if isinstance(u, n.Conj):
            re_p, im_p = self.cplx(u.arg)
            return re_p, _p_scale(im_p, Fraction(-1))
        if isinstance(u, n.CSum):
            a, b = self.cplx(u.left), self.cplx(u.right)
            return _p_add(a[0], b[0]), _p_add(a[1], b[1])
        if isinstance(u, n.CProd):
            a, b = self.cplx(u.left), self.cplx(u.right)
            return (_p_sub(_p_mul(a[0], b[0]), _p_mul(a[1], b[1])),
                    _p_add(_p_mul(a[0], b[1]), _p_mul(a[1], b[0])))
        raise TypeError(f"unexpected complex term in constraints: {u!r}")


@dataclass(frozen=True)
class Constraint:
    kind: str  # "eq" (= 0), "le" (<= 0), "lt" (< 0)
    poly: Mapping
    origin: str = ""


@dataclass
class ConstraintSystem:
    """Polynomial (in)equations over the real decomposition of amplitude
    and assignment variables."""

    bound: frozenset
    partition: tuple
    constraints: tuple
    variables: tuple  # ordered atom keys, opaque atoms excluded

    @property
    def amp_vars(self):
        seen = []
        for key in self.variables:
            if key[0] == "ar":
                seen.append((frozenset(key[1]), frozenset(key[2])))
        return seen

    @property
    def free_vars(self):
        return [key for key in self.variables if key[0] in ("x", "re", "im")]


def _poly_vars(poly, ctx: "TermContext") -> set:
    out = set()
    for mono in poly:
        for key, _ in mono:
            if key[0] == "op":
                out |= _term_vars(key[1], ctx)
            else:
                out.add(key)
    return out


def _term_vars(term, ctx: "TermContext") -> set:
    """Base variables appearing in an opaque term, with amplitudes resolved
    through the context's block substitution."""
    out: set = set()

    def walk(t):
        if isinstance(t, n.RealVar):
            out.add(("x", t.index))
        elif isinstance(t, n.ComplexVar):
            out.add(("re", t.index))
            out.add(("im", t.index))
        elif isinstance(t, n.Amp):
            for pair in (ctx.amp_pair(t.target, t.positives)):
                out.update(_poly_vars(pair, ctx))
        elif isinstance(t, (n.RSum, n.RProd, n.CSum, n.CProd)):
            walk(t.left)
            walk(t.right)
        elif isinstance(t, (n.Re, n.Im, n.Arg, n.Abs, n.Conj)):
            walk(t.arg)
        elif isinstance(t, n.Cart):
            walk(t.re)
            walk(t.im)
        elif isinstance(t, n.Polar):
            walk(t.mod)
            walk(t.ang)

    walk(term)
    return out

# ---------------------------------------------------------------------------
# system emission

def emit_system(completed: CompletedForm, partition: Sequence[frozenset]) -> ConstraintSystem:
    """The polynomial system of a completed disjunct for a given partition:
    its inequation literals, one unit-norm equation per block, and zero
    equations for the amplitudes of refused valuations."""
    ctx = TermContext(completed.bound, partition)
    constraints: list[Constraint] = []
    for atom, polarity in completed.eq_atoms:
        diff = _p_sub(ctx.real(atom.left), ctx.real(atom.right))
        if polarity:
            constraints.append(Constraint("le", diff, render(atom)))
        else:
            constraints.append(Constraint("lt", _p_scale(diff, Fraction(-1)),
                                          "!" + render(atom)))
    unions: list[frozenset] = []
    for g in itertools.chain(ctx.partition, (completed.bound,),
                             completed.forced_unions):
        g = frozenset(g)
        if g and g <= completed.bound and g not in unions:
            unions.append(g)
    projections = {g: {frozenset(a) & g for a in completed.admitted} for g in unions}
    for g in unions:
        total = _p_const(Fraction(-1))
        for a in subsets_in_order(g):
            re_p, im_p = ctx.amp_pair(g, a)
            total = _p_add(total, _p_add(_p_mul(re_p, re_p), _p_mul(im_p, im_p)))
        constraints.append(Constraint("eq", total,
                                      f"unit norm over {sorted(g)}"))
        for a in subsets_in_order(g):
            if a in projections[g]:
                continue
            re_p, im_p = ctx.amp_pair(g, a)
            label = "".join("1" if q in a else "0" for q in sorted(g))
            constraints.append(Constraint(
                "eq", re_p, f"inadmissible pattern {label} over {sorted(g)} (re)"))
            constraints.append(Constraint(
                "eq", im_p, f"inadmissible pattern {label} over {sorted(g)} (im)"))
    variables: set = set()
    for c in constraints:
        variables |= _poly_vars(c.poly, ctx)
    for block in ctx.partition:  # unit equations already add these; be safe
        for a in subsets_in_order(block):
            key = (tuple(sorted(block)), tuple(sorted(a)))
            variables.add(("ar",) + key)
            variables.add(("ai",) + key)
    return ConstraintSystem(completed.bound, tuple(ctx.partition),
                            tuple(constraints), tuple(sorted(variables)))


# ---------------------------------------------------------------------------
# evaluation of polynomials and opaque terms

class _VecEval:
    def __init__(self, system: ConstraintSystem):
        self.system = system
        self.index = {key: i for i, key in enumerate(system.variables)}
        self.ctx = TermContext(system.bound, system.partition)

    def atom(self, key, vec) -> float:
        if key[0] == "op":
            return float(self.term(key[1], vec).real)
        return float(vec[self.index[key]])

    def term(self, t, vec):
        ev = lambda s: self.term(s, vec)
        if isinstance(t, n.RealVar):
            return vec[self.index[("x", t.index)]]
        if isinstance(t, n.Const):
            return t.expr.value()
        if isinstance(t, n.RSum):
            return ev(t.left) + ev(t.right)
        if isinstance(t, n.RProd):
            return ev(t.left) * ev(t.right)
        if isinstance(t, n.Re):
            return ev(t.arg).real if isinstance(ev(t.arg), complex) else ev(t.arg)
        if isinstance(t, n.Im):
            value = ev(t.arg)
            return value.imag if isinstance(value, complex) else 0.0
        if isinstance(t, n.Arg):
            value = complex(ev(t.arg))
            return 0.0 if value == 0 else math.atan2(value.imag, value.real)
        if isinstance(t, n.Abs):
            return abs(ev(t.arg))
        if isinstance(t, n.ComplexVar):
            return complex(vec[self.index[("re", t.index)]],
                           vec[self.index[("im", t.index)]])
        if isinstance(t, n.Amp):
            re_p, im_p = self.ctx.amp_pair(t.target, t.positives)
            return complex(self.poly(re_p, vec), self.poly(im_p, vec))
        if isinstance(t, n.Cart):
            return complex(ev(t.re), ev(t.im))
        if isinstance(t, n.Polar):
            return ev(t.mod) * complex(math.cos(ev(t.ang)), math.sin(ev(t.ang)))
        if isinstance(t, n.Conj):
            return complex(ev(t.arg)).conjugate()
        if isinstance(t, n.CSum):
            return ev(t.left) + ev(t.right)
        if isinstance(t, n.CProd):
            return ev(t.left) * ev(t.right)
        raise TypeError(f"unexpected term: {t!r}")

    def poly(self, poly, vec) -> float:
        total = 0.0
        for mono, coeff in poly.items():
            value = float(coeff)
            for key, exponent in mono:
                value *= self.atom(key, vec) ** exponent
            total += value
        return total


# ---------------------------------------------------------------------------
# exact linear refutation of a system

def _system_tier1_refute(system: ConstraintSystem, budget: int = 2000) -> str | None:
    """Exact infeasibility check of the system's linear-rational part,
    after propagating single-variable equalities into the rest.  Returns a
    reason string when refuted, None otherwise."""
    polys = [(dict(c.poly), c.kind, c.origin) for c in system.constraints]
    assignment: dict = {}
    for _ in range(4):
        changed = False
        for poly, kind, _ in polys:
            if kind != "eq":
                continue
            mono_keys = [m for m in poly if m != ()]
            if (len(mono_keys) == 1 and len(mono_keys[0]) == 1
                    and mono_keys[0][0][1] == 1
                    and isinstance(poly[mono_keys[0]], Fraction)
                    and isinstance(poly.get((), Fraction(0)), Fraction)):
                key = mono_keys[0][0][0]
                if key[0] == "op" or key in assignment:
                    continue
                value = -poly.get((), Fraction(0)) / poly[mono_keys[0]]
                assignment[key] = value
                changed = True
        if not changed:
            break
        polys = [(_subst_values(p, assignment), kind, origin)
                 for p, kind, origin in polys]
    constraints = []
    for poly, kind, origin in polys:
        if any(key[0] == "op" for mono in poly for key, _ in mono):
            continue
        if not all(isinstance(c, Fraction) for c in poly.values()):
            continue
        if set(poly) <= {()}:
            value = poly.get((), Fraction(0))
            bad = ((kind == "eq" and value != 0) or (kind == "le" and value > 0)
                   or (kind == "lt" and value >= 0))
            if bad:
                return f"constant contradiction in: {origin}"
            continue
        if any(len(mono) > 1 or mono[0][1] > 1 for mono in poly if mono != ()):
            continue  # nonlinear, leave to the numeric solver
        linear = {None: poly.get((), Fraction(0))}
        for mono, c in poly.items():
            if mono:
                linear[mono[0][0]] = c
        if kind == "eq":
            constraints.append((linear, False))
            constraints.append(({k: -v for k, v in linear.items()}, False))
        else:
            constraints.append((linear, kind == "lt"))
    if not constraints:
        return None
    try:
        witness = _fm_feasible(constraints, _Eliminations(budget))
    except _BranchCap:
        return None
    if witness is None:
        return "linear subsystem infeasible"
    return None


def _subst_values(poly, assignment) -> dict:
    out: dict = {}
    for mono, coeff in poly.items():
        new_coeff = coeff
        rest = []
        for key, exponent in mono:
            if key in assignment:
                new_coeff = new_coeff * assignment[key] ** exponent
            else:
                rest.append((key, exponent))
        new_mono = tuple(sorted(rest))
        total = out.get(new_mono, 0) + new_coeff
        if total == 0 and not isinstance(total, float):
            out.pop(new_mono, None)
        else:
            out[new_mono] = total
    return out


def _quick_refute(system: ConstraintSystem, margin: float = 1e-6) -> str | None:
    """Cheap float-level infeasibility screen: iteratively substitute
    variables pinned by full-rank linear equalities, then look for constant
    contradictions.  Used only to prune hopeless systems before descending;
    never the basis of an Inconsistent verdict."""
    polys = [(dict(c.poly), c.kind, c.origin) for c in system.constraints
             if not any(key[0] == "op" for mono in c.poly for key, _ in mono)]
    determined: dict = {}
    for _ in range(5):
        subst = [( _subst_values(p, determined), kind, origin)
                 for p, kind, origin in polys]
        rows, rhs, columns = [], [], []
        col_index: dict = {}
        for poly, kind, origin in subst:
            constant = float(poly.get((), 0.0))
            monos = [m for m in poly if m != ()]
            if not monos:
                if ((kind == "eq" and abs(constant) > margin)
                        or (kind in ("le", "lt") and constant > margin)):
                    return f"constant contradiction in: {origin}"
                continue
            if kind != "eq" or any(len(m) > 1 or m[0][1] > 1 for m in monos):
                continue
            row: dict[int, float] = {}
            for mono, coeff in poly.items():
                if mono == ():
                    continue
                key = mono[0][0]
                if key not in col_index:
                    col_index[key] = len(col_index)
                    columns.append(key)
                row[col_index[key]] = row.get(col_index[key], 0.0) + float(coeff)
            rows.append(row)
            rhs.append(-constant)
        if not rows:
            return None
        matrix = np.zeros((len(rows), len(columns)))
        for i, row in enumerate(rows):
            for j, value in row.items():
                matrix[i, j] = value
        solution, _, rank, _ = np.linalg.lstsq(matrix, np.array(rhs), rcond=None)
        residual = float(np.linalg.norm(matrix @ solution - np.array(rhs)))
        if residual > margin * max(1.0, float(np.linalg.norm(rhs))):
            return "linear equalities are inconsistent"
        if rank < len(columns):
            return None
        fresh = {key: float(solution[j]) for key, j in col_index.items()}
        if all(key in determined for key in fresh):
            return None
        determined.update(fresh)
    return None


# ---------------------------------------------------------------------------
# numeric solving

@dataclass
class SolveResult:
    status: str  # "solution" | "no_solution" | "inconsistent"
    values: dict = field(default_factory=dict)
    residual: float = float("inf")
    report: str = ""


LE_SLACK = EPS_CMP / 2
LT_SLACK = 2 * EPS_CMP

_KIND_OFFSET = {"eq": 0.0, "le": 0.0, "lt": 2 * LT_SLACK}
_KIND_THRESHOLD = {"le": LE_SLACK, "lt": -LT_SLACK}


class _Program:
    """Vectorized residuals and Jacobian for a constraint system.

    All polynomial monomials are stacked into one exponent matrix; opaque
    constraints (arg/abs of variable terms) fall back to direct evaluation
    with finite-difference rows."""

    def __init__(self, system: ConstraintSystem, tol: float):
        self.system = system
        self.tol = tol
        self.ev = _VecEval(system)
        self.dim = len(system.variables)
        self.kinds = [c.kind for c in system.constraints]
        rows, coeffs, exps = [], [], []
        self.opaque: list[tuple[int, Mapping]] = []
        for i, c in enumerate(system.constraints):
            if any(key[0] == "op" for mono in c.poly for key, _ in mono):
                self.opaque.append((i, c.poly))
                continue
            for mono, coeff in c.poly.items():
                rows.append(i)
                coeffs.append(float(coeff))
                exp = np.zeros(self.dim)
                for key, e in mono:
                    exp[self.ev.index[key]] = e
                exps.append(exp)
        self.rows = np.array(rows, dtype=int)
        self.coeffs = np.array(coeffs)
        self.exps = np.array(exps) if exps else np.zeros((0, self.dim))
        self.n = len(system.constraints)

    def raw(self, vec) -> np.ndarray:
        values = np.zeros(self.n)
        if len(self.coeffs):
            base = np.where(self.exps != 0, vec[None, :], 1.0) ** self.exps
            np.add.at(values, self.rows, self.coeffs * base.prod(axis=1))
        for i, poly in self.opaque:
            values[i] += self.ev.poly(poly, vec)
        return values

    def residuals(self, vec) -> np.ndarray:
        values = self.raw(vec)
        out = np.empty(self.n)
        for i, kind in enumerate(self.kinds):
            v = values[i] + _KIND_OFFSET[kind]
            out[i] = v if kind == "eq" else max(0.0, v)
        return out if self.n else np.zeros(1)

    def jacobian(self, vec) -> np.ndarray:
        jac = np.zeros((self.n, self.dim))
        if len(self.coeffs):
            for j in range(self.dim):
                ej = self.exps[:, j]
                mask = ej != 0
                if not mask.any():
                    continue
                adjusted = self.exps.copy()
                adjusted[:, j] = np.maximum(ej - 1, 0)
                prod = (np.where(adjusted != 0, vec[None, :], 1.0) ** adjusted).prod(axis=1)
                contrib = self.coeffs * ej * prod
                np.add.at(jac[:, j], self.rows[mask], contrib[mask])
        if self.opaque:
            step = 1e-7
            for i, poly in self.opaque:
                center = self.ev.poly(poly, vec)
                for j in range(self.dim):
                    shifted = vec.copy()
                    shifted[j] += step
                    jac[i, j] += (self.ev.poly(poly, shifted) - center) / step
        values = self.raw(vec)
        for i, kind in enumerate(self.kinds):
            if kind != "eq" and values[i] + _KIND_OFFSET[kind] <= 0.0:
                jac[i, :] = 0.0
        return jac if self.n else np.zeros((1, self.dim))

    def violation(self, vec) -> float:
        """Worst excess over each constraint's own threshold; <= 0 accepts."""
        values = self.raw(vec)
        worst = -math.inf
        for i, kind in enumerate(self.kinds):
            if kind == "eq":
                worst = max(worst, abs(values[i]) - self.tol)
            else:
                worst = max(worst, values[i] - _KIND_THRESHOLD[kind])
        return worst


def solve(system: ConstraintSystem, config: FindConfig = DEFAULT_CONFIG,
          restarts: int | None = None) -> SolveResult:
    """Multi-start penalty minimization with a least-squares polish.

    A returned solution has every equality residual below the configured
    tolerance and every strict inequality satisfied with slack; failure to
    find one is inconclusive unless the exact linear tier refutes the
    system."""
    reason = _system_tier1_refute(system)
    if reason is not None:
        return SolveResult("inconsistent", report=reason)
    pruned = _quick_refute(system)
    if pruned is not None:
        return SolveResult("no_solution", residual=float("inf"),
                           report=f"presolve: {pruned}")
    restarts = config.restarts if restarts is None else restarts
    program = _Program(system, config.tol)
    dim = program.dim
    try:
        from scipy.optimize import least_squares
    except ImportError:  # pragma: no cover
        least_squares = None
    rng = np.random.default_rng(config.seed)
    best = SolveResult("no_solution")
    for attempt in range(max(restarts, 1)):
        start = rng.normal(scale=0.75, size=dim)
        if dim == 0:
            vec = start
        elif least_squares is not None:
            try:
                vec = least_squares(program.residuals, start, jac=program.jacobian,
                                    method="trf", xtol=1e-15, ftol=1e-15,
                                    gtol=1e-15, max_nfev=260).x
            except Exception:
                continue
        else:  # pragma: no cover
            vec = start
        worst = program.violation(vec)
        if worst < best.residual:
            best = SolveResult("no_solution", residual=worst)
        if worst <= 0.0:
            values = {key: float(vec[i]) for i, key in enumerate(system.variables)}
            return SolveResult("solution", values, worst)
    best.report = f"best violation {best.residual:.3g} after {restarts} restarts"
    return best

# ---------------------------------------------------------------------------
# partition search

def partition_search(completed: CompletedForm,
                     config: FindConfig = DEFAULT_CONFIG) -> tuple[tuple, tuple]:
    """Greedy search for the finest partition of the bound compatible with
    the completed disjunct: candidate subsets in increasing size (then
    lexicographic) order refine the partition when the refined system stays
    satisfiable.  Returns (partition blocks, accepted union-closure)."""
    bound = completed.bound
    partition: list[frozenset] = [bound] if bound else []
    base = sorted(bound)

    def is_union(parts, target):
        return all(b <= target or not b & target for b in parts)

    candidates = sorted((frozenset(c) for size in range(1, len(base))
                         for c in itertools.combinations(base, size)),
                        key=lambda s: (len(s), tuple(sorted(s))))
    for cand in candidates:
        if is_union(partition, cand):
            continue
        refined: list[frozenset] = []
        for block in partition:
            for piece in (block & cand, block - cand):
                if piece:
                    refined.append(piece)
        system = emit_system(completed, refined)
        result = solve(system, config, restarts=config.probe_restarts)
        if result.status == "solution":
            partition = refined
    unions = tuple(sorted({frozenset().union(*combo) if combo else frozenset()
                           for r in range(len(partition) + 1)
                           for combo in itertools.combinations(partition, r)},
                          key=lambda s: (len(s), tuple(sorted(s)))))
    return tuple(sorted(partition, key=lambda b: tuple(sorted(b)))), unions


# ---------------------------------------------------------------------------
# model construction

@dataclass
class BuildFailure(Exception):
    reason: str
    factor_block: frozenset | None = None


def build_model(completed: CompletedForm, system: ConstraintSystem,
                values: Mapping, eps_norm: float = 1e-9) -> tuple[QuantumStructure, Assignment]:
    """Rebuild a structure and assignment from a solution of the system.

    Block states are read off the block amplitude variables (normalized
    explicitly: solver residuals sit well below the norm tolerance), free
    amplitude variables become stored defaults, and assignment variables
    are taken verbatim (unconstrained ones default to zero)."""
    bound_sorted = tuple(sorted(completed.bound))
    block_states = {}
    for block in system.partition:
        carrier = tuple(sorted(block))
        amps = {}
        for a in subsets_in_order(block):
            key = (carrier, tuple(sorted(a)))
            value = complex(values.get(("ar",) + key, 0.0),
                            values.get(("ai",) + key, 0.0))
            if value != 0:
                amps[Valuation(carrier, a)] = value
        norm = math.sqrt(sum(abs(v) ** 2 for v in amps.values()))
        if abs(norm - 1.0) > 1e-6:
            raise BuildFailure(f"block {sorted(block)} state has norm {norm:.6g}")
        block_states[block] = StateVector(
            carrier, {v: a / norm for v, a in amps.items()})
    admissible = frozenset(Valuation(bound_sorted, frozenset(a))
                           for a in completed.admitted)
    nu_defaults = {}
    reals: dict[int, float] = {}
    cplx: dict[int, complex] = {}
    for key in system.variables:
        if key[0] == "ar":
            target = frozenset(key[1])
            ctx_union = all(b <= target or not b & target for b in system.partition)
            if not ctx_union:
                nu_defaults[(target, frozenset(key[2]))] = complex(
                    values.get(key, 0.0), values.get(("ai",) + key[1:], 0.0))
        elif key[0] == "x":
            reals[key[1]] = values.get(key, 0.0)
        elif key[0] == "re":
            cplx[key[1]] = complex(values.get(key, 0.0),
                                   values.get(("im", key[1]), 0.0))
    w = QuantumStructure.build(bound_sorted, admissible, system.partition,
                               block_states, nu_defaults)
    rho = Assignment(reals, cplx)
    return w, rho


def _complete_assignment(rho: Assignment, gamma) -> Assignment:
    _, xs, zs = free_symbols(gamma)
    reals = dict(rho.reals)
    cplx = dict(rho.complexes)
    for k in xs:
        reals.setdefault(k, 0.0)
    for k in zs:
        cplx.setdefault(k, 0.0)
    return Assignment(reals, cplx)


# ---------------------------------------------------------------------------
# the driver

@dataclass
class FindResult:
    kind: str  # "model" | "no_model" | "inconsistent"
    structure: QuantumStructure | None = None
    assignment: Assignment | None = None
    report: list = field(default_factory=list)

    @property
    def is_model(self) -> bool:
        return self.kind == "model"


def find_model(gamma, bound: Sequence[int],
               config: FindConfig = DEFAULT_CONFIG) -> FindResult:
    """Search for a bound-factorizable structure and assignment satisfying
    gamma; every returned model has been re-checked with the satisfaction
    semantics."""
    bound = frozenset(bound)
    qs, _, _ = free_symbols(gamma)
    if not qs <= bound:
        raise OutOfFrame(f"formula over {sorted(qs)} exceeds bound {sorted(bound)}")
    core = expand(gamma)
    report: list[str] = []
    all_exact = True
    found_branch = False
    for outer in _branch_dnf(core, True, config.branch_budget):
        found_branch = True
        viable, exact = _outer_viable(outer, bound, report)
        if not viable:
            all_exact = all_exact and exact
            continue
        mol = MolecularFormula(tuple(outer), tuple(a for a, p in outer.items() if p))
        reduced = eliminate_nonentanglement(mol, bound)
        if reduced is None:
            report.append("disjunct denies factorizability of the bound")
            continue
        reduced_core = expand(reduced)
        try:
            inner_branches = _branch_dnf(reduced_core, True, config.branch_budget)
        except AtomBudgetExceeded:
            report.append("disjunct too large after non-entanglement elimination")
            all_exact = False
            continue
        forced = tuple(a.target for a, p in outer.items()
                       if isinstance(a, n.NonEtg) and p)
        for branch in inner_branches:
            refutations: list[Refutation] = []
            produced = False
            for completed in henkin_completions(branch, bound, refutations,
                                                forced):
                produced = True
                outcome, exact = _attempt(gamma, completed, config, report)
                if outcome is not None:
                    return outcome
                all_exact = all_exact and exact
            if not produced:
                for r in refutations:
                    report.append(r.reason)
                    all_exact = all_exact and r.exact
    if not found_branch:
        report.append("no propositionally consistent disjunct")
    kind = "inconsistent" if all_exact else "no_model"
    return FindResult(kind, report=report)


def _outer_viable(outer: Mapping, bound: frozenset, report: list) -> tuple[bool, bool]:
    """Screen an outer disjunct before expanding its non-entanglement
    literals: if every completion of its classical/inequation part is
    already refuted, the refined disjuncts (which only add constraints)
    are refuted too.  Returns (viable, refutation-is-exact)."""
    plain = {a: p for a, p in outer.items() if not isinstance(a, n.NonEtg)}
    if not plain:
        return True, True
    forced = tuple(a.target for a, p in outer.items()
                   if isinstance(a, n.NonEtg) and p)
    refutations: list[Refutation] = []
    exact = True
    trivial = (bound,) if bound else ()
    for completed in henkin_completions(plain, bound, refutations, forced):
        system = emit_system(completed, trivial)
        reason = _system_tier1_refute(system)
        if reason is not None:
            continue
        pruned = _quick_refute(system)
        if pruned is not None:
            exact = False
            continue
        return True, True
    for r in refutations:
        exact = exact and r.exact
    report.append("disjunct refuted before non-entanglement elimination")
    return False, exact


def _attempt(gamma, completed: CompletedForm, config: FindConfig,
             report: list) -> tuple[FindResult | None, bool]:
    """One completed disjunct: partition search, solve, rebuild, re-check.
    The second component records whether a failure was an exact refutation
    (a linear-tier contradiction of the unrefined necessary system)."""
    trivial = (completed.bound,) if completed.bound else ()
    base_system = emit_system(completed, trivial)
    reason = _system_tier1_refute(base_system)
    if reason is not None:
        report.append(f"refuted: {reason}")
        return None, True
    pruned = _quick_refute(base_system)
    if pruned is not None:
        report.append(f"presolve: {pruned}")
        return None, False
    partition, _ = partition_search(completed, config)
    for _ in range(config.refine_rounds):
        system = emit_system(completed, partition)
        result = solve(system, config)
        if result.status == "inconsistent":
            report.append(f"refuted: {result.report}")
            # only the trivial partition's system is implied by every model
            # of the disjunct, so only its refutation is exact
            return None, partition == (completed.bound,)
        if result.status != "solution":
            report.append(result.report)
            return None, False
        try:
            w, rho = build_model(completed, system, result.values)
        except BuildFailure as err:
            report.append(err.reason)
            return None, False
        diagnostics = validate_structure(w)
        split = _factorizable_block(diagnostics, w)
        if split is not None:
            partition = tuple(b for b in partition if b != split[0]) + split[1:]
            continue
        if diagnostics:
            report.append("; ".join(str(d) for d in diagnostics))
            return None, False
        rho = _complete_assignment(rho, gamma)
        if satisfies(w, rho, gamma):
            return FindResult("model", w, rho), True
        report.append("solution failed the satisfaction re-check")
        return None, False
    report.append("partition refinement did not converge")
    return None, False


def _factorizable_block(diagnostics, w: QuantumStructure):
    for diag in diagnostics:
        if diag.code != "NonFactorizableBlockViolation":
            continue
        for block in w.partition:
            state = w.block_states[frozenset(block)]
            if len(block) < 2:
                continue
            for part in subsets_in_order(frozenset(block)):
                if not part or part == frozenset(block):
                    continue
                if schmidt_factor(state, part).factorizable:
                    return (frozenset(block), part, frozenset(block) - part)
    return None
