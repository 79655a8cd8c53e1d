"""Hilbert-style calculus: axiom schema recognition, tautology checking,
and verification of derivation scripts.

Schema matching is exact: no implicit associativity, commutativity or
re-bracketing.  Iterated sums in the unit-norm and probability axioms run
over subsets in the canonical order and associate to the left, so the
derivation author writes the same instance the builders produce.

Script format (one derivation per file)::

    # comment
    qubits cati, cata, catm          -- optional alias preamble
    bound F = qb0, qb1
    1. <quantum formula> ; <JUST>
    ...

with JUST one of CTAUT, QTAUT, ORACLE, LIFT, REFCONJ, IFTOP, IFBOT,
NETG_F, NETG_BAR(G1; G2), NETG_UNION(G1; G2), NETG_DIFF(G1; G2), EMPTY,
NADM(A), UNIT(G), PROB(alpha), CMP(i,j), QMP(i,j), PREMISE.
"""

from __future__ import annotations

import itertools
import re as _re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .arithmetic import OracleVerdict, is_arithmetical, oracle_check
from .errors import EqplSyntaxError
from .syntax import expand, free_symbols, parse, prob_sum, render, unit_sum
from .syntax import nodes as n

MAX_TAUT_ATOMS = 20


# ---------------------------------------------------------------------------
# tautology checking

def quantum_atoms(core) -> list:
    """Maximal quantum atoms of a core formula, in first-occurrence order."""
    atoms: list = []

    def walk(g):
        if isinstance(g, (n.ClassicalFormula, n.Leq, n.NonEtg)):
            if g not in atoms:
                atoms.append(g)
        elif isinstance(g, n.QNeg):
            walk(g.arg)
        elif isinstance(g, n.QImp):
            walk(g.left)
            walk(g.right)
        else:
            raise TypeError(f"not a core quantum formula: {g!r}")

    walk(core)
    return atoms


def eval_skeleton(core, atom_values: Mapping) -> bool:
    """Truth of the connective skeleton under an atom assignment."""
    if isinstance(core, (n.ClassicalFormula, n.Leq, n.NonEtg)):
        return atom_values[core]
    if isinstance(core, n.QNeg):
        return not eval_skeleton(core.arg, atom_values)
    if isinstance(core, n.QImp):
        return (not eval_skeleton(core.left, atom_values)
                or eval_skeleton(core.right, atom_values))
    raise TypeError(f"not a core quantum formula: {core!r}")


def _classical_eval(core, trues: frozenset) -> bool:
    if isinstance(core, n.Qubit):
        return core.index in trues
    if isinstance(core, n.CNeg):
        return not _classical_eval(core.arg, trues)
    if isinstance(core, n.CImp):
        return (not _classical_eval(core.left, trues)
                or _classical_eval(core.right, trues))
    raise TypeError(f"not a core classical formula: {core!r}")


def is_tautology(phi, mode: str = "quantum") -> bool:
    """Truth-table validity; classical mode enumerates qubit valuations,
    quantum mode abstracts each maximal quantum atom to a letter."""
    core = expand(phi)
    if mode == "classical":
        if not isinstance(core, n.ClassicalFormula):
            return False
        qs, _, _ = free_symbols(core)
        qs = sorted(qs)
        if len(qs) > MAX_TAUT_ATOMS:
            raise ValueError(f"too many qubits for truth-table check: {len(qs)}")
        return all(_classical_eval(core, frozenset(itertools.compress(qs, bits)))
                   for bits in itertools.product((0, 1), repeat=len(qs)))
    if mode == "quantum":
        atoms = quantum_atoms(core)
        if len(atoms) > MAX_TAUT_ATOMS:
            raise ValueError(f"too many atoms for truth-table check: {len(atoms)}")
        return all(eval_skeleton(core, dict(zip(atoms, bits)))
                   for bits in itertools.product((False, True), repeat=len(atoms)))
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# oracle-instance abstraction

def abstract_to_arithmetical(phi):
    """Replace every maximal probability/amplitude/alternative subterm by a
    fresh variable (same term, same variable), undoing the substitution the
    oracle schema performs.  Returns None when the result still is not an
    arithmetical formula (e.g. classical or non-entanglement atoms remain).
    """
    _, xs, zs = free_symbols(phi)
    next_x = max(xs, default=0) + 1
    next_z = max(zs, default=0) + 1
    real_map: dict = {}
    cplx_map: dict = {}

    def term(t):
        nonlocal next_x, next_z
        if isinstance(t, n.Prob):
            if t not in real_map:
                real_map[t] = n.RealVar(next_x)
                next_x += 1
            return real_map[t]
        if isinstance(t, (n.Amp, n.AmpOf, n.Ite)):
            if t not in cplx_map:
                cplx_map[t] = n.ComplexVar(next_z)
                next_z += 1
            return cplx_map[t]
        if isinstance(t, (n.RealVar, n.Const, n.ComplexVar)):
            return t
        if isinstance(t, (n.RSum, n.RProd, n.CSum, n.CProd)):
            return type(t)(term(t.left), term(t.right))
        if isinstance(t, (n.Re, n.Im, n.Arg, n.Abs, n.Conj)):
            return type(t)(term(t.arg))
        if isinstance(t, n.Cart):
            return n.Cart(term(t.re), term(t.im))
        if isinstance(t, n.Polar):
            return n.Polar(term(t.mod), term(t.ang))
        return None

    def formula(g):
        if isinstance(g, (n.Leq, n.Lt, n.EqR)):
            left, right = term(g.left), term(g.right)
            return None if left is None or right is None else type(g)(left, right)
        if isinstance(g, n.EqC):
            left, right = term(g.left), term(g.right)
            return None if left is None or right is None else n.EqC(left, right)
        if isinstance(g, n.QNeg):
            arg = formula(g.arg)
            return None if arg is None else n.QNeg(arg)
        if isinstance(g, (n.QImp, n.QDisj, n.QConj, n.QEquiv)):
            left, right = formula(g.left), formula(g.right)
            return None if left is None or right is None else type(g)(left, right)
        return None

    out = formula(phi)
    if out is None or not is_arithmetical(out):
        return None
    return out


# ---------------------------------------------------------------------------
# axiom schemas

SCHEMAS = ("CTAUT", "QTAUT", "ORACLE", "LIFT", "REFCONJ", "IFTOP", "IFBOT",
           "NETG_F", "NETG_BAR", "NETG_UNION", "NETG_DIFF", "EMPTY", "NADM",
           "UNIT", "PROB")

#: presentation names, keyed by schema token
SCHEMA_NAMES = {
    "CTAUT": "CTaut", "QTAUT": "QTaut", "ORACLE": "Oracle",
    "LIFT": "Lift->", "REFCONJ": "Ref&&", "IFTOP": "IfTop", "IFBOT": "IfBot",
    "NETG_F": "NEtgF", "NETG_BAR": "NEtg|", "NETG_UNION": "NEtgU",
    "NETG_DIFF": "NEtgD", "EMPTY": "Empty", "NADM": "NAdm", "UNIT": "Unit",
    "PROB": "Prob",
}

_CZERO = n.Cart(n.Const(n.rat(0)), n.Const(n.rat(0)))
_CONE = n.Cart(n.Const(n.rat(1)), n.Const(n.rat(0)))


def netg_bar_instance(g1: frozenset, g2: frozenset) -> n.QuantumFormula:
    return n.QImp(n.NonEtg(g2), n.QEquiv(n.NonEtg(g1), n.CondNonEtg(g1, g2)))


def netg_union_instance(g1: frozenset, g2: frozenset) -> n.QuantumFormula:
    return n.QImp(n.NonEtg(g1), n.QImp(n.NonEtg(g2), n.NonEtg(g1 | g2)))


def netg_diff_instance(g1: frozenset, g2: frozenset) -> n.QuantumFormula:
    return n.QImp(n.NonEtg(g1), n.QImp(n.NonEtg(g2), n.NonEtg(g1 - g2)))


def empty_instance() -> n.QuantumFormula:
    return n.EqC(n.Amp(frozenset(), frozenset()), _CONE)


def nadm_instance(bound: frozenset, positives: frozenset) -> n.QuantumFormula:
    return n.QImp(n.CNeg(n.BigConj(bound, positives)),
                  n.EqC(n.Amp(bound, positives), _CZERO))


def unit_instance(target: frozenset) -> n.QuantumFormula:
    return n.QImp(n.NonEtg(target), n.EqR(unit_sum(target), n.Const(n.rat(1))))


def prob_instance(alpha: n.ClassicalFormula, bound: frozenset) -> n.QuantumFormula:
    return n.EqR(n.Prob(alpha), prob_sum(alpha, bound))


def match_axiom(schema: str, phi, bound: frozenset,
                params: Sequence | None = None,
                oracle: Callable[..., OracleVerdict] | None = None,
                budget=None) -> tuple[bool, str]:
    """Whether phi is an instance of the schema over the bound.

    For parameterized schemas the parameters are taken from `params` when
    given, otherwise inferred from the shape of phi.  Returns (ok, diag).
    """
    schema = schema.upper()
    if schema == "CTAUT":
        if not isinstance(phi, n.ClassicalFormula):
            return False, "CTaut needs a classical formula"
        return ((True, "") if is_tautology(phi, "classical")
                else (False, "not a classical tautology"))
    if schema == "QTAUT":
        return ((True, "") if is_tautology(phi, "quantum")
                else (False, "not a quantum tautology"))
    if schema == "ORACLE":
        generalized = abstract_to_arithmetical(phi)
        if generalized is None:
            return False, ("not a substitution instance of an arithmetical"
                           " formula (classical or non-entanglement parts remain)")
        check = oracle or oracle_check
        verdict = check(generalized) if budget is None else check(generalized, budget)
        if verdict.kind == "valid":
            return True, ""
        if verdict.kind == "invalid":
            return False, ("the generalized arithmetical formula is invalid"
                           f" (witness {verdict.witness})")
        return False, f"OracleUnknown: {verdict.reason}"
    if schema == "LIFT":
        if (isinstance(phi, n.QImp) and isinstance(phi.left, n.CImp)
                and isinstance(phi.right, n.QImp)
                and phi.right.left == phi.left.left
                and phi.right.right == phi.left.right
                and isinstance(phi.left.left, n.ClassicalFormula)
                and isinstance(phi.left.right, n.ClassicalFormula)):
            return True, ""
        return False, "not of the form ((a1 -> a2) ==> (a1 ==> a2))"
    if schema == "REFCONJ":
        if (isinstance(phi, n.QImp) and isinstance(phi.left, n.QConj)
                and isinstance(phi.right, n.CConj)
                and phi.left.left == phi.right.left
                and phi.left.right == phi.right.right
                and isinstance(phi.right.left, n.ClassicalFormula)
                and isinstance(phi.right.right, n.ClassicalFormula)):
            return True, ""
        return False, "not of the form ((a1 && a2) ==> (a1 /\\ a2))"
    if schema == "IFTOP":
        if (isinstance(phi, n.QImp) and isinstance(phi.left, n.ClassicalFormula)
                and isinstance(phi.right, n.EqC)
                and isinstance(phi.right.left, n.Ite)
                and phi.right.left.guard == phi.left
                and phi.right.right == phi.right.left.then):
            return True, ""
        return False, "not of the form (a ==> (ite(a; u1; u2) = u1))"
    if schema == "IFBOT":
        if (isinstance(phi, n.QImp) and isinstance(phi.left, n.QNeg)
                and isinstance(phi.left.arg, n.ClassicalFormula)
                and isinstance(phi.right, n.EqC)
                and isinstance(phi.right.left, n.Ite)
                and phi.right.left.guard == phi.left.arg
                and phi.right.right == phi.right.left.other):
            return True, ""
        return False, "not of the form (!a ==> (ite(a; u1; u2) = u2))"
    if schema == "NETG_F":
        if phi == n.NonEtg(bound):
            return True, ""
        return False, f"NEtgF over this bound is {render(n.NonEtg(bound))}"
    if schema in ("NETG_BAR", "NETG_UNION", "NETG_DIFF"):
        return _match_netg(schema, phi, params)
    if schema == "EMPTY":
        return ((True, "") if phi == empty_instance()
                else (False, f"the Empty axiom is {render(empty_instance())}"))
    if schema == "NADM":
        positives = params[0] if params else _infer_nadm(phi)
        if positives is None:
            return False, "cannot infer the valuation subset from the formula"
        if not positives <= bound:
            return False, "NAdm needs A within the bound"
        expected = nadm_instance(bound, positives)
        return ((True, "") if phi == expected
                else (False, f"expected {render(expected)}"))
    if schema == "UNIT":
        target = params[0] if params else _infer_unit(phi)
        if target is None:
            return False, "cannot infer the qubit set from the formula"
        expected = unit_instance(target)
        return ((True, "") if phi == expected
                else (False, f"expected {render(expected)}"))
    if schema == "PROB":
        alpha = params[0] if params else _infer_prob(phi)
        if alpha is None:
            return False, "cannot infer the classical formula"
        aq, _, _ = free_symbols(alpha)
        if not aq <= bound:
            return False, "Prob needs QB(alpha) within the bound"
        expected = prob_instance(alpha, bound)
        return ((True, "") if phi == expected
                else (False, f"expected {render(expected)}"))
    return False, f"unknown schema {schema!r}"


def _match_netg(schema, phi, params):
    shapes = {"NETG_BAR": netg_bar_instance, "NETG_UNION": netg_union_instance,
              "NETG_DIFF": netg_diff_instance}
    build = shapes[schema]
    if params:
        g1, g2 = params
    else:
        g1 = g2 = None
        if isinstance(phi, n.QImp) and isinstance(phi.left, n.NonEtg):
            if schema == "NETG_BAR" and isinstance(phi.right, n.QEquiv) \
                    and isinstance(phi.right.left, n.NonEtg):
                g1, g2 = phi.right.left.target, phi.left.target
            elif schema != "NETG_BAR" and isinstance(phi.right, n.QImp) \
                    and isinstance(phi.right.left, n.NonEtg):
                g1, g2 = phi.left.target, phi.right.left.target
        if g1 is None:
            return False, "cannot infer the qubit sets from the formula"
    if schema == "NETG_BAR" and not g1 <= g2:
        return False, "NEtg| needs G1 within G2"
    expected = build(g1, g2)
    return ((True, "") if phi == expected
            else (False, f"expected {render(expected)}"))


def _infer_nadm(phi):
    if (isinstance(phi, n.QImp) and isinstance(phi.left, n.CNeg)
            and isinstance(phi.left.arg, n.BigConj)):
        return phi.left.arg.positives
    return None


def _infer_unit(phi):
    if isinstance(phi, n.QImp) and isinstance(phi.left, n.NonEtg):
        return phi.left.target
    return None


def _infer_prob(phi):
    if isinstance(phi, n.EqR) and isinstance(phi.left, n.Prob):
        return phi.left.arg
    return None


# ---------------------------------------------------------------------------
# derivations

@dataclass(frozen=True)
class AxiomInstance:
    schema: str
    params: tuple = ()

    def __str__(self):
        if not self.params:
            return self.schema
        inner = "; ".join(_param_str(p) for p in self.params)
        return f"{self.schema}({inner})"


@dataclass(frozen=True)
class ModusPonens:
    classical: bool
    minor: int  # line deriving the antecedent
    major: int  # line deriving the implication

    def __str__(self):
        return f"{'CMP' if self.classical else 'QMP'}({self.minor},{self.major})"


@dataclass(frozen=True)
class Premise:
    def __str__(self):
        return "PREMISE"


def _param_str(p) -> str:
    if isinstance(p, frozenset):
        return ",".join(f"qb{k}" for k in sorted(p)) if p else ""
    return render(p)


@dataclass(frozen=True)
class DerivationLine:
    index: int
    formula: n.QuantumFormula
    justification: AxiomInstance | ModusPonens | Premise


@dataclass(frozen=True)
class Derivation:
    bound: frozenset
    premises: tuple
    lines: tuple

    @property
    def conclusion(self):
        return self.lines[-1].formula if self.lines else None


@dataclass
class LineReport:
    index: int
    ok: bool
    reason: str = ""


@dataclass
class CheckReport:
    ok: bool
    lines: list[LineReport] = field(default_factory=list)

    @property
    def first_failure(self) -> LineReport | None:
        return next((l for l in self.lines if not l.ok), None)

    def __str__(self):
        if self.ok:
            return "ok"
        bad = self.first_failure
        return f"fail at line {bad.index}: {bad.reason}"


def check_derivation(d: Derivation, oracle=None, budget=None) -> CheckReport:
    """Verify every line of a derivation; the report carries per-line
    diagnostics and overall success."""
    report = CheckReport(ok=True)
    formulas: dict[int, n.QuantumFormula] = {}
    for position, line in enumerate(d.lines, start=1):
        reason = ""
        if line.index != position:
            reason = f"line numbered {line.index}, expected {position}"
        if not reason:
            qs, _, _ = free_symbols(line.formula)
            if not qs <= d.bound:
                reason = (f"formula mentions {sorted(qs - d.bound)} outside the"
                          f" bound {sorted(d.bound)}")
        if not reason:
            reason = _check_line(line, formulas, d, oracle, budget)
        ok = not reason
        report.lines.append(LineReport(line.index, ok, reason))
        report.ok = report.ok and ok
        formulas[line.index] = line.formula
    if not d.lines:
        report.ok = False
        report.lines.append(LineReport(0, False, "empty derivation"))
    return report


def _check_line(line, formulas, d, oracle, budget) -> str:
    just = line.justification
    if isinstance(just, Premise):
        if line.formula in d.premises:
            return ""
        return "formula is not among the declared premises"
    if isinstance(just, ModusPonens):
        for cited in (just.minor, just.major):
            if cited not in formulas or cited >= line.index:
                return f"citation of line {cited} is not an earlier line"
        minor, major = formulas[just.minor], formulas[just.major]
        if just.classical:
            if not all(isinstance(g, n.ClassicalFormula)
                       for g in (minor, major, line.formula)):
                return "CMP applies to classical formulae only"
            if major != n.CImp(minor, line.formula):
                return (f"MismatchedAntecedent: line {just.major} is not"
                        f" ({render(minor)} -> {render(line.formula)})")
            return ""
        if major != n.QImp(minor, line.formula):
            return (f"MismatchedAntecedent: line {just.major} is not"
                    f" ({render(minor)} ==> {render(line.formula)})")
        return ""
    ok, diag = match_axiom(just.schema, line.formula, d.bound,
                           just.params or None, oracle, budget)
    return "" if ok else f"{SCHEMA_NAMES.get(just.schema, just.schema)}: {diag}"


# ---------------------------------------------------------------------------
# script parsing

_LINE = _re.compile(r"^(\d+)\.\s*(.*\S)\s*;\s*([A-Za-z_]+)\s*(\((.*)\))?\s*$")
_BOUND = _re.compile(r"^bound(\s+\w+)?\s*=\s*(.*)$")


def parse_script(text: str) -> Derivation:
    """Parse a derivation script into a Derivation."""
    aliases: dict[str, int] = {}
    bound: frozenset | None = None
    premises: list = []
    lines: list[DerivationLine] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("qubits"):
            from .syntax.parser import parse_formula_file

            aliases, _ = parse_formula_file(stripped)
            continue
        m = _BOUND.match(stripped)
        if m:
            if bound is not None:
                raise EqplSyntaxError("duplicate bound declaration", lineno, 1)
            names = [s.strip() for s in m.group(2).split(",") if s.strip()]
            bound = frozenset(_resolve_qubit(name, aliases, lineno) for name in names)
            continue
        m = _LINE.match(stripped)
        if not m:
            raise EqplSyntaxError("expected 'N. formula ; JUSTIFICATION'", lineno, 1)
        if bound is None:
            raise EqplSyntaxError("derivation lines before the bound declaration",
                                  lineno, 1)
        index = int(m.group(1))
        formula = parse(m.group(2), "quantum", aliases)
        just = _parse_just(m.group(3), m.group(5), aliases, lineno)
        if isinstance(just, Premise):
            premises.append(formula)
        lines.append(DerivationLine(index, formula, just))
    if bound is None:
        raise EqplSyntaxError("missing bound declaration")
    return Derivation(bound, tuple(premises), tuple(lines))


def _resolve_qubit(name: str, aliases: Mapping[str, int], lineno: int) -> int:
    m = _re.match(r"qb(\d+)$", name)
    if m:
        return int(m.group(1))
    if name in aliases:
        return aliases[name]
    raise EqplSyntaxError(f"unknown qubit name {name!r}", lineno, 1)


def _parse_just(keyword: str, argtext: str | None, aliases, lineno):
    keyword = keyword.upper()
    if keyword == "PREMISE":
        return Premise()
    if keyword in ("CMP", "QMP"):
        if not argtext:
            raise EqplSyntaxError(f"{keyword} needs two line numbers", lineno, 1)
        try:
            minor, major = (int(s.strip()) for s in argtext.split(","))
        except ValueError:
            raise EqplSyntaxError(f"{keyword} needs two line numbers", lineno, 1)
        return ModusPonens(keyword == "CMP", minor, major)
    if keyword not in SCHEMAS:
        raise EqplSyntaxError(f"unknown justification {keyword!r}", lineno, 1)
    params: tuple = ()
    if keyword in ("NETG_BAR", "NETG_UNION", "NETG_DIFF"):
        if argtext is None:
            raise EqplSyntaxError(f"{keyword} needs two qubit sets", lineno, 1)
        parts = argtext.split(";")
        if len(parts) != 2:
            raise EqplSyntaxError(f"{keyword} needs two qubit sets", lineno, 1)
        params = tuple(_parse_set(p, aliases, lineno) for p in parts)
    elif keyword in ("NADM", "UNIT"):
        if argtext is None:
            raise EqplSyntaxError(f"{keyword} needs a qubit set", lineno, 1)
        params = (_parse_set(argtext, aliases, lineno),)
    elif keyword == "PROB":
        if argtext is None:
            raise EqplSyntaxError("PROB needs a classical formula", lineno, 1)
        params = (parse(argtext.strip(), "classical", aliases),)
    elif argtext is not None:
        raise EqplSyntaxError(f"{keyword} takes no parameters", lineno, 1)
    return AxiomInstance(keyword, params)


def _parse_set(text: str, aliases, lineno) -> frozenset:
    names = [s.strip() for s in text.split(",") if s.strip()]
    return frozenset(_resolve_qubit(name, aliases, lineno) for name in names)
