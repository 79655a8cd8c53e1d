"""AST node types for the four syntactic categories.

Nodes are immutable frozen dataclasses; structural equality and hashing are
derived from the fields.  The parser annotates nodes with a source position
through a *dynamic* attribute ``span`` (a ``(line, column)`` pair) which does
not participate in equality, so ``parse(render(a)) == a`` holds.

Qubit symbols are plain natural numbers; display names ("cati", ...) are an
alias-table concern of the parser and renderer, never of the AST.

Core constructors (survive expansion):
    classical  -- Qubit, CNeg, CImp
    real term  -- RealVar, Const, Prob, RSum, RProd, Re, Im, Arg, Abs
    complex    -- ComplexVar, Amp, Cart, Polar, Conj, CSum, CProd, Ite
    quantum    -- classical formulae, Leq, NonEtg, QNeg, QImp

Everything else is an abbreviation that ``expand`` rewrites away.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Tuple, Union


# ---------------------------------------------------------------------------
# qubit sets

QubitSet = frozenset  # frozenset[int]


def qubits(*indices: int) -> frozenset[int]:
    return frozenset(indices)


def sorted_qubits(s: frozenset[int]) -> tuple[int, ...]:
    return tuple(sorted(s))


def subsets_in_order(s: frozenset[int]) -> Iterator[frozenset[int]]:
    """All subsets of `s` in the canonical order used by every iterated
    construct (Unit/Prob sums, conditional factorizability, vectors).

    The qubits of `s` are sorted ascending; subsets are enumerated by binary
    counting over that order, i.e. {}, {s0}, {s1}, {s0,s1}, {s2}, ...
    """
    base = sorted_qubits(s)
    for mask in range(1 << len(base)):
        yield frozenset(base[j] for j in range(len(base)) if mask >> j & 1)


# ---------------------------------------------------------------------------
# computable real constants

class ConstExpr:
    """Closed constant expression: decimal rationals, pi, e, sqrt, quotient."""

    __slots__ = ()

    def value(self) -> float:
        raise NotImplementedError

    def exact(self) -> Fraction | None:
        """Exact rational value, or None when irrational (pi, e, sqrt)."""
        raise NotImplementedError


@dataclass(frozen=True)
class CRat(ConstExpr):
    num: Fraction  # always from a decimal literal, so denominator is 10^k

    def value(self) -> float:
        return float(self.num)

    def exact(self) -> Fraction | None:
        return self.num


@dataclass(frozen=True)
class CPi(ConstExpr):
    def value(self) -> float:
        import math

        return math.pi

    def exact(self) -> Fraction | None:
        return None


@dataclass(frozen=True)
class CEuler(ConstExpr):
    def value(self) -> float:
        import math

        return math.e

    def exact(self) -> Fraction | None:
        return None


@dataclass(frozen=True)
class CSqrt(ConstExpr):
    arg: ConstExpr

    def value(self) -> float:
        import math

        return math.sqrt(self.arg.value())

    def exact(self) -> Fraction | None:
        a = self.arg.exact()
        if a is None or a < 0:
            return None
        # exact only for perfect squares of both numerator and denominator
        import math

        rn = math.isqrt(a.numerator)
        rd = math.isqrt(a.denominator)
        if rn * rn == a.numerator and rd * rd == a.denominator:
            return Fraction(rn, rd)
        return None


@dataclass(frozen=True)
class CDiv(ConstExpr):
    num: ConstExpr
    den: ConstExpr

    def value(self) -> float:
        return self.num.value() / self.den.value()

    def exact(self) -> Fraction | None:
        n, d = self.num.exact(), self.den.exact()
        if n is None or d is None or d == 0:
            return None
        return n / d


@dataclass(frozen=True)
class CNegC(ConstExpr):
    arg: ConstExpr

    def value(self) -> float:
        return -self.arg.value()

    def exact(self) -> Fraction | None:
        a = self.arg.exact()
        return None if a is None else -a


def rat(n: int | Fraction, d: int = 1) -> CRat:
    return CRat(Fraction(n, d))


# ---------------------------------------------------------------------------
# category marker bases

class Node:
    __slots__ = ()


class ClassicalFormula(Node):
    __slots__ = ()


class RealTerm(Node):
    __slots__ = ()


class ComplexTerm(Node):
    __slots__ = ()


class QuantumPred(Node):
    """Quantum-formula constructors that are not classical formulae."""

    __slots__ = ()


#: a quantum formula is a classical formula used globally, or a quantum
#: predicate/connective node
QuantumFormula = Union[ClassicalFormula, QuantumPred]

#: quantum atoms: classical formulae, real comparisons, non-entanglement
QuantumAtom = Union[ClassicalFormula, "Leq", "NonEtg"]

Term = Union[RealTerm, ComplexTerm]


# --------------------------------------------------------------------------
# classical formulae

@dataclass(frozen=True)
class Qubit(ClassicalFormula):
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("qubit index must be a natural number")


@dataclass(frozen=True)
class CNeg(ClassicalFormula):
    arg: ClassicalFormula


@dataclass(frozen=True)
class CImp(ClassicalFormula):
    left: ClassicalFormula
    right: ClassicalFormula


@dataclass(frozen=True)
class CConj(ClassicalFormula):
    left: ClassicalFormula
    right: ClassicalFormula


@dataclass(frozen=True)
class CDisj(ClassicalFormula):
    left: ClassicalFormula
    right: ClassicalFormula


@dataclass(frozen=True)
class CEquiv(ClassicalFormula):
    left: ClassicalFormula
    right: ClassicalFormula


@dataclass(frozen=True)
class Top(ClassicalFormula):
    pass


@dataclass(frozen=True)
class Bot(ClassicalFormula):
    pass


@dataclass(frozen=True)
class BigConj(ClassicalFormula):
    """The molecular formula selecting the one valuation over `frame` that
    makes exactly the qubits in `positives` true."""

    frame: frozenset[int]
    positives: frozenset[int]


# ---------------------------------------------------------------------------
# real terms

@dataclass(frozen=True)
class RealVar(RealTerm):
    index: int


@dataclass(frozen=True)
class Const(RealTerm):
    expr: ConstExpr


@dataclass(frozen=True)
class Prob(RealTerm):
    arg: ClassicalFormula


@dataclass(frozen=True)
class RSum(RealTerm):
    left: RealTerm
    right: RealTerm


@dataclass(frozen=True)
class RProd(RealTerm):
    left: RealTerm
    right: RealTerm


@dataclass(frozen=True)
class Re(RealTerm):
    arg: ComplexTerm


@dataclass(frozen=True)
class Im(RealTerm):
    arg: ComplexTerm


@dataclass(frozen=True)
class Arg(RealTerm):
    arg: ComplexTerm


@dataclass(frozen=True)
class Abs(RealTerm):
    arg: ComplexTerm


# ---------------------------------------------------------------------------
# complex terms

@dataclass(frozen=True)
class ComplexVar(ComplexTerm):
    index: int


@dataclass(frozen=True)
class Amp(ComplexTerm):
    """Logical amplitude of the valuation over `target` that makes exactly
    the qubits in `positives` true."""

    target: frozenset[int]
    positives: frozenset[int]


@dataclass(frozen=True)
class AmpOf(ComplexTerm):
    """Amplitude of the `target`/`positives` valuation if it satisfies the
    classical formula, zero otherwise (abbreviation)."""

    arg: ClassicalFormula
    target: frozenset[int]
    positives: frozenset[int]


@dataclass(frozen=True)
class Cart(ComplexTerm):
    re: RealTerm
    im: RealTerm


@dataclass(frozen=True)
class Polar(ComplexTerm):
    mod: RealTerm
    ang: RealTerm


@dataclass(frozen=True)
class Conj(ComplexTerm):
    arg: ComplexTerm


@dataclass(frozen=True)
class CSum(ComplexTerm):
    left: ComplexTerm
    right: ComplexTerm


@dataclass(frozen=True)
class CProd(ComplexTerm):
    left: ComplexTerm
    right: ComplexTerm


@dataclass(frozen=True)
class Ite(ComplexTerm):
    guard: ClassicalFormula
    then: ComplexTerm
    other: ComplexTerm


# ---------------------------------------------------------------------------
# quantum formulae (beyond classical ones)

@dataclass(frozen=True)
class Leq(QuantumPred):
    left: RealTerm
    right: RealTerm


@dataclass(frozen=True)
class NonEtg(QuantumPred):
    """The qubits in `target` are not entangled with the rest."""

    target: frozenset[int]


@dataclass(frozen=True)
class QNeg(QuantumPred):
    arg: QuantumFormula


@dataclass(frozen=True)
class QImp(QuantumPred):
    left: QuantumFormula
    right: QuantumFormula


@dataclass(frozen=True)
class QDisj(QuantumPred):
    left: QuantumFormula
    right: QuantumFormula


@dataclass(frozen=True)
class QConj(QuantumPred):
    left: QuantumFormula
    right: QuantumFormula


@dataclass(frozen=True)
class QEquiv(QuantumPred):
    left: QuantumFormula
    right: QuantumFormula


@dataclass(frozen=True)
class Lt(QuantumPred):
    left: RealTerm
    right: RealTerm


@dataclass(frozen=True)
class EqR(QuantumPred):
    left: RealTerm
    right: RealTerm


@dataclass(frozen=True)
class EqC(QuantumPred):
    left: ComplexTerm
    right: ComplexTerm


@dataclass(frozen=True)
class CondNonEtg(QuantumPred):
    """`inner` is unentangled provided `outer` is ([G|F])."""

    inner: frozenset[int]
    outer: frozenset[int]


@dataclass(frozen=True)
class EntangledPair(QuantumPred):
    """Within `scope`, qubit `first` is entangled with qubit `second`."""

    first: int
    second: int
    scope: frozenset[int]


@dataclass(frozen=True)
class Poss(QuantumPred):
    """`target` unentangled, and for each (alpha, u) pair some valuation of
    `target` satisfies alpha and has the non-null amplitude u."""

    target: frozenset[int]
    pairs: Tuple[Tuple[ClassicalFormula, ComplexTerm], ...]


@dataclass(frozen=True)
class Dia(QuantumPred):
    arg: ClassicalFormula


@dataclass(frozen=True)
class Box(QuantumPred):
    arg: ClassicalFormula


@dataclass(frozen=True)
class BigQConj(QuantumPred):
    """Quantum molecular formula: conjunction of the atoms in `chosen` and
    the quantum negations of the remaining atoms of `atoms`."""

    atoms: Tuple[QuantumAtom, ...]
    chosen: Tuple[QuantumAtom, ...]


# ---------------------------------------------------------------------------
# convenience

CZERO = Cart(Const(rat(0)), Const(rat(0)))
CONE = Cart(Const(rat(1)), Const(rat(0)))
IMAG = Cart(Const(rat(0)), Const(rat(1)))

CLASSICAL_CORE = (Qubit, CNeg, CImp)
REAL_CORE = (RealVar, Const, Prob, RSum, RProd, Re, Im, Arg, Abs)
COMPLEX_CORE = (ComplexVar, Amp, Cart, Polar, Conj, CSum, CProd, Ite)
QUANTUM_CORE = CLASSICAL_CORE + (Leq, NonEtg, QNeg, QImp)


def is_classical(node: Node) -> bool:
    return isinstance(node, ClassicalFormula)


def is_quantum(node: Node) -> bool:
    return isinstance(node, (ClassicalFormula, QuantumPred))


def is_term(node: Node) -> bool:
    return isinstance(node, (RealTerm, ComplexTerm))


def annotate(node: Node, line: int, column: int) -> Node:
    """Attach a source span without affecting equality or hashing."""
    try:
        object.__setattr__(node, "span", (line, column))
    except AttributeError:
        pass
    return node


def span_of(node: Node) -> tuple[int, int] | None:
    return getattr(node, "span", None)
