"""Lexer and recursive-descent parser for the concrete ASCII grammar.

All binary operators are fully parenthesized, so no precedence handling is
needed: after `(` we parse an operand, look at the operator token, parse the
second operand and close.  Kinds are inferred bottom-up; a real term is
injected into a complex position as `(t + i 0)`.

Amplitude-vector expressions are a parse-time-only kind; they are expanded
into their components before the parser returns, so no vector node exists
in any AST.
"""

from __future__ import annotations

import re as _re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from ..errors import CategoryError, EqplSyntaxError, ProvisoViolation
from . import nodes as n
from .expand import free_symbols, vector_components, vector_eq, vector_subseteq

_TOKEN_RE = _re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==>|<=>|<->|->|/\\|\\/|&&|\|\||<=|//|[()\[\]{},;:+*/^=<>~!-])
    """,
    _re.VERBOSE,
)

#: words that can never be qubit alias names
RESERVED = {
    "Pr", "re", "im", "arg", "abs", "conj", "ite", "amp", "vec", "val",
    "qval", "poss", "dia", "box", "sqrt", "top", "bot", "pi", "e", "i",
    "qubits",
}

_QB = _re.compile(r"qb(\d+)$")
_XVAR = _re.compile(r"x(\d+)$")
_ZVAR = _re.compile(r"z(\d+)$")

# parse-result kinds
C, R, X, Q, V = "classical", "real", "complex", "quantum", "vector"


@dataclass
class Token:
    kind: str  # number | ident | op | eof
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise EqplSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        lexeme = m.group()
        if kind != "ws":
            tokens.append(Token(kind, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


@dataclass
class _Vec:
    """Parse-time amplitude vector value: one complex term per subset of
    the target, in canonical order."""

    target: frozenset
    components: tuple


class Parser:
    def __init__(self, text: str, aliases: Mapping[str, int] | None = None):
        self.tokens = tokenize(text)
        self.pos = 0
        self.aliases = dict(aliases or {})

    # -- token plumbing -------------------------------------------------
    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise EqplSyntaxError(f"expected {text!r}, found {tok.text or 'end of input'!r}",
                                  tok.line, tok.column)
        return tok

    def fail(self, message: str) -> EqplSyntaxError:
        tok = self.peek()
        return EqplSyntaxError(message + f" (at {tok.text or 'end of input'!r})",
                               tok.line, tok.column)

    def at_end(self) -> bool:
        return self.peek().kind == "eof"

    # -- kind coercions -------------------------------------------------
    def as_complex(self, kind, node):
        if kind == X:
            return node
        if kind == R:
            return n.Cart(node, n.Const(n.rat(0)))
        raise self.fail(f"expected a complex or real term, found a {kind} expression")

    def as_quantum(self, kind, node):
        if kind in (Q, C):
            return node
        raise self.fail(f"expected a formula, found a {kind} expression")

    # -- expressions ----------------------------------------------------
    def parse_expr(self):
        tok = self.peek()
        if tok.text == "(":
            kind, node = self.parse_paren()
        elif tok.text == "~":
            self.next()
            kind, arg = self.parse_expr()
            if kind != C:
                raise self.fail("classical negation applies to classical formulae")
            kind, node = C, n.CNeg(arg)
        elif tok.text == "!":
            self.next()
            kind, arg = self.parse_expr()
            kind, node = Q, n.QNeg(self.as_quantum(kind, arg))
        elif tok.text == "[":
            kind, node = self.parse_brackets()
        elif tok.text == "-" or tok.kind == "number":
            kind, node = R, n.Const(self.parse_const())
        elif tok.kind == "ident":
            kind, node = self.parse_ident()
        else:
            raise self.fail("expected a formula or term")
        kind, node = self.parse_postfix(kind, node)
        if isinstance(node, n.Node):
            n.annotate(node, tok.line, tok.column)
        return kind, node

    def parse_postfix(self, kind, node):
        # polar form: <real term> e^{i <real term>}
        if (kind == R and self.peek().text == "e"
                and self.peek(1).text == "^"):
            self.next()
            self.expect("^")
            self.expect("{")
            self.expect("i")
            akind, ang = self.parse_expr()
            if akind != R:
                raise self.fail("polar angle must be a real term")
            self.expect("}")
            return X, n.Polar(node, ang)
        return kind, node

    def parse_paren(self):
        tok = self.expect("(")
        k1, e1 = self.parse_expr()
        op = self.peek()
        if op.text == ")":
            self.next()
            return self.parse_postfix(k1, e1)  # plain grouping
        self.next()
        if op.text == "->":
            k2, e2 = self.parse_expr()
            if k1 != C or k2 != C:
                raise self.fail("'->' connects classical formulae")
            out = (C, n.CImp(e1, e2))
        elif op.text in ("/\\", "\\/", "<->"):
            k2, e2 = self.parse_expr()
            if k1 != C or k2 != C:
                raise self.fail(f"{op.text!r} connects classical formulae")
            ctor = {"/\\": n.CConj, "\\/": n.CDisj, "<->": n.CEquiv}[op.text]
            out = (C, ctor(e1, e2))
        elif op.text in ("==>", "&&", "||", "<=>"):
            k2, e2 = self.parse_expr()
            ctor = {"==>": n.QImp, "&&": n.QConj, "||": n.QDisj, "<=>": n.QEquiv}[op.text]
            out = (Q, ctor(self.as_quantum(k1, e1), self.as_quantum(k2, e2)))
        elif op.text == "<=":
            k2, e2 = self.parse_expr()
            if k1 == V and k2 == V:
                out = (Q, vector_subseteq(list(e1.components), list(e2.components)))
            elif k1 == R and k2 == R:
                out = (Q, n.Leq(e1, e2))
            else:
                raise self.fail("'<=' compares real terms or amplitude vectors")
        elif op.text == "<":
            k2, e2 = self.parse_expr()
            if k1 != R or k2 != R:
                raise self.fail("'<' compares real terms")
            out = (Q, n.Lt(e1, e2))
        elif op.text == "=":
            k2, e2 = self.parse_expr()
            if k1 == V or k2 == V:
                if k1 != V or k2 != V:
                    raise self.fail("'=' on vectors needs vectors on both sides")
                out = (Q, vector_eq(list(e1.components), list(e2.components)))
            elif k1 == R and k2 == R:
                out = (Q, n.EqR(e1, e2))
            else:
                out = (Q, n.EqC(self.as_complex(k1, e1), self.as_complex(k2, e2)))
        elif op.text == "+":
            out = self.parse_sum(k1, e1)
        elif op.text == "*":
            k2, e2 = self.parse_expr()
            if k1 == R and k2 == R:
                out = (R, n.RProd(e1, e2))
            elif k2 == V:
                scalar = self.as_complex(k1, e1)
                out = (V, _Vec(e2.target,
                               tuple(n.CProd(scalar, c) for c in e2.components)))
            elif k1 == V:
                raise self.fail("scalar multiple puts the scalar on the left")
            else:
                out = (X, n.CProd(self.as_complex(k1, e1), self.as_complex(k2, e2)))
        elif op.text == "~":
            out = self.parse_entangled(k1, e1)
        else:
            raise EqplSyntaxError(f"unexpected operator {op.text!r}", op.line, op.column)
        self.expect(")")
        _, node = out
        n.annotate(node, tok.line, tok.column)
        return self.parse_postfix(*out)

    def parse_sum(self, k1, e1):
        # cartesian form: (t1 + i t2) -- the `i` must not itself end the sum
        if self.peek().text == "i" and self.peek(1).text != ")":
            self.next()
            k2, e2 = self.parse_expr()
            if k1 != R or k2 != R:
                raise self.fail("cartesian form needs real terms on both sides of i")
            return X, n.Cart(e1, e2)
        k2, e2 = self.parse_expr()
        if k1 == R and k2 == R:
            return R, n.RSum(e1, e2)
        if k1 == V and k2 == V:
            if e1.target != e2.target:
                raise self.fail("vector sum over mismatched targets")
            return V, _Vec(e1.target,
                           tuple(n.CSum(a, b) for a, b in zip(e1.components, e2.components)))
        if V in (k1, k2):
            raise self.fail("vector sum needs vectors on both sides")
        return X, n.CSum(self.as_complex(k1, e1), self.as_complex(k2, e2))

    def parse_entangled(self, k1, e1):
        if k1 != C or not isinstance(e1, n.Qubit):
            raise self.fail("entanglement assertion needs a qubit on the left")
        self.expect("{")
        scope = self.parse_qubit_list("}")
        k2, e2 = self.parse_expr()
        if k2 != C or not isinstance(e2, n.Qubit):
            raise self.fail("entanglement assertion needs a qubit on the right")
        return Q, n.EntangledPair(e1.index, e2.index, scope)

    def parse_brackets(self):
        self.expect("[")
        first = self.parse_qubit_list("]", "//")
        if self.peek().text == "//":
            self.next()
            outer = self.parse_qubit_list("]")
            self.expect("]")
            return Q, n.CondNonEtg(first, outer)
        self.expect("]")
        return Q, n.NonEtg(first)

    def parse_qubit_list(self, *closers) -> frozenset:
        seen = []
        while self.peek().text not in closers:
            tok = self.next()
            if tok.kind != "ident":
                raise EqplSyntaxError("expected a qubit name", tok.line, tok.column)
            idx = self.qubit_index(tok)
            if idx in seen:
                raise EqplSyntaxError(f"duplicate qubit {tok.text!r}", tok.line, tok.column)
            seen.append(idx)
            if self.peek().text == ",":
                self.next()
            elif self.peek().text not in closers:
                raise self.fail("expected ',' or end of qubit list")
        if closers[0] == "}":
            self.expect("}")
        return frozenset(seen)

    def qubit_index(self, tok: Token) -> int:
        m = _QB.match(tok.text)
        if m:
            return int(m.group(1))
        if tok.text in self.aliases:
            return self.aliases[tok.text]
        if tok.text in RESERVED or _XVAR.match(tok.text) or _ZVAR.match(tok.text):
            raise EqplSyntaxError(f"{tok.text!r} cannot name a qubit", tok.line, tok.column)
        raise EqplSyntaxError(f"unknown qubit name {tok.text!r}", tok.line, tok.column)

    # -- constants ------------------------------------------------------
    def parse_const(self) -> n.ConstExpr:
        if self.peek().text == "-":
            self.next()
            return n.CNegC(self.parse_const())
        expr = self.parse_const_atom()
        while self.peek().text == "/":
            self.next()
            expr = n.CDiv(expr, self.parse_const_atom())
        return expr

    def parse_const_atom(self) -> n.ConstExpr:
        tok = self.next()
        if tok.kind == "number":
            if "." in tok.text:
                whole, frac = tok.text.split(".")
                return n.CRat(Fraction(int(whole + frac), 10 ** len(frac)))
            return n.CRat(Fraction(int(tok.text)))
        if tok.text == "pi":
            return n.CPi()
        if tok.text == "e":
            return n.CEuler()
        if tok.text == "sqrt":
            self.expect("(")
            inner = self.parse_const()
            self.expect(")")
            return n.CSqrt(inner)
        raise EqplSyntaxError(f"expected a constant, found {tok.text!r}",
                              tok.line, tok.column)

    # -- identifiers ----------------------------------------------------
    def parse_ident(self):
        tok = self.next()
        text = tok.text
        if text == "top":
            return C, n.Top()
        if text == "bot":
            return C, n.Bot()
        m = _XVAR.match(text)
        if m:
            return R, n.RealVar(int(m.group(1)))
        m = _ZVAR.match(text)
        if m and text not in self.aliases:
            return X, n.ComplexVar(int(m.group(1)))
        if text in ("pi", "sqrt"):
            self.pos -= 1
            return R, n.Const(self.parse_const())
        if text == "e":
            # Euler's constant; polar form is handled as a postfix
            return R, n.Const(n.CEuler())
        if text == "i":
            return X, n.IMAG
        if text == "Pr":
            self.expect("(")
            alpha = self.parse_classical()
            self.expect(")")
            return R, n.Prob(alpha)
        if text in ("re", "im", "arg", "abs"):
            ctor = {"re": n.Re, "im": n.Im, "arg": n.Arg, "abs": n.Abs}[text]
            self.expect("(")
            k, u = self.parse_expr()
            self.expect(")")
            return R, ctor(self.as_complex(k, u))
        if text == "conj":
            self.expect("(")
            k, u = self.parse_expr()
            self.expect(")")
            return X, n.Conj(self.as_complex(k, u))
        if text == "ite":
            self.expect("(")
            guard = self.parse_classical()
            self.expect(";")
            k1, u1 = self.parse_expr()
            self.expect(";")
            k2, u2 = self.parse_expr()
            self.expect(")")
            return X, n.Ite(guard, self.as_complex(k1, u1), self.as_complex(k2, u2))
        if text == "amp":
            target = self.parse_braced_set()
            positives = self.parse_braced_set()
            if not positives <= target:
                raise EqplSyntaxError("amplitude term needs A within F",
                                      tok.line, tok.column)
            if self.peek().text == "[":
                self.next()
                alpha = self.parse_classical()
                self.expect("]")
                return X, n.AmpOf(alpha, target, positives)
            return X, n.Amp(target, positives)
        if text == "vec":
            target = self.parse_braced_set()
            self.expect("[")
            alpha = self.parse_classical()
            self.expect("]")
            return V, _Vec(target, tuple(vector_components(alpha, target)))
        if text == "val":
            frame = self.parse_braced_set()
            positives = self.parse_braced_set()
            if not positives <= frame:
                raise EqplSyntaxError("molecular formula needs A within F",
                                      tok.line, tok.column)
            return C, n.BigConj(frame, positives)
        if text == "qval":
            return Q, self.parse_qval()
        if text == "poss":
            target = self.parse_braced_set()
            self.expect("(")
            pairs = []
            while True:
                alpha = self.parse_classical()
                self.expect(":")
                k, u = self.parse_expr()
                pairs.append((alpha, self.as_complex(k, u)))
                if self.peek().text == ",":
                    self.next()
                    continue
                break
            self.expect(")")
            return Q, n.Poss(target, tuple(pairs))
        if text in ("dia", "box"):
            ctor = n.Dia if text == "dia" else n.Box
            self.expect("(")
            alpha = self.parse_classical()
            self.expect(")")
            return Q, ctor(alpha)
        m = _QB.match(text)
        if m:
            return C, n.Qubit(int(m.group(1)))
        if text in self.aliases:
            return C, n.Qubit(self.aliases[text])
        raise EqplSyntaxError(f"unknown symbol {text!r}", tok.line, tok.column)

    def parse_braced_set(self) -> frozenset:
        self.expect("{")
        return self.parse_qubit_list("}")

    def parse_classical(self) -> n.ClassicalFormula:
        k, node = self.parse_expr()
        if k != C:
            raise self.fail("expected a classical formula")
        return node

    def parse_qval(self) -> n.BigQConj:
        self.expect("{")
        atoms = []
        while True:
            k, g = self.parse_expr()
            g = self.as_quantum(k, g)
            if not isinstance(g, (n.ClassicalFormula, n.Leq, n.NonEtg)):
                raise self.fail("qval atoms must be quantum atoms")
            atoms.append(g)
            if self.peek().text == ";":
                self.next()
                continue
            break
        self.expect("}")
        self.expect("{")
        picks = []
        while self.peek().text != "}":
            tok = self.next()
            if tok.kind != "number" or not tok.text.isdigit():
                raise EqplSyntaxError("expected an atom index", tok.line, tok.column)
            idx = int(tok.text)
            if not 1 <= idx <= len(atoms):
                raise EqplSyntaxError(f"atom index {idx} out of range", tok.line, tok.column)
            picks.append(atoms[idx - 1])
            if self.peek().text == ",":
                self.next()
        self.expect("}")
        return n.BigQConj(tuple(atoms), tuple(picks))


def parse(text: str, category: str, aliases: Mapping[str, int] | None = None) -> n.Node:
    """Parse `text` in the requested category.

    Raises EqplSyntaxError on malformed input and CategoryError when the
    text is well-formed but belongs to a different category.  A real term
    parses in the complex category via the `(t + i 0)` injection.
    """
    if category not in (C, R, X, Q):
        raise ValueError(f"unknown category {category!r}")
    p = Parser(text, aliases)
    kind, node = p.parse_expr()
    tok = p.peek()
    if not p.at_end():
        raise EqplSyntaxError(f"trailing input {tok.text!r}", tok.line, tok.column)
    if kind == V:
        raise CategoryError("amplitude vectors are not a stand-alone category; "
                            "compare them with '=' or '<='")
    if category == kind:
        return node
    if category == Q and kind == C:
        return node
    if category == X and kind == R:
        return n.Cart(node, n.Const(n.rat(0)))
    raise CategoryError(f"text parses as a {kind} expression, not {category}")


_PREAMBLE = _re.compile(r"^\s*qubits\s+(.*)$")


def parse_formula_file(text: str) -> tuple[dict[str, int], list[str]]:
    """Split a formula file into an alias table and formula lines.

    The optional first non-comment line `qubits name0, name1, ...` assigns
    indices 0.. to the listed names (a name of the form qb<k> pins index k).
    Comment lines start with '#'.  Every remaining non-blank line is one
    formula.
    """
    aliases: dict[str, int] = {}
    lines = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _PREAMBLE.match(line)
        if m and not lines and not aliases:
            names = [s.strip() for s in m.group(1).split(",") if s.strip()]
            taken = {int(_QB.match(s).group(1)) for s in names if _QB.match(s)}
            nxt = 0
            for name in names:
                qm = _QB.match(name)
                if qm:
                    aliases[name] = int(qm.group(1))
                    continue
                if name in RESERVED or _XVAR.match(name) or _ZVAR.match(name):
                    raise EqplSyntaxError(f"{name!r} cannot name a qubit")
                while nxt in taken:
                    nxt += 1
                aliases[name] = nxt
                taken.add(nxt)
            continue
        lines.append(line)
    return aliases, lines
