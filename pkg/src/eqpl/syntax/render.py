"""Deterministic ASCII rendering of ASTs.

``parse(render(a), category) == a`` for every AST the parser can produce.
Constant subtrees built by hand with non-decimal rationals (e.g. a raw
``CRat(1/3)``) render as ``n/d`` and re-parse as a quotient node; the parser
itself never produces such trees.
"""

from __future__ import annotations

from typing import Mapping

from . import nodes as n


def qubit_name(index: int, names: Mapping[int, str] | None = None) -> str:
    if names and index in names:
        return names[index]
    return f"qb{index}"


def _set(s: frozenset, names) -> str:
    return ",".join(qubit_name(k, names) for k in sorted(s))


def render_const(c: n.ConstExpr) -> str:
    if isinstance(c, n.CRat):
        f = c.num
        if f.denominator == 1:
            return str(f.numerator)
        den, e2, e5 = f.denominator, 0, 0
        while den % 2 == 0:
            den //= 2
            e2 += 1
        while den % 5 == 0:
            den //= 5
            e5 += 1
        if den != 1:
            return f"{f.numerator}/{f.denominator}"
        k = max(e2, e5)
        scaled = abs(f.numerator) * 10**k // f.denominator
        text = str(scaled).rjust(k + 1, "0")
        sign = "-" if f < 0 else ""
        return f"{sign}{text[:-k]}.{text[-k:]}"
    if isinstance(c, n.CPi):
        return "pi"
    if isinstance(c, n.CEuler):
        return "e"
    if isinstance(c, n.CSqrt):
        return f"sqrt({render_const(c.arg)})"
    if isinstance(c, n.CDiv):
        return f"{render_const(c.num)}/{render_const(c.den)}"
    if isinstance(c, n.CNegC):
        return f"-{render_const(c.arg)}"
    raise TypeError(f"not a constant expression: {c!r}")


def render(ast: n.Node, names: Mapping[int, str] | None = None) -> str:
    r = lambda a: render(a, names)
    # classical
    if isinstance(ast, n.Qubit):
        return qubit_name(ast.index, names)
    if isinstance(ast, n.CNeg):
        return f"~{r(ast.arg)}"
    if isinstance(ast, n.CImp):
        return f"({r(ast.left)} -> {r(ast.right)})"
    if isinstance(ast, n.CConj):
        return f"({r(ast.left)} /\\ {r(ast.right)})"
    if isinstance(ast, n.CDisj):
        return f"({r(ast.left)} \\/ {r(ast.right)})"
    if isinstance(ast, n.CEquiv):
        return f"({r(ast.left)} <-> {r(ast.right)})"
    if isinstance(ast, n.Top):
        return "top"
    if isinstance(ast, n.Bot):
        return "bot"
    if isinstance(ast, n.BigConj):
        return f"val{{{_set(ast.frame, names)}}}{{{_set(ast.positives, names)}}}"
    # real terms
    if isinstance(ast, n.RealVar):
        return f"x{ast.index}"
    if isinstance(ast, n.Const):
        return render_const(ast.expr)
    if isinstance(ast, n.Prob):
        return f"Pr({r(ast.arg)})"
    if isinstance(ast, n.RSum):
        return f"({r(ast.left)} + {r(ast.right)})"
    if isinstance(ast, n.RProd):
        return f"({r(ast.left)} * {r(ast.right)})"
    if isinstance(ast, n.Re):
        return f"re({r(ast.arg)})"
    if isinstance(ast, n.Im):
        return f"im({r(ast.arg)})"
    if isinstance(ast, n.Arg):
        return f"arg({r(ast.arg)})"
    if isinstance(ast, n.Abs):
        return f"abs({r(ast.arg)})"
    # complex terms
    if isinstance(ast, n.ComplexVar):
        return f"z{ast.index}"
    if isinstance(ast, n.Amp):
        return f"amp{{{_set(ast.target, names)}}}{{{_set(ast.positives, names)}}}"
    if isinstance(ast, n.AmpOf):
        return (f"amp{{{_set(ast.target, names)}}}{{{_set(ast.positives, names)}}}"
                f"[{r(ast.arg)}]")
    if isinstance(ast, n.Cart):
        return f"({r(ast.re)} + i {r(ast.im)})"
    if isinstance(ast, n.Polar):
        return f"{r(ast.mod)} e^{{i {r(ast.ang)}}}"
    if isinstance(ast, n.Conj):
        return f"conj({r(ast.arg)})"
    if isinstance(ast, n.CSum):
        return f"({r(ast.left)} + {r(ast.right)})"
    if isinstance(ast, n.CProd):
        return f"({r(ast.left)} * {r(ast.right)})"
    if isinstance(ast, n.Ite):
        return f"ite({r(ast.guard)}; {r(ast.then)}; {r(ast.other)})"
    # quantum
    if isinstance(ast, n.Leq):
        return f"({r(ast.left)} <= {r(ast.right)})"
    if isinstance(ast, n.NonEtg):
        return f"[{_set(ast.target, names)}]"
    if isinstance(ast, n.QNeg):
        return f"!{r(ast.arg)}"
    if isinstance(ast, n.QImp):
        return f"({r(ast.left)} ==> {r(ast.right)})"
    if isinstance(ast, n.QDisj):
        return f"({r(ast.left)} || {r(ast.right)})"
    if isinstance(ast, n.QConj):
        return f"({r(ast.left)} && {r(ast.right)})"
    if isinstance(ast, n.QEquiv):
        return f"({r(ast.left)} <=> {r(ast.right)})"
    if isinstance(ast, n.Lt):
        return f"({r(ast.left)} < {r(ast.right)})"
    if isinstance(ast, (n.EqR, n.EqC)):
        return f"({r(ast.left)} = {r(ast.right)})"
    if isinstance(ast, n.CondNonEtg):
        return f"[{_set(ast.inner, names)} // {_set(ast.outer, names)}]"
    if isinstance(ast, n.EntangledPair):
        return (f"({qubit_name(ast.first, names)} ~{{{_set(ast.scope, names)}}} "
                f"{qubit_name(ast.second, names)})")
    if isinstance(ast, n.Poss):
        body = ", ".join(f"{r(a)} : {r(u)}" for a, u in ast.pairs)
        return f"poss{{{_set(ast.target, names)}}}({body})"
    if isinstance(ast, n.Dia):
        return f"dia({r(ast.arg)})"
    if isinstance(ast, n.Box):
        return f"box({r(ast.arg)})"
    if isinstance(ast, n.BigQConj):
        atoms = " ; ".join(r(a) for a in ast.atoms)
        picks = ",".join(str(ast.atoms.index(c) + 1) for c in ast.chosen)
        return f"qval{{{atoms}}}{{{picks}}}"
    raise TypeError(f"not an AST node: {ast!r}")
