"""Parser, renderer, expansion, and symbol extraction."""

import random

import pytest

from eqpl.errors import CategoryError, EqplSyntaxError, ProvisoViolation
from eqpl.semantics import classical_sat
from eqpl.structures import all_valuations
from eqpl.syntax import expand, free_symbols, parse, parse_formula_file, render
from eqpl.syntax import nodes as n
from eqpl.syntax.expand import cond_nonetg_equations
from eqpl.syntax.nodes import subsets_in_order


def rt(text, category):
    ast = parse(text, category)
    again = parse(render(ast), category)
    assert again == ast
    return ast


def test_parse_identity_implication():
    assert rt("(qb1 -> qb1)", "classical") == n.CImp(n.Qubit(1), n.Qubit(1))


def test_parse_cat_probability_assertion():
    aliases = {"cati": 0, "cata": 1, "catm": 2}
    ast = parse("(Pr(cata) = 1/3)", "quantum", aliases)
    assert isinstance(ast, n.EqR)
    assert ast.left == n.Prob(n.Qubit(1))


def test_parse_cat_nonentanglement():
    aliases = {"cati": 0, "cata": 1, "catm": 2}
    ast = parse("[cati,cata,catm]", "quantum", aliases)
    assert ast == n.NonEtg(frozenset({0, 1, 2}))


def test_category_errors():
    with pytest.raises(CategoryError):
        parse("(x1 <= 1)", "classical")
    with pytest.raises(CategoryError):
        parse("(qb0 -> qb1)", "real")
    with pytest.raises(CategoryError):
        parse("top", "real")
    # classical formulas are quantum formulas
    assert isinstance(parse("(qb0 -> qb1)", "quantum"), n.CImp)
    # real terms inject into the complex category
    assert parse("1", "complex") == n.Cart(n.Const(n.rat(1)), n.Const(n.rat(0)))


def test_syntax_errors_carry_position():
    with pytest.raises(EqplSyntaxError) as err:
        parse("(qb0 ->", "classical")
    assert err.value.line == 1
    with pytest.raises(EqplSyntaxError):
        parse("amp{qb0}{qb1}", "complex")  # A not within F
    with pytest.raises(EqplSyntaxError):
        parse("[qb0,qb0]", "quantum")  # duplicate entries in a set


def test_position_annotation():
    ast = parse("(qb0 -> qb1)", "classical")
    assert n.span_of(ast) == (1, 1)


def test_expand_quantum_disjunction_definition():
    g = parse("((x1 <= 0) || (x2 <= 0))", "quantum")
    left = expand(parse("(x1 <= 0)", "quantum"))
    right = expand(parse("(x2 <= 0)", "quantum"))
    assert expand(g) == n.QImp(n.QNeg(left), right)


def test_expand_complex_equality_to_leq_pairs():
    g = expand(parse("(z1 = z2)", "quantum"))

    def conj(a, b):
        return n.QNeg(n.QImp(n.QNeg(n.QNeg(a)), n.QNeg(b)))

    def eq(a, b):
        return conj(n.Leq(a, b), n.Leq(b, a))

    expected = conj(eq(n.Re(n.ComplexVar(1)), n.Re(n.ComplexVar(2))),
                    eq(n.Im(n.ComplexVar(1)), n.Im(n.ComplexVar(2))))
    assert g == expected


def test_expand_conditional_nonentanglement_by_hand():
    # [{} // {qb0}]: for every A'' of {qb0}, amp{qb0}{A''} = amp{}{} * amp{qb0}{A''}
    eqs = cond_nonetg_equations(frozenset(), frozenset({0}))
    empty = n.Amp(frozenset(), frozenset())
    assert eqs == [
        n.EqC(n.Amp(frozenset({0}), frozenset()),
              n.CProd(empty, n.Amp(frozenset({0}), frozenset()))),
        n.EqC(n.Amp(frozenset({0}), frozenset({0})),
              n.CProd(empty, n.Amp(frozenset({0}), frozenset({0})))),
    ]
    parsed = parse("[ // qb0]", "quantum")
    assert expand(parsed) == expand(n.QConj(eqs[0], eqs[1]))


def test_expansion_idempotent_on_everything():
    texts = [
        ("(qb0 <-> ~qb1)", "classical"),
        ("val{qb0,qb1,qb2}{qb1}", "classical"),
        ("(Pr((qb0 \\/ qb1)) + abs(amp{qb0}{}[~qb0]))", "real"),
        ("ite((qb0 /\\ qb1); conj(z1); 2 e^{i x1})", "complex"),
        ("(poss{qb0,qb1}(qb0 : z1) && [qb0 // qb0,qb1])", "quantum"),
        ("((qb0 ~{qb0,qb1,qb2} qb2) <=> dia(qb1))", "quantum"),
        ("(box((qb0 -> qb1)) ==> (Pr(qb1) < 1))", "quantum"),
    ]
    for text, cat in texts:
        once = expand(parse(text, cat))
        assert expand(once) == once


def test_free_symbols_examples():
    qs, xs, zs = free_symbols(parse("(qb0 -> ~qb2)", "classical"))
    assert qs == {0, 2} and not xs and not zs
    qs, xs, zs = free_symbols(parse("Pr((qb1 /\\ qb3))", "real"))
    assert qs == {1, 3} and not xs and not zs
    qs, xs, zs = free_symbols(parse("ite(qb0; z1; (x2 + i 0))", "complex"))
    assert qs == {0} and xs == {2} and zs == {1}


def test_free_symbols_match_expansion():
    texts = [
        ("(qb0 ~{qb0,qb1,qb2} qb2)", "quantum"),
        ("[qb1 // qb1,qb2]", "quantum"),
        ("poss{qb0,qb1}((qb0 \\/ qb1) : z2)", "quantum"),
        ("val{qb0,qb1}{}", "classical"),
        ("top", "classical"),
        ("amp{qb0,qb1}{qb0}[qb1]", "complex"),
        ("box(qb3)", "quantum"),
    ]
    for text, cat in texts:
        ast = parse(text, cat)
        assert free_symbols(ast) == free_symbols(expand(ast)), text


def test_molecular_selects_unique_valuation():
    for size in range(1, 5):
        frame = frozenset(range(size))
        for positives in subsets_in_order(frame):
            alpha = n.BigConj(frame, positives)
            matching = [v for v in all_valuations(frame) if classical_sat(v, alpha)]
            assert len(matching) == 1
            assert matching[0].trues == positives


def test_proviso_violations():
    with pytest.raises(ProvisoViolation):
        expand(n.BigConj(frozenset({0}), frozenset({1})))
    with pytest.raises(ProvisoViolation):
        expand(n.AmpOf(n.Qubit(3), frozenset({0, 1}), frozenset({0})))
    with pytest.raises(ProvisoViolation):
        expand(n.CondNonEtg(frozenset({5}), frozenset({0, 1})))
    with pytest.raises(ProvisoViolation):
        expand(n.EntangledPair(0, 0, frozenset({0, 1})))


def test_formula_file_preamble():
    aliases, lines = parse_formula_file(
        "# comment\nqubits alpha, beta\n(alpha -> beta)\n[alpha]\n")
    assert aliases == {"alpha": 0, "beta": 1}
    assert lines == ["(alpha -> beta)", "[alpha]"]


def test_render_examples():
    assert render(n.CImp(n.Qubit(1), n.Qubit(1))) == "(qb1 -> qb1)"
    assert render(n.NonEtg(frozenset({0}))) == "[qb0]"
    assert render(n.Polar(n.Const(n.rat(1)),
                          n.Const(n.CDiv(n.CPi(), n.CRat(n.rat(3).num))))) \
        == "1 e^{i pi/3}"


# ---------------------------------------------------------------------------
# randomized round-trip across all categories

def random_const(rng):
    pick = rng.random()
    if pick < 0.5:
        return n.CRat(n.rat(rng.randint(0, 30)).num)
    if pick < 0.6:
        from fractions import Fraction

        return n.CRat(Fraction(rng.randint(1, 99), 10))
    if pick < 0.7:
        return n.CPi()
    if pick < 0.8:
        return n.CEuler()
    if pick < 0.9:
        return n.CSqrt(random_const(rng))
    return n.CDiv(n.CRat(n.rat(rng.randint(1, 9)).num),
                  n.CRat(n.rat(rng.randint(1, 9)).num))


def random_classical_ast(rng, depth):
    if depth <= 0:
        return rng.choice([n.Qubit(rng.randrange(4)), n.Top(), n.Bot(),
                           n.BigConj(frozenset({0, 1}), frozenset({1}))])
    pick = rng.random()
    if pick < 0.3:
        return n.CNeg(random_classical_ast(rng, depth - 1))
    ctor = rng.choice([n.CImp, n.CConj, n.CDisj, n.CEquiv])
    return ctor(random_classical_ast(rng, depth - 1),
                random_classical_ast(rng, depth - 1))


def random_real_ast(rng, depth):
    if depth <= 0:
        return rng.choice([n.RealVar(rng.randrange(1, 5)),
                           n.Const(random_const(rng)),
                           n.Prob(random_classical_ast(rng, 1))])
    pick = rng.random()
    if pick < 0.3:
        ctor = rng.choice([n.RSum, n.RProd])
        return ctor(random_real_ast(rng, depth - 1), random_real_ast(rng, depth - 1))
    ctor = rng.choice([n.Re, n.Im, n.Arg, n.Abs])
    return ctor(random_complex_ast(rng, depth - 1))


def random_complex_ast(rng, depth):
    if depth <= 0:
        return rng.choice([
            n.ComplexVar(rng.randrange(1, 5)),
            n.Amp(frozenset({0, 1}), frozenset({0})),
            n.AmpOf(n.Qubit(1), frozenset({0, 1}), frozenset()),
        ])
    pick = rng.random()
    if pick < 0.2:
        return n.Cart(random_real_ast(rng, depth - 1), random_real_ast(rng, depth - 1))
    if pick < 0.4:
        return n.Polar(random_real_ast(rng, depth - 1), random_real_ast(rng, depth - 1))
    if pick < 0.5:
        return n.Conj(random_complex_ast(rng, depth - 1))
    if pick < 0.7:
        ctor = rng.choice([n.CSum, n.CProd])
        return ctor(random_complex_ast(rng, depth - 1),
                    random_complex_ast(rng, depth - 1))
    return n.Ite(random_classical_ast(rng, depth - 1),
                 random_complex_ast(rng, depth - 1),
                 random_complex_ast(rng, depth - 1))


def random_quantum_ast(rng, depth):
    if depth <= 0:
        return rng.choice([
            random_classical_ast(rng, 1),
            n.Leq(random_real_ast(rng, 0), random_real_ast(rng, 0)),
            n.NonEtg(frozenset({0, 2})),
            n.CondNonEtg(frozenset({1}), frozenset({1, 2})),
            n.EntangledPair(0, 1, frozenset({0, 1, 3})),
            n.Dia(random_classical_ast(rng, 1)),
            n.Box(random_classical_ast(rng, 1)),
            n.Poss(frozenset({0, 1}),
                   ((n.Qubit(0), random_complex_ast(rng, 0)),)),
        ])
    pick = rng.random()
    if pick < 0.2:
        return n.QNeg(random_quantum_ast(rng, depth - 1))
    if pick < 0.45:
        ctor = rng.choice([n.QImp, n.QConj, n.QDisj, n.QEquiv])
        return ctor(random_quantum_ast(rng, depth - 1),
                    random_quantum_ast(rng, depth - 1))
    ctor = rng.choice([n.Leq, n.Lt, n.EqR])
    if ctor is n.EqR and rng.random() < 0.5:
        return n.EqC(random_complex_ast(rng, depth - 1),
                     random_complex_ast(rng, depth - 1))
    return ctor(random_real_ast(rng, depth - 1), random_real_ast(rng, depth - 1))


GENERATORS = {
    "classical": random_classical_ast,
    "real": random_real_ast,
    "complex": random_complex_ast,
    "quantum": random_quantum_ast,
}


@pytest.mark.parametrize("category", sorted(GENERATORS))
def test_roundtrip_random_asts(category):
    rng = random.Random(20240801 + len(category))
    gen = GENERATORS[category]
    for trial in range(120):
        ast = gen(rng, rng.randint(0, 3))
        text = render(ast)
        again = parse(text, category)
        assert again == ast, f"{category} round-trip failed for {text}"
        once = expand(ast)
        assert expand(once) == once
