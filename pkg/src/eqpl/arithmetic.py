"""The variable-only arithmetic fragment and its partial validity oracle.

An arithmetical formula is built from comparisons of real expressions with
the global connectives; it mentions variables and constants but no qubits,
probabilities, amplitudes or alternative terms, so an assignment suffices
to evaluate it.

``oracle_check`` is sound and deliberately incomplete, in three tiers:

  1. an exact decision procedure for the linear-rational fragment
     (complex variables split into real/imaginary parts, maximal nonlinear
     subterms abstracted to fresh unconstrained variables -- abstraction
     generalizes, so a Valid answer transfers to the original formula);
  2. a small pattern table: polynomial identities over the rationals and
     the square-roots-of-minus-one implication;
  3. a randomized falsification search with local descent, which can only
     produce Invalid verdicts (each witness is re-checked).

``eval_arith`` compares denoted doubles with the EPS_CMP tolerance; the
oracle itself judges exact real validity (tier 1 runs over exact rational
arithmetic).  Invalid witnesses are checked to falsify the formula under
both the exact and the tolerant reading.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from .semantics import EPS_CMP, Assignment
from .syntax import expand, free_symbols, render
from .syntax import nodes as n

# ---------------------------------------------------------------------------
# the fragment

def is_arithmetical(phi) -> bool:
    """Whether the (possibly sugared) formula lies in the variable-only
    arithmetic fragment."""
    try:
        core = expand(phi)
    except Exception:
        return False
    return _arith_formula(core)


def _arith_formula(phi) -> bool:
    if isinstance(phi, n.Leq):
        return _arith_term(phi.left) and _arith_term(phi.right)
    if isinstance(phi, n.QNeg):
        return _arith_formula(phi.arg)
    if isinstance(phi, n.QImp):
        return _arith_formula(phi.left) and _arith_formula(phi.right)
    return False


def _arith_term(t) -> bool:
    if isinstance(t, (n.RealVar, n.Const, n.ComplexVar)):
        return True
    if isinstance(t, (n.RSum, n.RProd, n.CSum, n.CProd)):
        return _arith_term(t.left) and _arith_term(t.right)
    if isinstance(t, (n.Re, n.Im, n.Arg, n.Abs, n.Conj)):
        return _arith_term(t.arg)
    if isinstance(t, n.Cart):
        return _arith_term(t.re) and _arith_term(t.im)
    if isinstance(t, n.Polar):
        return _arith_term(t.mod) and _arith_term(t.ang)
    return False


# ---------------------------------------------------------------------------
# evaluation

def _eval_term(t, rho: Assignment):
    ev = lambda s: _eval_term(s, rho)
    if isinstance(t, n.RealVar):
        return rho.real(t.index)
    if isinstance(t, n.Const):
        return t.expr.value()
    if isinstance(t, n.RSum):
        return ev(t.left) + ev(t.right)
    if isinstance(t, n.RProd):
        return ev(t.left) * ev(t.right)
    if isinstance(t, n.Re):
        return ev(t.arg).real
    if isinstance(t, n.Im):
        return ev(t.arg).imag
    if isinstance(t, n.Arg):
        value = ev(t.arg)
        import cmath

        return 0.0 if value == 0 else cmath.phase(value)
    if isinstance(t, n.Abs):
        return abs(ev(t.arg))
    if isinstance(t, n.ComplexVar):
        return rho.cplx(t.index)
    if isinstance(t, n.Cart):
        return complex(ev(t.re), ev(t.im))
    if isinstance(t, n.Polar):
        import cmath

        return ev(t.mod) * cmath.exp(1j * ev(t.ang))
    if isinstance(t, n.Conj):
        return ev(t.arg).conjugate()
    if isinstance(t, n.CSum):
        return ev(t.left) + ev(t.right)
    if isinstance(t, n.CProd):
        return ev(t.left) * ev(t.right)
    raise TypeError(f"not an arithmetical term: {t!r}")


def eval_arith(phi, rho: Assignment, eps_cmp: float = EPS_CMP) -> bool:
    """Truth value of an arithmetical formula under an assignment."""
    core = expand(phi)
    if not _arith_formula(core):
        raise ValueError(f"not an arithmetical formula: {render(phi)}")
    return _eval_core(core, rho, eps_cmp)


def _eval_core(phi, rho, eps_cmp) -> bool:
    if isinstance(phi, n.Leq):
        return _eval_term(phi.left, rho) <= _eval_term(phi.right, rho) + eps_cmp
    if isinstance(phi, n.QNeg):
        return not _eval_core(phi.arg, rho, eps_cmp)
    if isinstance(phi, n.QImp):
        return not _eval_core(phi.left, rho, eps_cmp) or _eval_core(phi.right, rho, eps_cmp)
    raise TypeError(f"not a core arithmetical formula: {phi!r}")


# ---------------------------------------------------------------------------
# verdicts and budget

@dataclass(frozen=True)
class OracleVerdict:
    kind: str  # "valid" | "invalid" | "unknown"
    tier: str = ""
    witness: Assignment | None = None
    reason: str = ""

    @property
    def is_valid(self) -> bool:
        return self.kind == "valid"


def Valid(tier: str) -> OracleVerdict:
    return OracleVerdict("valid", tier)


def Invalid(witness: Assignment, tier: str) -> OracleVerdict:
    return OracleVerdict("invalid", tier, witness)


def Unknown(reason: str) -> OracleVerdict:
    return OracleVerdict("unknown", reason=reason)


@dataclass(frozen=True)
class Budget:
    samples: int = 10_000
    eliminations: int = 1_000
    branch_cap: int = 4096
    descent_starts: int = 3
    descent_iters: int = 200
    seed: int = 0


DEFAULT_BUDGET = Budget()


# ---------------------------------------------------------------------------
# tier 1: linear-rational fragment with nonlinear abstraction

class _LinBuilder:
    """Rewrites real terms into linear combinations over atomic keys,
    abstracting every maximal non-linear subterm to a fresh opaque key."""

    def __init__(self):
        self.opaque: dict = {}
        self.abstracted = False

    def key_for(self, term) -> tuple:
        if term not in self.opaque:
            self.opaque[term] = ("op", len(self.opaque), render(term))
            self.abstracted = True
        return self.opaque[term]

    def real(self, t) -> dict:
        """Linear form as {key: Fraction} with the constant under key None."""
        if isinstance(t, n.RealVar):
            return {("x", t.index): Fraction(1)}
        if isinstance(t, n.Const):
            value = t.expr.exact()
            if value is None:
                return {self.key_for(t): Fraction(1)}
            return {None: value}
        if isinstance(t, n.RSum):
            return _lin_add(self.real(t.left), self.real(t.right))
        if isinstance(t, n.RProd):
            left, right = self.real(t.left), self.real(t.right)
            if set(left) <= {None}:
                return _lin_scale(right, left.get(None, Fraction(0)))
            if set(right) <= {None}:
                return _lin_scale(left, right.get(None, Fraction(0)))
            return {self.key_for(t): Fraction(1)}
        if isinstance(t, (n.Re, n.Im)):
            pair = self.cplx(t.arg)
            if pair is not None:
                return pair[0] if isinstance(t, n.Re) else pair[1]
            return {self.key_for(t): Fraction(1)}
        return {self.key_for(t): Fraction(1)}

    def cplx(self, u):
        """Pair of linear forms (re, im), or None when not linear."""
        if isinstance(u, n.ComplexVar):
            return ({("re", u.index): Fraction(1)}, {("im", u.index): Fraction(1)})
        if isinstance(u, n.Cart):
            return (self.real(u.re), self.real(u.im))
        if isinstance(u, n.Conj):
            pair = self.cplx(u.arg)
            if pair is None:
                return None
            return (pair[0], _lin_scale(pair[1], Fraction(-1)))
        if isinstance(u, n.CSum):
            a, b = self.cplx(u.left), self.cplx(u.right)
            if a is None or b is None:
                return None
            return (_lin_add(a[0], b[0]), _lin_add(a[1], b[1]))
        if isinstance(u, n.CProd):
            a, b = self.cplx(u.left), self.cplx(u.right)
            if a is None or b is None:
                return None
            for const, other in ((a, b), (b, a)):
                if set(const[0]) <= {None} and set(const[1]) <= {None}:
                    cr = const[0].get(None, Fraction(0))
                    ci = const[1].get(None, Fraction(0))
                    return (_lin_add(_lin_scale(other[0], cr),
                                     _lin_scale(other[1], -ci)),
                            _lin_add(_lin_scale(other[0], ci),
                                     _lin_scale(other[1], cr)))
            return None
        return None


def _lin_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, c in b.items():
        out[k] = out.get(k, Fraction(0)) + c
        if out[k] == 0 and k is not None:
            del out[k]
    return out


def _lin_scale(a: dict, c: Fraction) -> dict:
    if c == 0:
        return {}
    return {k: v * c for k, v in a.items()}


def _dnf(phi, positive: bool, cap: int):
    """DNF branches of phi (or of its negation), as lists of
    (linear-atom, polarity) pairs over Leq atoms."""
    if isinstance(phi, n.Leq):
        return [[(phi, positive)]]
    if isinstance(phi, n.QNeg):
        return _dnf(phi.arg, not positive, cap)
    if isinstance(phi, n.QImp):
        if positive:  # ~A or B
            branches = _dnf(phi.left, False, cap) + _dnf(phi.right, True, cap)
        else:  # A and ~B
            branches = [x + y
                        for x in _dnf(phi.left, True, cap)
                        for y in _dnf(phi.right, False, cap)]
        if len(branches) > cap:
            raise _BranchCap()
        return branches
    raise TypeError(f"not a core arithmetical formula: {phi!r}")


class _BranchCap(Exception):
    pass


class _Eliminations:
    def __init__(self, budget: int):
        self.left = budget

    def spend(self, amount: int = 1):
        self.left -= amount
        if self.left < 0:
            raise _BranchCap()


def _fm_feasible(constraints, counter: _Eliminations):
    """Fourier-Motzkin over the rationals.

    `constraints`: list of (linear-form, strict) meaning form <= 0 or < 0.
    Returns None when infeasible, otherwise a rational witness for the keys.
    """
    constraints = [(dict(f), s) for f, s in constraints]
    all_keys = {k for f, _ in constraints for k in f if k is not None}
    order = []
    while True:
        variables = sorted({k for f, _ in constraints for k in f if k is not None})
        if not variables:
            break
        # cheapest variable first
        def cost(v):
            lows = sum(1 for f, _ in constraints if f.get(v, 0) < 0)
            ups = sum(1 for f, _ in constraints if f.get(v, 0) > 0)
            return lows * ups - lows - ups

        var = min(variables, key=cost)
        lows, ups, rest = [], [], []
        for f, s in constraints:
            c = f.get(var, Fraction(0))
            if c > 0:
                ups.append((f, s))
            elif c < 0:
                lows.append((f, s))
            else:
                rest.append((f, s))
        order.append((var, lows, ups))
        new = rest
        for (fl, sl), (fu, su) in itertools.product(lows, ups):
            counter.spend()
            cl, cu = -fl[var], fu[var]
            combined = _lin_add(_lin_scale(fu, Fraction(1) / cu),
                                _lin_scale(fl, Fraction(1) / cl))
            combined.pop(var, None)
            new.append((combined, sl or su))
        constraints = new
        if len(constraints) > 4000:
            raise _BranchCap()
    for f, strict in constraints:
        c = f.get(None, Fraction(0))
        if c > 0 or (strict and c == 0):
            return None
    # feasible: back-substitute a witness
    witness: dict = {}
    for var, lows, ups in reversed(order):
        lo, lo_strict, up, up_strict = None, False, None, False
        for f, s in lows:  # f <= 0 with negative coefficient on var: var >= bound
            c = f[var]
            bound = -_eval_lin(f, witness, skip=var) / c
            if lo is None or bound > lo or (bound == lo and s):
                lo, lo_strict = bound, s
        for f, s in ups:
            c = f[var]
            bound = -_eval_lin(f, witness, skip=var) / c
            if up is None or bound < up or (bound == up and s):
                up, up_strict = bound, s
        if lo is None and up is None:
            witness[var] = Fraction(0)
        elif lo is None:
            witness[var] = up - 1 if up_strict else up
        elif up is None:
            witness[var] = lo + 1 if lo_strict else lo
        else:
            witness[var] = (lo + up) / 2 if (lo_strict or up_strict or lo != up) else lo
    for key in all_keys:
        witness.setdefault(key, Fraction(0))
    return witness


def _eval_lin(f: dict, witness: dict, skip=None) -> Fraction:
    total = f.get(None, Fraction(0))
    for k, c in f.items():
        if k is None or k == skip:
            continue
        total += c * witness.get(k, Fraction(0))
    return total


def _tier1(phi_core, budget: Budget):
    """Returns (verdict-or-None).  Valid is sound even when nonlinear
    subterms were abstracted; Invalid is only produced without abstraction
    and with a verified witness."""
    builder = _LinBuilder()
    try:
        branches = _dnf(phi_core, False, budget.branch_cap)  # negation of phi
    except _BranchCap:
        return None
    counter = _Eliminations(budget.eliminations)
    feasible_witness = None
    try:
        for branch in branches:
            constraints = []
            for atom, polarity in branch:
                diff = _lin_add(builder.real(atom.left),
                                _lin_scale(builder.real(atom.right), Fraction(-1)))
                if polarity:  # left <= right
                    constraints.append((diff, False))
                else:  # left > right
                    constraints.append((_lin_scale(diff, Fraction(-1)), True))
            witness = _fm_feasible(constraints, counter)
            if witness is not None:
                feasible_witness = witness
                break
    except _BranchCap:
        return None
    if feasible_witness is None:
        return Valid("linear")
    if builder.abstracted:
        return None
    rho = _assignment_from_keys(feasible_witness)
    if _robustly_false(phi_core, rho):
        return Invalid(rho, "linear")
    return None


def _robustly_false(phi_core, rho: Assignment) -> bool:
    """False under both the exact and the tolerant reading, so the witness
    is a genuine counterexample and also falsifies ``eval_arith``."""
    try:
        return (not _eval_core(phi_core, rho, 0.0)
                and not _eval_core(phi_core, rho, EPS_CMP))
    except Exception:
        return False


def _assignment_from_keys(witness: Mapping) -> Assignment:
    reals: dict[int, float] = {}
    cplx: dict[int, complex] = {}
    for key, value in witness.items():
        if key is None:
            continue
        kind = key[0]
        if kind == "x":
            reals[key[1]] = float(value)
        elif kind in ("re", "im"):
            old = cplx.get(key[1], 0j)
            cplx[key[1]] = (complex(float(value), old.imag) if kind == "re"
                            else complex(old.real, float(value)))
    return Assignment(reals, cplx)


# ---------------------------------------------------------------------------
# tier 2: pattern table

def _poly_real(t, bail):
    """Multivariate polynomial over Q as {monomial: Fraction}; monomials are
    sorted tuples of (atom-key, exponent).  Opaque atoms stand for arg/abs/
    polar subterms and irrational constants."""
    if isinstance(t, n.RealVar):
        return {((("x", t.index), 1),): Fraction(1)}
    if isinstance(t, n.Const):
        value = t.expr.exact()
        if value is None:
            return {((("c", render(t)), 1),): Fraction(1)}
        return {(): value} if value else {}
    if isinstance(t, n.RSum):
        return _poly_add(_poly_real(t.left, bail), _poly_real(t.right, bail))
    if isinstance(t, n.RProd):
        if (isinstance(t.left, n.Abs) and isinstance(t.right, n.Abs)
                and t.left.arg == t.right.arg):
            # |u|^2 == re(u)^2 + im(u)^2
            re_p, im_p = _poly_cplx(t.left.arg, bail)
            return _poly_add(_poly_mul(re_p, re_p), _poly_mul(im_p, im_p))
        return _poly_mul(_poly_real(t.left, bail), _poly_real(t.right, bail))
    if isinstance(t, n.Re):
        return _poly_cplx(t.arg, bail)[0]
    if isinstance(t, n.Im):
        return _poly_cplx(t.arg, bail)[1]
    if isinstance(t, (n.Arg, n.Abs)):
        return {((("t", render(t)), 1),): Fraction(1)}
    raise bail


def _poly_cplx(u, bail):
    if isinstance(u, n.ComplexVar):
        return ({((("re", u.index), 1),): Fraction(1)},
                {((("im", u.index), 1),): Fraction(1)})
    if isinstance(u, n.Cart):
        return (_poly_real(u.re, bail), _poly_real(u.im, bail))
    if isinstance(u, n.Conj):
        re_p, im_p = _poly_cplx(u.arg, bail)
        return (re_p, _poly_scale(im_p, Fraction(-1)))
    if isinstance(u, n.CSum):
        a, b = _poly_cplx(u.left, bail), _poly_cplx(u.right, bail)
        return (_poly_add(a[0], b[0]), _poly_add(a[1], b[1]))
    if isinstance(u, n.CProd):
        a, b = _poly_cplx(u.left, bail), _poly_cplx(u.right, bail)
        return (_poly_add(_poly_mul(a[0], b[0]), _poly_scale(_poly_mul(a[1], b[1]),
                                                             Fraction(-1))),
                _poly_add(_poly_mul(a[0], b[1]), _poly_mul(a[1], b[0])))
    if isinstance(u, n.Polar):
        return ({((("t", render(u) + "#re"), 1),): Fraction(1)},
                {((("t", render(u) + "#im"), 1),): Fraction(1)})
    raise bail


def _poly_add(a, b):
    out = dict(a)
    for mono, c in b.items():
        out[mono] = out.get(mono, Fraction(0)) + c
        if out[mono] == 0:
            del out[mono]
    return out


def _poly_scale(a, c):
    if c == 0:
        return {}
    return {m: v * c for m, v in a.items()}


def _poly_mul(a, b):
    out: dict = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            merged: dict = {}
            for key, exponent in itertools.chain(m1, m2):
                merged[key] = merged.get(key, 0) + exponent
            mono = tuple(sorted(merged.items()))
            out[mono] = out.get(mono, Fraction(0)) + c1 * c2
            if out[mono] == 0:
                del out[mono]
    return out


class _Bail(Exception):
    pass


def _identity_formula(phi) -> bool:
    """True when phi is a conjunction tree of equalities between terms with
    identical polynomial normal forms."""
    if isinstance(phi, n.QConj):
        return _identity_formula(phi.left) and _identity_formula(phi.right)
    bail = _Bail()
    try:
        if isinstance(phi, n.EqR):
            return _poly_add(_poly_real(phi.left, bail),
                             _poly_scale(_poly_real(phi.right, bail),
                                         Fraction(-1))) == {}
        if isinstance(phi, n.EqC):
            a, b = _poly_cplx(phi.left, bail), _poly_cplx(phi.right, bail)
            return (_poly_add(a[0], _poly_scale(b[0], Fraction(-1))) == {}
                    and _poly_add(a[1], _poly_scale(b[1], Fraction(-1))) == {})
    except _Bail:
        return False
    return False


def _const_complex(u) -> complex | None:
    """Exact rational complex value of a constant term, else None."""
    bail = _Bail()
    try:
        re_p, im_p = _poly_cplx(u, bail)
    except _Bail:
        return None
    if set(re_p) <= {()} and set(im_p) <= {()}:
        return complex(float(re_p.get((), Fraction(0))), float(im_p.get((), Fraction(0))))
    return None


def _exact_pair(u):
    bail = _Bail()
    try:
        re_p, im_p = _poly_cplx(u, bail)
    except _Bail:
        return None
    if set(re_p) <= {()} and set(im_p) <= {()}:
        return (re_p.get((), Fraction(0)), im_p.get((), Fraction(0)))
    return None


def _square_root_pattern(phi) -> bool:
    """((u*u = -1) ==> ((u = i) || (u = -i))) for an arbitrary complex term
    u and the exact constants; sound at the working tolerance because the
    roots have modulus 1."""
    if not (isinstance(phi, n.QImp) and isinstance(phi.left, n.EqC)
            and isinstance(phi.right, n.QDisj)):
        return False
    ante, cons = phi.left, phi.right
    if not (isinstance(ante.left, n.CProd) and ante.left.left == ante.left.right):
        return False
    u = ante.left.left
    k = _exact_pair(ante.right)
    if k != (Fraction(-1), Fraction(0)):
        return False
    if not (isinstance(cons.left, n.EqC) and isinstance(cons.right, n.EqC)):
        return False
    if cons.left.left != u or cons.right.left != u:
        return False
    roots = {_exact_pair(cons.left.right), _exact_pair(cons.right.right)}
    return roots == {(Fraction(0), Fraction(1)), (Fraction(0), Fraction(-1))}


def _tier2(phi_sugar) -> OracleVerdict | None:
    if _identity_formula(phi_sugar):
        return Valid("pattern:identity")
    if _square_root_pattern(phi_sugar):
        return Valid("pattern:square-root")
    return None


# ---------------------------------------------------------------------------
# tier 3: falsification search

def _margin(phi, rho, eps) -> float:
    """Positive when satisfied with slack, negative when violated."""
    if isinstance(phi, n.Leq):
        try:
            return float(_eval_term(phi.right, rho) + eps - _eval_term(phi.left, rho))
        except Exception:
            return float("inf")
    if isinstance(phi, n.QNeg):
        return -_margin(phi.arg, rho, eps)
    if isinstance(phi, n.QImp):
        return max(-_margin(phi.left, rho, eps), _margin(phi.right, rho, eps))
    raise TypeError(f"not a core arithmetical formula: {phi!r}")


_SPECIAL = (0.0, 1.0, -1.0, 0.5, -0.5, 2.0, -2.0, 10.0, -10.0, 1000.0, -1000.0)


def _tier3(phi_core, xs, zs, budget: Budget) -> OracleVerdict | None:
    rng = np.random.default_rng(budget.seed)
    xs, zs = sorted(xs), sorted(zs)
    dim = len(xs) + 2 * len(zs)

    def assemble(vec) -> Assignment:
        reals = {k: float(vec[i]) for i, k in enumerate(xs)}
        cplx = {k: complex(float(vec[len(xs) + 2 * j]), float(vec[len(xs) + 2 * j + 1]))
                for j, k in enumerate(zs)}
        return Assignment(reals, cplx)

    def check(vec) -> Assignment | None:
        rho = assemble(vec)
        return rho if _robustly_false(phi_core, rho) else None

    best: list[tuple[float, np.ndarray]] = []
    if dim == 0:
        return Invalid(Assignment(), "search") if check(np.zeros(0)) else None
    special = list(itertools.islice(itertools.product(_SPECIAL, repeat=dim), 2048))
    samples = [np.array(v, dtype=float) for v in special]
    while len(samples) < budget.samples:
        samples.append(rng.normal(scale=rng.choice([0.5, 1.0, 5.0, 100.0]), size=dim))
    for vec in samples[: budget.samples]:
        rho = check(vec)
        if rho is not None:
            return Invalid(rho, "search")
        m = _margin(phi_core, assemble(vec), 0.0)
        if np.isfinite(m):
            best.append((m, vec))
    best.sort(key=lambda p: p[0])
    try:
        from scipy.optimize import minimize
    except ImportError:  # pragma: no cover
        return None
    for m0, start in best[: budget.descent_starts]:
        result = minimize(
            lambda v: _margin(phi_core, assemble(v), 0.0),
            start, method="Nelder-Mead",
            options={"maxiter": budget.descent_iters, "fatol": 1e-12})
        rho = check(result.x)
        if rho is not None:
            return Invalid(rho, "search:descent")
    return None


# ---------------------------------------------------------------------------
# the oracle

def oracle_check(phi, budget: Budget | None = None) -> OracleVerdict:
    """Three-tier validity check; deterministic given (phi, budget).

    Valid verdicts come only from the sound deciders; Invalid carries a
    witness that falsifies the formula under ``eval_arith``.
    """
    budget = budget or DEFAULT_BUDGET
    core = expand(phi)
    if not _arith_formula(core):
        raise ValueError(f"not an arithmetical formula: {render(phi)}")
    verdict = _tier1(core, budget)
    if verdict is not None:
        return verdict
    verdict = _tier2(phi)
    if verdict is not None:
        return verdict
    _, xs, zs = free_symbols(core)
    verdict = _tier3(core, xs, zs, budget)
    if verdict is not None:
        return verdict
    return Unknown("not decided by the linear tier, the pattern table, "
                   "or the falsification search")
