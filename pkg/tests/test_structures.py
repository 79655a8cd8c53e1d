"""State vectors, tensor products, factorizability, structure validation."""

import cmath
import math
import random

import pytest

from eqpl.errors import NotUnitNorm, OverlappingCarriers
from eqpl.structures import (
    QuantumStructure, StateVector, Valuation, basis_vector, make_vector,
    project_valuations, schmidt_factor, tensor, tensor_all, validate_structure,
)
from eqpl.syntax.nodes import subsets_in_order
from support import bruteforce_factorizable, random_block_state, random_structure

S2 = 1 / math.sqrt(2)
S6 = 1 / math.sqrt(6)


def vv(frame, bits):
    return Valuation.from_bits(frame, bits)


def bell():
    return make_vector([0, 1], {vv([0, 1], "00"): S2, vv([0, 1], "11"): S2})


def test_make_vector_accepts_unit_norm():
    assert bell().norm() == pytest.approx(1.0)
    assert basis_vector([0], []).amplitude(vv([0], "0")) == 1


def test_make_vector_rejects_non_unit():
    with pytest.raises(NotUnitNorm) as err:
        make_vector([0], {vv([0], "0"): 1.0, vv([0], "1"): 1.0})
    assert err.value.actual == pytest.approx(math.sqrt(2))


def test_make_vector_never_renormalizes():
    with pytest.raises(NotUnitNorm):
        make_vector([0], {vv([0], "0"): 0.999999})


def test_tensor_basis():
    out = tensor(basis_vector([0], []), basis_vector([1], [1]))
    assert out.amplitude(vv([0, 1], "01")) == 1
    assert len(out.amplitudes) == 1


def test_tensor_superposition():
    plus = make_vector([1], {vv([1], "0"): S2, vv([1], "1"): S2})
    out = tensor(basis_vector([0], []), plus)
    assert out.amplitude(vv([0, 1], "00")) == pytest.approx(S2)
    assert out.amplitude(vv([0, 1], "01")) == pytest.approx(S2)
    assert out.amplitude(vv([0, 1], "10")) == 0


def test_tensor_bell_with_basis():
    # enumerate all eight valuations: only 000 and 110 carry amplitude
    out = tensor(bell(), basis_vector([2], []))
    expected = {"000": S2, "110": S2}
    for bits in ["000", "001", "010", "011", "100", "101", "110", "111"]:
        assert out.amplitude(vv([0, 1, 2], bits)) == pytest.approx(
            expected.get(bits, 0.0))


def test_tensor_rejects_overlap():
    with pytest.raises(OverlappingCarriers):
        tensor(bell(), basis_vector([1], []))


def test_tensor_norm_multiplicative():
    rng = random.Random(11)
    for _ in range(40):
        a = random_block_state(rng, frozenset(rng.sample(range(6), rng.randint(1, 3))))
        rest = [q for q in range(6, 12)]
        b = random_block_state(rng, frozenset(rng.sample(rest, rng.randint(1, 3))))
        prod = tensor(a, b)
        assert abs(prod.norm() - a.norm() * b.norm()) < 1e-8


def test_tensor_associative():
    # exact equality of the amplitude maps on dyadic amplitudes
    a = make_vector([0], {vv([0], "0"): 0.5, vv([0], "1"): complex(0.5, math.sqrt(2) / 2)})
    b = bell()
    c = make_vector([3], {vv([3], "0"): 0.75, vv([3], "1"): complex(0, 0.661437827766148)})
    left = tensor(tensor(a, StateVector((1, 2), b.amplitudes)), c)
    right = tensor(a, tensor(StateVector((1, 2), b.amplitudes), c))
    da = make_vector([0], {vv([0], "0"): 0.5, vv([0], "1"): complex(0.5, 0.5 + 0.5j and 0.5)})
    assert set(left.amplitudes) == set(right.amplitudes)
    for v in left.amplitudes:
        assert left.amplitude(v) == pytest.approx(right.amplitude(v), abs=1e-15)
    # and bit-exact when every amplitude is a small dyadic
    a2 = StateVector((0,), {vv([0], "0"): 0.5, vv([0], "1"): 0.75})
    b2 = StateVector((1,), {vv([1], "0"): 0.25, vv([1], "1"): 0.5})
    c2 = StateVector((2,), {vv([2], "0"): 1.0})
    assert tensor(tensor(a2, b2), c2).amplitudes == tensor(a2, tensor(b2, c2)).amplitudes


def test_project_valuations_examples():
    vals = [vv([0, 1], b) for b in ("00", "01", "10")]
    assert project_valuations(vals, [0]) == {vv([0], "0"), vv([0], "1")}
    vals = [vv([0, 1], b) for b in ("00", "01")]
    assert project_valuations(vals, [0]) == {vv([0], "0")}
    vals = [vv([0, 1], b) for b in ("00", "11")]
    assert project_valuations(vals, [0], "outside") == {vv([1], "0"), vv([1], "1")}


def test_schmidt_bell_not_factorizable():
    assert not schmidt_factor(bell(), {0}).factorizable


def test_schmidt_product_recovers_factors():
    plus = make_vector([1], {vv([1], "0"): S2, vv([1], "1"): S2})
    prod = tensor(basis_vector([0], []), plus)
    result = schmidt_factor(prod, {0})
    assert result.factorizable
    rebuilt = tensor(result.left, result.right)
    for v in prod.amplitudes:
        assert abs(rebuilt.amplitude(v) - prod.amplitude(v)) < 1e-7
    # right factor's first nonzero amplitude is real positive
    first = min(result.right.amplitudes.items(), key=lambda kv: kv[0].bits())
    assert abs(first[1].imag) < 1e-12 and first[1].real > 0


def cat_state():
    phase = cmath.exp(1j * math.pi / 3) * math.sqrt(2 / 3)
    catam = make_vector([1, 2], {vv([1, 2], "11"): S6, vv([1, 2], "10"): S6,
                                 vv([1, 2], "00"): phase})
    cati = make_vector([0], {vv([0], "0"): S2, vv([0], "1"): S2})
    return cati, catam


def test_schmidt_cat_example():
    cati, catam = cat_state()
    full = tensor(cati, catam)
    assert not schmidt_factor(full, {1}).factorizable
    assert schmidt_factor(full, {0}).factorizable


def test_schmidt_agrees_with_bruteforce():
    rng = random.Random(13)
    for trial in range(60):
        size = rng.randint(2, 5)
        carrier = frozenset(range(size))
        state = random_block_state(rng, carrier)
        parts = [p for p in subsets_in_order(carrier) if p and p != carrier]
        part = rng.choice(parts)
        assert schmidt_factor(state, part).factorizable == \
            bruteforce_factorizable(state, part)
        # explicit product across the same cut must be factorizable
        left = random_block_state(rng, part)
        right = random_block_state(rng, carrier - part)
        assert schmidt_factor(tensor(left, right), part).factorizable


def cat_structure():
    cati, catam = cat_state()
    admissible = [a.join(b) for a in cati.amplitudes for b in catam.amplitudes]
    return QuantumStructure.build(
        [0, 1, 2], admissible, [[0], [1, 2]],
        {frozenset([0]): cati, frozenset([1, 2]): catam})


def test_validate_cat_structure():
    assert validate_structure(cat_structure()) == []


def test_validate_rejects_product_block():
    plus = make_vector([1], {vv([1], "0"): S2, vv([1], "1"): S2})
    block = tensor(basis_vector([0], []), plus)
    w = QuantumStructure.build([0, 1], list(block.amplitudes), [[0, 1]],
                               {frozenset([0, 1]): block})
    codes = {d.code for d in validate_structure(w)}
    assert "NonFactorizableBlockViolation" in codes


def test_validate_rejects_inadmissible_support():
    w = QuantumStructure.build([0, 1], [vv([0, 1], "00")], [[0, 1]],
                               {frozenset([0, 1]): bell()})
    codes = {d.code for d in validate_structure(w)}
    assert "AdmissibilityViolation" in codes


def test_validate_rejects_shadowing_override():
    w = cat_structure()
    shadowed = QuantumStructure.build(
        w.frame, w.admissible, w.partition, w.block_states,
        {(frozenset({0}), frozenset()): 0.5 + 0j})
    codes = {d.code for d in validate_structure(shadowed)}
    assert "NuOverrideShadowsBlocks" in codes


def test_unit_amplitude_mass_per_union():
    # for every union of blocks, the squared amplitudes sum to one
    rng = random.Random(14)
    for _ in range(25):
        w = random_structure(rng, range(rng.randint(1, 4)))
        assert validate_structure(w) == []
        for g in subsets_in_order(frozenset(w.frame)):
            if g and w.is_block_union(g):
                mass = sum(abs(w.amp(g, a)) ** 2 for a in subsets_in_order(g))
                assert abs(mass - 1.0) < 1e-8


def test_full_state_is_block_tensor():
    w = cat_structure()
    rebuilt = tensor_all(w.block_states[frozenset(b)] for b in w.partition)
    assert w.full_state.amplitudes == rebuilt.amplitudes
