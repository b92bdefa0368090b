import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from addcomb import (
    GroupMismatch,
    InvalidArgument,
    PreconditionViolation,
    add,
    compose_character_with_psi,
    eval_character,
    halve,
    make_group,
    neg,
    psi2_power,
    psi_apply,
)
from addcomb.group import FiniteAbelianGroup, MultiplicationMap

moduli_lists = st.lists(st.integers(1, 7), min_size=1, max_size=3)
odd_moduli_lists = st.lists(st.sampled_from([1, 3, 5, 7, 9]), min_size=1, max_size=3)


def test_make_group_orders():
    assert make_group([5]).order == 5
    assert make_group([3, 5]).order == 15
    G = make_group([1])
    assert G.order == 1
    assert list(G.elements()) == [G.zero]


@pytest.mark.parametrize("bad", [[], [0], [3, -2]])
def test_make_group_rejects(bad):
    with pytest.raises(InvalidArgument):
        make_group(bad)


def test_add_and_neg():
    Z5 = make_group([5])
    assert add(Z5.element(3), Z5.element(4)) == Z5.element(2)
    G = make_group([3, 5])
    assert add(G.element((2, 4)), G.element((2, 2))) == G.element((1, 1))
    assert neg(Z5.zero) == Z5.zero


def test_add_group_mismatch():
    with pytest.raises(GroupMismatch):
        add(make_group(5).element(1), make_group(7).element(1))
    assert issubclass(GroupMismatch, InvalidArgument)


def test_eval_character_examples():
    Z4 = make_group(4)
    assert eval_character(Z4.character(1), Z4.element(1)) == pytest.approx(1j, abs=1e-15)
    Z7 = make_group(7)
    assert eval_character(Z7.trivial_character, Z7.element(5)) == 1
    assert eval_character(Z7.character(1), Z7.element(2)) == pytest.approx(cmath.exp(4j * cmath.pi / 7), abs=1e-14)


def test_halve_and_psi():
    Z7 = make_group(7)
    assert halve(Z7.element(3)) == Z7.element(5)
    Z5 = make_group(5)
    assert psi_apply(2, Z5.element(3)) == Z5.element(1)
    assert halve(Z7.zero) == Z7.zero


def test_halve_even_order():
    with pytest.raises(PreconditionViolation):
        halve(make_group(4).element(1))


def test_compose_character_examples():
    Z5 = make_group(5)
    assert compose_character_with_psi(Z5.character(1), 2) == Z5.character(2)
    gamma = make_group([3, 5]).character((1, 4))
    assert compose_character_with_psi(gamma, 1) == gamma
    Z7 = make_group(7)
    assert compose_character_with_psi(Z7.character(3), 4) == Z7.character(5)


def test_psi2_power_inverse():
    G = make_group([3, 5])
    for gamma in G.characters():
        assert psi2_power(psi2_power(gamma, 3), -3) == gamma


def test_multiplication_map_inverse():
    G = make_group([3, 5])
    psi = MultiplicationMap(G, 2)
    inv = psi.inverse()
    for x in G.elements():
        assert inv(psi(x)) == x
    with pytest.raises(InvalidArgument):
        MultiplicationMap(G, 3).inverse()


def test_serialization_roundtrip():
    G = make_group([3, 5])
    assert G.to_dict() == {"moduli": [3, 5]}
    assert FiniteAbelianGroup.from_dict(G.to_dict()) == G
    assert make_group(7).element(3).to_json() == 3
    assert G.element((1, 2)).to_json() == [1, 2]


def test_index_roundtrip():
    G = make_group([2, 3, 4])
    for i in range(G.order):
        assert G.index_of(G.element(i)) == i


@settings(max_examples=60, deadline=None)
@given(moduli_lists, st.data())
def test_character_is_homomorphism(moduli, data):
    G = make_group(moduli)
    gamma = G.character(data.draw(st.integers(0, G.order - 1)))
    x = G.element(data.draw(st.integers(0, G.order - 1)))
    y = G.element(data.draw(st.integers(0, G.order - 1)))
    lhs = eval_character(gamma, x + y)
    rhs = eval_character(gamma, x) * eval_character(gamma, y)
    assert abs(lhs - rhs) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(odd_moduli_lists)
def test_halve_inverts_doubling(moduli):
    G = make_group(moduli)
    for x in G.elements():
        assert halve(psi_apply(2, x)) == x
        assert psi_apply(2, halve(x)) == x


def test_halve_bijection_exhaustive_large():
    G = make_group(9999)
    idx = G.mul_idx(2, G.halve_idx(np.arange(G.order)))
    assert (idx == np.arange(G.order)).all()


@settings(max_examples=30, deadline=None)
@given(moduli_lists, st.integers(-20, 20), st.data())
def test_compose_with_psi_matches_evaluation(moduli, k, data):
    G = make_group(moduli)
    gamma = G.character(data.draw(st.integers(0, G.order - 1)))
    comp = compose_character_with_psi(gamma, k)
    for x in G.elements():
        assert abs(eval_character(comp, x) - eval_character(gamma, psi_apply(k, x))) <= 1e-12
