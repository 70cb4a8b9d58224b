import numpy as np
import pytest

import oracle
from tableau import (InvalidArgument, PauliRow, StabilizerTableau, apply_cnot, apply_cnots, apply_swap, apply_swaps,
                     entanglement_entropy,
                     entropy_profile, init_bell_pairs, init_product_state, measure_bell_pair, measure_pauli,
                     measurement_outcome, mutual_information_I2, thirds)


def test_bell_pairs_rows():
    assert init_bell_pairs(2).labels() == ["+XX", "+ZZ"]
    assert init_bell_pairs(4).labels() == ["+XXII", "+ZZII", "+IIXX", "+IIZZ"]


@pytest.mark.parametrize("n", [3, 0, -2])
def test_bell_pairs_rejects_odd_or_empty(n):
    with pytest.raises(InvalidArgument):
        init_bell_pairs(n)


def test_product_state():
    assert init_product_state(1).labels() == ["+Z"]
    t = init_product_state(4)
    assert t.labels() == ["+ZIII", "+IZII", "+IIZI", "+IIIZ"]
    assert entropy_profile(t) == [0] * 5


@pytest.mark.parametrize("before, after", [
    (["XI", "IZ"], ["+XX", "+ZZ"]),
    (["ZI", "IX"], ["+ZI", "+IX"]),
    (["IZ", "XI"], ["+ZZ", "+XX"]),
    (["XZ", "ZX"], ["-YY", "+ZX"]),
])
def test_cnot_conjugation(before, after):
    t = StabilizerTableau.from_labels(before)
    apply_cnot(t, 0, 1)
    assert t.labels() == after
    t.validate()


def test_cnot_rejects_equal_sites():
    with pytest.raises(InvalidArgument):
        apply_cnot(init_bell_pairs(2), 1, 1)


def test_batched_gates_match_one_at_a_time(rng):
    n = 70
    batched, single = init_bell_pairs(n), init_bell_pairs(n)
    for step in range(12):
        sites = rng.permutation(n)
        controls, targets = sites[:20], sites[20:40]
        apply_cnots(batched, controls, targets)
        for c, g in zip(controls, targets):
            apply_cnot(single, int(c), int(g))
        a, b = sites[40:55], sites[55:70]
        apply_swaps(batched, a, b)
        for i, j in zip(a, b):
            apply_swap(single, int(i), int(j))
    assert np.array_equal(batched.x, single.x)
    assert np.array_equal(batched.z, single.z)
    assert np.array_equal(batched.signs, single.signs)
    batched.validate()


def test_batched_gates_reject_shared_sites():
    t = init_bell_pairs(6)
    with pytest.raises(InvalidArgument):
        apply_cnots(t, [0, 2], [1, 2])
    with pytest.raises(InvalidArgument):
        apply_swaps(t, [0, 1], [3, 0])
    with pytest.raises(InvalidArgument):
        apply_cnots(t, [0, 2], [1])


def test_site_out_of_range():
    with pytest.raises(InvalidArgument):
        apply_swap(init_bell_pairs(2), 0, 2)


def test_swap():
    t = StabilizerTableau.from_labels(["XI", "IZ"])
    apply_swap(t, 0, 1)
    assert t.labels() == ["+IX", "+ZI"]

    bell = init_bell_pairs(2)
    apply_swap(bell, 0, 1)
    assert bell.labels() == ["+XX", "+ZZ"]


def test_swap_is_an_involution(rng):
    t = init_bell_pairs(6)
    apply_cnot(t, 1, 2)
    apply_cnot(t, 4, 3)
    before = t.copy()
    apply_swap(t, 2, 5)
    apply_swap(t, 2, 5)
    assert t.labels() == before.labels()


def test_measure_deterministic_outcome(rng):
    t = init_product_state(2)
    _, outcome = measure_pauli(t, PauliRow.from_label("ZI"), rng)
    assert outcome == 1
    assert t.labels() == ["+ZI", "+IZ"]


def test_measure_deterministic_negative_outcome(rng):
    t = StabilizerTableau.from_labels(["-ZZ", "XX"])
    _, outcome = measure_pauli(t, PauliRow.from_label("ZZ"), rng)
    assert outcome == -1
    assert measurement_outcome(t, PauliRow.from_label("YY")) == 1


def test_measure_one_half_of_bell_pair(rng):
    t = init_bell_pairs(2)
    _, outcome = measure_pauli(t, PauliRow.from_label("ZI"), rng)
    assert outcome in (1, -1)
    assert entanglement_entropy(t, [0]) == 0
    assert measurement_outcome(t, PauliRow.from_label("ZI")) == outcome
    assert measurement_outcome(t, PauliRow.from_label("ZZ")) == 1
    t.validate()


def test_measure_matches_dense_projection(rng):
    t = init_bell_pairs(2)
    _, outcome = measure_pauli(t, PauliRow.from_label("ZI"), rng)
    psi, _ = oracle.measure(oracle.bell_pairs_state(2), oracle.pauli_matrix("ZI"), rng, outcome=outcome)
    for label in t.labels():
        assert oracle.stabilizer_expectation(psi, label) == pytest.approx(1.0)


def test_repeated_measurement_is_stable(rng):
    t = init_bell_pairs(4)
    op = PauliRow.from_label("IXZI")
    _, first = measure_pauli(t, op, rng)
    snapshot = t.labels()
    _, second = measure_pauli(t, op, rng)
    assert second == first
    assert t.labels() == snapshot


def test_unresolved_deterministic_measurement_reports_zero(rng):
    t = init_product_state(2)
    _, outcome = measure_pauli(t, PauliRow.from_label("ZI"), rng, resolve_outcome=False)
    assert outcome == 0


def test_bell_measurement_disentangles_pair(rng):
    t = init_bell_pairs(4)
    apply_cnot(t, 1, 2)
    apply_swap(t, 0, 3)
    measure_bell_pair(t, 1, 2, rng)
    assert entanglement_entropy(t, [1, 2]) == 0
    t.validate()


def test_bell_measurement_on_bell_pair_keeps_state(rng):
    t = init_bell_pairs(2)
    before = t.copy()
    measure_bell_pair(t, 0, 1, rng)
    assert t.same_state(before)


def test_bell_measurement_on_product_pair(rng):
    t = init_product_state(2)
    measure_bell_pair(t, 0, 1, rng)
    assert measurement_outcome(t, PauliRow.from_label("XX")) in (1, -1)
    assert measurement_outcome(t, PauliRow.from_label("ZZ")) == 1


def test_entropies():
    t = init_bell_pairs(4)
    assert entanglement_entropy(t, [0]) == 1
    assert entanglement_entropy(t, [0, 1]) == 0
    assert entanglement_entropy(t, [1, 2]) == 2
    assert entanglement_entropy(t, range(4)) == 0
    assert entanglement_entropy(t, []) == 0
    assert entropy_profile(t) == [0, 1, 0, 1, 0]


def test_I2_of_pairs_nested_in_thirds():
    assert mutual_information_I2(init_bell_pairs(6)) == 0
    assert mutual_information_I2(init_product_state(6)) == 0


def test_I2_of_pair_straddling_outer_thirds():
    t = StabilizerTableau.from_labels(["XIIIIX", "ZIIIIZ", "IZIIII", "IIZIII", "IIIZII", "IIIIZI"])
    assert mutual_information_I2(t) == 2


def test_thirds():
    assert thirds(6) == (range(0, 2), range(2, 4), range(4, 6))
    with pytest.raises(InvalidArgument):
        thirds(8)


def test_pauli_labels():
    row = PauliRow.on_sites(4, {1: "Y", 3: "Z"}, sign=-1)
    assert row.to_label() == "-IYIZ"
    with pytest.raises(InvalidArgument):
        PauliRow.from_label("XQ")


def test_from_rows_requires_square_tableau():
    with pytest.raises(InvalidArgument):
        StabilizerTableau.from_labels(["XX"])


def test_entropies_match_dense_oracle(rng):
    assert oracle.stabilizer_suite(40, rng) == []
