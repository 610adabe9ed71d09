import cmath
import math

import numpy as np
import pytest

from ftsynth.gateset import (
    NAMES,
    T_GATE,
    SequenceParseError,
    build_group_table,
    evaluate,
    format_seq,
    gate_matrix,
    is_alternating,
    parse_compact,
    parse_seq,
    reduce_clifford_run,
    t_count,
)
from ftsynth.unitary import Unitary2, distance, phase_gate

r = 1 / math.sqrt(2)
H = np.array([[r, r], [r, -r]])
X = np.array([[0, 1], [1, 0]])
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1, -1])
S = np.diag([1, 1j])
Sd = np.diag([1, -1j])
T = np.diag([1, cmath.exp(1j * math.pi / 4)])

# hand transcription of the alphabet, independent of FACTORS
TABLE = [
    None, [H], [X], [Z], [S], [Sd], [X, H], [Z, H], [S, H], [Sd, H], [Z, X], [S, X], [Sd, X],
    [H, S], [H, Sd], [Z, X, H], [S, X, H], [Sd, X, H], [H, S, H], [H, Sd, H],
    [H, S, X], [H, Sd, X], [Sd, H, S], [S, H, Sd], [T],
]


def by_hand(i):
    m = np.eye(2)
    for f in TABLE[i]:
        m = m @ f
    return Unitary2.from_matrix(m)


def oracle_eval(seq):
    m = np.eye(2, dtype=complex)
    for g in seq:
        m = m @ by_hand(g).to_array()
    return Unitary2.from_matrix(m, tol=1e-9)


@pytest.mark.parametrize("i", range(1, 25))
def test_gate_matrix_matches_hand_products(i):
    assert distance(gate_matrix(i), by_hand(i)) < 1e-15


def test_gate_matrix_examples():
    np.testing.assert_allclose(gate_matrix(24).to_array(), np.diag([1, cmath.exp(1j * math.pi / 4)]), atol=1e-16)
    np.testing.assert_allclose(gate_matrix(3).to_array(), np.diag([1, -1]), atol=0)
    assert distance(gate_matrix(18), Unitary2.from_matrix(H @ S @ H)) < 1e-15


def test_operator_order_convention():
    # HSX: X acts first, then S, then H
    sx = S @ X
    assert distance(gate_matrix(20), Unitary2.from_matrix(H @ sx)) == pytest.approx(0, abs=1e-15)
    assert distance(gate_matrix(20), Unitary2.from_matrix(X @ S @ H)) > 0.1


def test_invalid_gate():
    with pytest.raises(ValueError):
        gate_matrix(25)
    with pytest.raises(ValueError):
        evaluate((0,))


def test_group_table_examples():
    tab = build_group_table()
    assert tab.product[4][4] == 3
    assert tab.product[1][1] == 0
    assert tab.inverse[4] == 5


def test_group_table_latin_square():
    tab = build_group_table()
    for i in range(24):
        assert sorted(tab.product[i]) == list(range(24))
        assert sorted(tab.product[j][i] for j in range(24)) == list(range(24))
        assert tab.product[0][i] == i == tab.product[i][0]


PAULIS = [np.eye(2), X, Y, Z]


@pytest.mark.parametrize("i", range(1, 24))
def test_clifford_maps_paulis_to_paulis(i):
    g = gate_matrix(i).to_array()
    for p in (X, Z):
        conj = Unitary2.from_matrix(g @ p @ g.conj().T)
        assert min(distance(conj, Unitary2.from_matrix(q)) for q in PAULIS) < 1e-12


def test_t_is_not_clifford():
    g = gate_matrix(24).to_array()
    conj = Unitary2.from_matrix(g @ X @ g.conj().T)
    assert min(distance(conj, Unitary2.from_matrix(q)) for q in PAULIS) > 0.1


def test_evaluate_examples():
    assert evaluate(()).parts == Unitary2.identity().parts
    assert distance(evaluate((T_GATE,) * 8), Unitary2.identity()) < 1e-15
    assert distance(evaluate((1, 24)), Unitary2.from_matrix(H @ T)) < 1e-15


def test_evaluate_matches_oracle(rng):
    for _ in range(200):
        seq = tuple(int(x) for x in rng.integers(1, 25, size=rng.integers(0, 30)))
        assert distance(evaluate(seq), oracle_eval(seq)) < 1e-12


def test_evaluate_unitarity_drift(rng):
    for _ in range(50):
        seq = tuple(int(x) for x in rng.integers(1, 25, size=64))
        assert evaluate(seq).unitarity_error() <= 1e-9


@pytest.mark.parametrize(
    "seq, expected",
    [((4, 5), ()), ((1, 4, 1), (18,)), ((24, 24), (4,)), ((3, 24, 24), (5,)), ((24, 4, 5, 24), (4,))],
)
def test_reduce_examples(seq, expected):
    out = reduce_clifford_run(seq)
    assert distance(evaluate(out), evaluate(seq)) < 1e-10
    assert out == expected


def test_reduce_random_property(rng):
    for _ in range(10_000):
        seq = tuple(int(x) for x in rng.integers(1, 25, size=rng.integers(0, 21)))
        out = reduce_clifford_run(seq)
        assert len(out) <= len(seq)
        assert is_alternating(out)
        assert distance(evaluate(out), evaluate(seq)) < 1e-10
        assert (t_count(seq) - t_count(out)) % 2 == 0


def test_reduce_keeps_t_count_without_tt_pairs(rng):
    for _ in range(2000):
        seq = [int(x) for x in rng.integers(1, 24, size=10)]
        # T gates separated by at least one Clifford never merge
        mixed = tuple(x for c in seq for x in (c, T_GATE))
        assert t_count(reduce_clifford_run(mixed)) == t_count(mixed)


def test_parse_and_format_roundtrip():
    for i in range(1, 25):
        assert parse_seq(NAMES[i]) == (i,)
        assert parse_seq(f"G{i}") == (i,)
    seq = (1, 24, 8, 24, 9)
    assert parse_seq(format_seq(seq)) == seq
    assert parse_seq("") == ()
    assert parse_seq("H S† H") == (1, 5, 1)


def test_parse_compact():
    assert parse_compact("HT(SH)T(S†H)") == (1, 24, 8, 24, 9)
    assert parse_compact("(HS†)T") == (14, 24)
    with pytest.raises(SequenceParseError):
        parse_compact("HT(SH")
    with pytest.raises(SequenceParseError):
        parse_seq("Q")
    with pytest.raises(SequenceParseError):
        parse_seq("G25")


def test_no_t_dagger_symbol():
    assert all("Td" not in n and "T†" not in n for n in NAMES.values())
    assert len(NAMES) == 24
    with pytest.raises(SequenceParseError):
        parse_seq("Td")


def test_t_dagger_two_gate_forms():
    tdg = phase_gate(-math.pi / 4)
    assert distance(evaluate((5, 24)), tdg) < 1e-15
    assert distance(evaluate((24, 5)), tdg) < 1e-15
