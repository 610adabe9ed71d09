"""The 24-gate fault-tolerant alphabet, its Clifford group table, and sequences.

Gate ``G1 .. G23`` are single-qubit Cliffords built from H, X, Z, S and S^dag;
``G24`` is T.  Index 0 stands for the identity inside group-table contexts
and never appears in a sequence.

A sequence is a tuple of gate indices in reading order: ``(1, 24)`` is
``H T``, the matrix product ``H @ T``, so T acts first.  Compound names
follow the same operator convention, e.g. ``HSX = H @ S @ X``.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .unitary import UNIQUE_EPS, Unitary2, distance, mul8

T_GATE = 24
N_GATES = 24
IDENTITY = 0

GateSeq = tuple  # tuple[int, ...] in reading order

_R = 1 / math.sqrt(2)
_BASE = {
    "H": Unitary2(_R, _R, _R, -_R),
    "X": Unitary2(0, 1, 1, 0),
    "Z": Unitary2(1, 0, 0, -1),
    "S": Unitary2(1, 0, 0, 1j),
    "Sd": Unitary2(1, 0, 0, -1j),
    "T": Unitary2(1, 0, 0, cmath.exp(1j * math.pi / 4)),
}

# index -> factors, leftmost factor applied last
FACTORS = {
    1: ("H",), 2: ("X",), 3: ("Z",), 4: ("S",), 5: ("Sd",),
    6: ("X", "H"), 7: ("Z", "H"), 8: ("S", "H"), 9: ("Sd", "H"),
    10: ("Z", "X"), 11: ("S", "X"), 12: ("Sd", "X"),
    13: ("H", "S"), 14: ("H", "Sd"),
    15: ("Z", "X", "H"), 16: ("S", "X", "H"), 17: ("Sd", "X", "H"),
    18: ("H", "S", "H"), 19: ("H", "Sd", "H"),
    20: ("H", "S", "X"), 21: ("H", "Sd", "X"),
    22: ("Sd", "H", "S"), 23: ("S", "H", "Sd"),
    24: ("T",),
}
NAMES = {i: "".join(f) for i, f in FACTORS.items()}
_BY_NAME = {name: i for i, name in NAMES.items()}


class SequenceParseError(ValueError):
    pass


def _build_matrices() -> tuple:
    mats = [Unitary2.identity()]
    for i in range(1, N_GATES + 1):
        m = _BASE[FACTORS[i][0]]
        for f in FACTORS[i][1:]:
            m = m @ _BASE[f]
        mats.append(m)
    return tuple(mats)


_MATRICES = _build_matrices()
#: 8-component parts per index, 0 = identity
PARTS = tuple(m.parts for m in _MATRICES)


def gate_matrix(g: int) -> Unitary2:
    """Matrix of gate ``g`` (1..24); 0 gives the identity."""
    if not isinstance(g, int) or not 0 <= g <= N_GATES:
        raise ValueError(f"invalid gate index {g!r}")
    return _MATRICES[g]


def is_clifford(g: int) -> bool:
    return 1 <= g <= 23


def t_count(seq: Sequence[int]) -> int:
    return sum(1 for g in seq if g == T_GATE)


def evaluate(seq: Sequence[int]) -> Unitary2:
    """Matrix of a sequence; the last element in reading order acts first.

    Products are accumulated left to right, ``((G[s0] G[s1]) G[s2]) ...``,
    which is the association every search path uses.
    """
    if not seq:
        return Unitary2.identity()
    p = PARTS[_check(seq[0])]
    for g in seq[1:]:
        p = mul8(p, PARTS[_check(g)])
    return Unitary2.from_parts(p)


def _check(g) -> int:
    if not 1 <= g <= N_GATES:
        raise ValueError(f"invalid gate index {g!r} in sequence")
    return g


@dataclass(frozen=True)
class GroupTable:
    """Multiplication table of ``{I, G1 .. G23}`` modulo phase."""

    product: tuple  # product[i][j] = k with G_i G_j ~ G_k
    inverse: tuple

    def mul(self, i: int, j: int) -> int:
        return self.product[i][j]


class ClosureError(RuntimeError):
    pass


def build_group_table() -> GroupTable:
    elems = range(24)
    table = []
    for i in elems:
        row = []
        for j in elems:
            prod = _MATRICES[i] @ _MATRICES[j]
            hits = [k for k in elems if distance(prod, _MATRICES[k]) < UNIQUE_EPS]
            if len(hits) != 1:
                raise ClosureError(f"G{i}*G{j} matches {len(hits)} elements of the group")
            row.append(hits[0])
        table.append(tuple(row))
    inverse = []
    for i in elems:
        inv = [j for j in elems if table[i][j] == IDENTITY]
        if len(inv) != 1:
            raise ClosureError(f"G{i} has {len(inv)} inverses")
        inverse.append(inv[0])
    return GroupTable(tuple(table), tuple(inverse))


@lru_cache(maxsize=1)
def group_table() -> GroupTable:
    return build_group_table()


def reduce_clifford_run(seq: Sequence[int]) -> GateSeq:
    """Collapse adjacent Cliffords and ``T T`` pairs into alternation form.

    Runs of Cliffords multiply out through the group table (identity results
    vanish) and ``T T`` becomes S, which may merge further with its
    neighbours.  The result evaluates to the same operator modulo phase.
    """
    table = group_table()
    out: list[int] = []

    def push_clifford(c: int) -> None:
        if out and is_clifford(out[-1]):
            c = table.mul(out.pop(), c)
        if c != IDENTITY:
            out.append(c)

    for g in seq:
        _check(g)
        if g == T_GATE:
            if out and out[-1] == T_GATE:
                out.pop()
                push_clifford(4)
            else:
                out.append(T_GATE)
        else:
            push_clifford(g)
    return tuple(out)


def is_alternating(seq: Sequence[int]) -> bool:
    return all(
        not (is_clifford(x) and is_clifford(y)) and not (x == T_GATE and y == T_GATE)
        for x, y in zip(seq, seq[1:])
    )


def _token_to_gate(tok: str) -> int | None:
    t = tok.strip("()").replace("†", "d").replace("dg", "d")
    if not t:
        raise SequenceParseError(f"empty token in {tok!r}")
    if t == "I":
        return None
    m = re.fullmatch(r"G(\d+)", t)
    if m:
        g = int(m.group(1))
        if not 1 <= g <= N_GATES:
            raise SequenceParseError(f"gate index out of range: {tok!r}")
        return g
    if t in _BY_NAME:
        return _BY_NAME[t]
    raise SequenceParseError(f"unknown gate token {tok!r}")


def parse_seq(text: str) -> GateSeq:
    """Parse whitespace-separated tokens (``H``, ``SdH``, ``G17``, ``T`` ...).

    ``I`` tokens denote the identity and are dropped; an empty string is the
    empty sequence.
    """
    gates = [_token_to_gate(tok) for tok in text.split()]
    return tuple(g for g in gates if g is not None)


def parse_compact(text: str) -> GateSeq:
    """Parse the run-together form ``HTHT(SH)T(S†H)``.

    Outside parentheses every letter is one gate; a parenthesised group is a
    single alphabet element.
    """
    out = []
    s = re.sub(r"\s+", "", text)
    i = 0
    while i < len(s):
        ch = s[i]
        if ch == "(":
            j = s.find(")", i)
            if j < 0:
                raise SequenceParseError(f"unbalanced parenthesis at {i} in {text!r}")
            out.append(_token_to_gate(s[i + 1:j]))
            i = j + 1
        elif ch in "HXZST":
            tok = ch
            if ch == "S" and s[i + 1:i + 2] in ("†", "d"):
                tok, i = "Sd", i + 1
            out.append(_token_to_gate(tok))
            i += 1
        else:
            raise SequenceParseError(f"unexpected character {ch!r} at {i} in {text!r}")
    return tuple(out)


def format_seq(seq: Iterable[int]) -> str:
    return " ".join(NAMES[g] for g in seq)
