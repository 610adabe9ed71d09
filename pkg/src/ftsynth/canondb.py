"""Database of canonical gate sequences.

A sequence is canonical when it is the first sequence, in the total order
below, that realises its operator (modulo phase) among all sequences no
longer than the database depth.  The order puts shorter sequences first and
compares equal-length sequences lexicographically in reading order, so the
leftmost (last-applied) gate is the most significant digit.

Every contiguous piece of a canonical sequence is canonical, which gives two
things: the build only has to extend canonical sequences, and the search can
discard any candidate with a non-canonical window.
"""

from __future__ import annotations

import bisect
import hashlib
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .gateset import N_GATES, PARTS, GateSeq, t_count
from .unitary import UNIQUE_EPS, _canon_parts, _pivot, dist8, insert_key, mul8, probe_keys

log = logging.getLogger(__name__)

MAGIC = b"GFDB"
FORMAT_VERSION = 1
DEFAULT_LPRIME = 10
DEFAULT_MAX_ENTRIES = 5_000_000


class DbError(Exception):
    """Corrupt, truncated or incompatible database file."""


class DbBudgetExceeded(RuntimeError):
    def __init__(self, completed_length: int, db: "CanonDb", max_entries: int):
        super().__init__(
            f"canonical db exceeded {max_entries} entries while building length "
            f"{completed_length + 1}; lengths <= {completed_length} are complete"
        )
        self.completed_length = completed_length
        self.db = db


def seq_order_next(seq: Sequence[int], lmax: int) -> Optional[GateSeq]:
    """Successor of ``seq`` among all sequences of length <= ``lmax``.

    Returns ``None`` after the last sequence of length ``lmax``.
    """
    s = list(seq)
    p = len(s) - 1
    while p >= 0 and s[p] == N_GATES:
        s[p] = 1
        p -= 1
    if p >= 0:
        s[p] += 1
        return tuple(s)
    if len(s) >= lmax:
        return None
    return (1,) * (len(s) + 1)


def seq_key(seq: Sequence[int]) -> tuple:
    """Sort key realising the total order."""
    return (len(seq), tuple(seq))


@dataclass
class CanonDb:
    """Canonical sequences up to length ``lprime`` in order.

    ``parts`` holds the phase-canonicalized matrix of each entry as 8 doubles.
    """

    lprime: int
    entries: list = field(default_factory=list)
    parts: list = field(default_factory=list)

    def __post_init__(self):
        self._index()

    def _index(self) -> None:
        self.t_counts = [t_count(s) for s in self.entries]
        self._by_len: dict[int, list] = {}
        for s in self.entries:
            self._by_len.setdefault(len(s), []).append(s)
        self._sets = {k: set(v) for k, v in self._by_len.items()}
        self._id = {s: i for i, s in enumerate(self.entries)}

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CanonDb):
            return NotImplemented
        return (self.lprime, self.entries, self.parts) == (other.lprime, other.entries, other.parts)

    def counts_by_length(self) -> dict:
        return {k: len(self._by_len.get(k, ())) for k in range(self.lprime + 1)}

    def of_length(self, k: int) -> list:
        return self._by_len.get(k, [])

    def window_set(self, k: int) -> set:
        return self._sets.get(k, set())

    def index_of(self, seq: Sequence[int]) -> Optional[int]:
        return self._id.get(tuple(seq))


def build_canon_db(lprime: int = DEFAULT_LPRIME, max_entries: int = DEFAULT_MAX_ENTRIES) -> CanonDb:
    """Construct the canonical set by ordered first-come deduplication.

    Only extensions ``P + (g,)`` of canonical ``P`` are tested: a sequence
    whose application-order prefix is not canonical has an earlier twin and
    would be rejected anyway, so the result matches testing every sequence.
    Candidates of each length are produced in order (``P`` ascending, then
    ``g``), and a candidate is kept iff no earlier entry lies within
    ``UNIQUE_EPS`` of it.
    """
    if lprime < 0:
        raise ValueError("lprime must be >= 0")
    ident = PARTS[0]
    entries: list = [()]
    raw: list = [ident]
    canon: list = [_canon_parts(ident, _pivot(ident))]
    buckets: dict[int, list] = {insert_key(ident): [0]}
    prev = [0]
    for k in range(1, lprime + 1):
        start = len(entries)
        layer = []
        for pid in prev:
            pseq, pu = entries[pid], raw[pid]
            for g in range(1, N_GATES + 1):
                u = mul8(pu, PARTS[g])
                if _lookup(u, buckets, canon):
                    continue
                eid = len(entries)
                entries.append(pseq + (g,))
                raw.append(u)
                cp = _canon_parts(u, _pivot(u))
                canon.append(cp)
                buckets.setdefault(insert_key(u), []).append(eid)
                layer.append(eid)
                if len(entries) > max_entries:
                    partial = CanonDb(k - 1, entries[:start], canon[:start])
                    raise DbBudgetExceeded(k - 1, partial, max_entries)
        log.info("canonical sequences of length %d: %d (total %d)", k, len(layer), len(entries))
        prev = layer
    return CanonDb(lprime, entries, canon)


def _lookup(u, buckets: dict, canon: list) -> bool:
    for key in probe_keys(u):
        ids = buckets.get(key)
        if not ids:
            continue
        cand = [canon[i] for i in ids]
        d = dist8([[x] for x in u], [np.array(c) for c in zip(*cand)])
        if np.any(d < UNIQUE_EPS):
            return True
    return False


def is_canonical(seq: Sequence[int], db: CanonDb) -> bool:
    if len(seq) > db.lprime:
        raise ValueError(f"sequence length {len(seq)} exceeds db depth {db.lprime}")
    return tuple(seq) in db.window_set(len(seq))


def canon_successor(sub: Sequence[int], db: CanonDb) -> Optional[GateSeq]:
    """First entry of the same length strictly after ``sub``, else ``None``.

    ``sub`` may be any sequence of length 1..lprime, canonical or not.
    """
    k = len(sub)
    if not 1 <= k <= db.lprime:
        raise ValueError(f"window length {k} outside 1..{db.lprime}")
    layer = db.of_length(k)
    i = bisect.bisect_right(layer, tuple(sub))
    return layer[i] if i < len(layer) else None


def save_db(db: CanonDb, path) -> None:
    """Write the little-endian ``GFDB`` file with a trailing checksum."""
    buf = bytearray()
    buf += MAGIC
    buf += struct.pack("<HHQ", FORMAT_VERSION, db.lprime, len(db.entries))
    for seq, p in zip(db.entries, db.parts):
        buf += struct.pack("<B", len(seq))
        buf += bytes(seq)
        buf += struct.pack("<8d", *p)
    buf += _checksum(bytes(buf))
    Path(path).write_bytes(bytes(buf))


def _checksum(payload: bytes) -> bytes:
    return hashlib.blake2b(payload, digest_size=8).digest()


def load_db(path) -> CanonDb:
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != MAGIC:
        raise DbError(f"{path}: bad magic, not a GFDB file")
    if len(data) < 24:
        raise DbError(f"{path}: truncated header")
    body, check = data[:-8], data[-8:]
    if _checksum(body) != check:
        raise DbError(f"{path}: checksum mismatch (file truncated or corrupt)")
    version, lprime, count = struct.unpack_from("<HHQ", body, 4)
    if version != FORMAT_VERSION:
        raise DbError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    off = 16
    entries, parts = [], []
    try:
        for _ in range(count):
            (n,) = struct.unpack_from("<B", body, off)
            off += 1
            entries.append(tuple(body[off:off + n]))
            off += n
            parts.append(struct.unpack_from("<8d", body, off))
            off += 64
    except struct.error as exc:
        raise DbError(f"{path}: truncated entry table") from exc
    if off != len(body):
        raise DbError(f"{path}: {len(body) - off} trailing bytes after {count} entries")
    return CanonDb(lprime, entries, parts)
