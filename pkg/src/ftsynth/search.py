"""Optimal approximation by ordered enumeration with window skipping.

Sequences are walked in the canonical-db order.  At each candidate every
contiguous window of length ``min(lprime, n)`` is looked up in the database,
starting from the most significant end.  When a window is not canonical the
candidate, and everything up to the next canonical value of that window,
has an earlier twin, so the walk jumps: the window is replaced by its
canonical successor and all less significant gates are reset to ``G1``.  If
the window has no successor the carry moves one position up.

The walk keeps a stack of prefix products, so a jump at position ``k``
only recomputes the products from ``k`` on.  Candidates that survive the
window checks are collected into a :class:`CandidateSet` and scored against
targets in bulk; one enumeration serves any number of targets.
"""

from __future__ import annotations

import logging
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .canondb import CanonDb, canon_successor
from .gateset import N_GATES, PARTS, T_GATE, GateSeq, format_seq
from .unitary import Unitary2, dist8, distances, mul8

log = logging.getLogger(__name__)

TIE_EPS = 1e-12
DESK_LMAX = 21
EXHAUSTIVE_CAP = 6
# the exhaustive oracle vectorises this many trailing positions at once
_BLOCK_DEPTH = 4


class SearchBudgetError(ValueError):
    pass


@dataclass
class SearchResult:
    best_seq: GateSeq
    best_dist: float
    t_count: int
    optima_count: int
    sequences_visited: int
    sequences_skipped: int
    wall_time: float

    def summary(self) -> str:
        return (
            f"dist={self.best_dist:.17g} length={len(self.best_seq)} t_count={self.t_count} "
            f"optima={self.optima_count} visited={self.sequences_visited} "
            f"skipped={self.sequences_skipped} seq=\"{format_seq(self.best_seq)}\""
        )


@dataclass
class ConvergenceRecord:
    target: str
    l: int
    dist: float
    seq: Optional[GateSeq] = None
    t_count: int = 0


@dataclass
class CandidateSet:
    """Sequences that passed every window check, in enumeration order.

    ``parts`` is an 8-row float array of the evaluated products; ``ends[l]``
    is the number of candidates of length <= l.
    """

    lmax: int
    lprime: int
    seqs: list
    parts: np.ndarray
    t_counts: np.ndarray
    ends: np.ndarray
    visited: int
    skipped: int
    wall_time: float

    def __len__(self) -> int:
        return len(self.seqs)

    def select(self, target: Unitary2, upto: Optional[int] = None, d: Optional[np.ndarray] = None):
        """Winner among candidates of length <= ``upto``.

        Returns ``(index, distance, optima_count)``: minimum distance, then
        fewest T gates among those within ``TIE_EPS`` of it, then earliest.
        """
        if d is None:
            d = distances(target, self.parts)
        end = len(self.seqs) if upto is None else int(self.ends[upto])
        return _select(d[:end], self.t_counts[:end])


def _select(d: np.ndarray, tc: np.ndarray):
    best = d.min()
    tie = np.flatnonzero(d <= best + TIE_EPS)
    ttie = tc[tie]
    idx = int(tie[np.argmax(ttie == ttie.min())])
    return idx, float(d[idx]), int(tie.size)


def _walk(g: int, n: int, db: CanonDb):
    """Visited sequences of length ``n`` with leading gate ``g``, in order.

    Returns parallel lists of sequences and their products.
    """
    w = min(db.lprime, n)
    wset = db.window_set(w)
    seqs, prods = [], []
    s = [g] + [1] * (n - 1)
    stack = [None] * n
    lo = 0  # lowest position changed since the last full window check
    plo = 0  # lowest position whose prefix product is stale
    while True:
        fail = -1
        for k in range(max(0, lo - w + 1), n - w + 1):
            if tuple(s[k:k + w]) not in wset:
                fail = k
                break
        if fail < 0:
            if plo == 0:
                stack[0] = PARTS[s[0]]
                plo = 1
            p = stack[plo - 1]
            for j in range(plo, n):
                p = mul8(p, PARTS[s[j]])
                stack[j] = p
            seqs.append(tuple(s))
            prods.append(stack[n - 1])
            q = n - 1
            while q > 0 and s[q] == N_GATES:
                s[q] = 1
                q -= 1
            if q == 0:
                break
            s[q] += 1
            lo = plo = q
            continue
        succ = canon_successor(s[fail:fail + w], db)
        if succ is not None and (fail > 0 or succ[0] == g):
            s[fail:fail + w] = succ
            s[fail + w:] = [1] * (n - fail - w)
            q = fail
        else:
            # window exhausted: carry into the next more significant gate
            if fail == 0:
                break
            s[fail:] = [1] * (n - fail)
            q = fail - 1
            while q > 0 and s[q] == N_GATES:
                s[q] = 1
                q -= 1
            if q == 0:
                break
            s[q] += 1
        lo = q
        plo = min(plo, q)
    return seqs, prods


def _walk_shard(g: int, lmax: int, db: CanonDb) -> dict:
    return {n: _walk(g, n, db) for n in range(1, lmax + 1)}


def _check_budget(db: CanonDb, lmax: int) -> None:
    if db.lprime < 1:
        raise ValueError("search needs a canonical db with lprime >= 1")
    if lmax < 0:
        raise ValueError("lmax must be >= 0")
    if lmax > DESK_LMAX:
        warnings.warn(
            f"lmax={lmax} is beyond the desk-scale default {DESK_LMAX}; runtime grows exponentially",
            RuntimeWarning,
            stacklevel=3,
        )


def enumerate_candidates(lmax: int, db: CanonDb, shards: Optional[int] = None) -> CandidateSet:
    """Run the skip walk up to length ``lmax``.

    The space is split by leading gate into 24 shards; with ``shards > 1``
    they run in worker processes.  Shard outputs are reassembled in the
    global order, so the result does not depend on ``shards``.
    """
    _check_budget(db, lmax)
    shards = os.cpu_count() or 1 if shards is None else shards
    t0 = time.perf_counter()
    gates = range(1, N_GATES + 1)
    if lmax == 0:
        results = {}
    elif shards <= 1:
        results = {g: _walk_shard(g, lmax, db) for g in gates}
    else:
        with ProcessPoolExecutor(max_workers=min(shards, N_GATES)) as pool:
            futs = {g: pool.submit(_walk_shard, g, lmax, db) for g in gates}
            results = {g: f.result() for g, f in futs.items()}

    seqs: list = [()]
    prods: list = [PARTS[0]]
    ends = [1]
    for n in range(1, lmax + 1):
        for g in gates:
            s, p = results[g][n]
            seqs.extend(s)
            prods.extend(p)
        ends.append(len(seqs))
    parts = np.array(prods, dtype=np.float64).T.copy()
    tcs = np.fromiter((s.count(T_GATE) for s in seqs), dtype=np.int64, count=len(seqs))
    total = sum(N_GATES**n for n in range(lmax + 1))
    wall = time.perf_counter() - t0
    log.info("enumerated lmax=%d lprime=%d: %d visited of %d in %.2fs", lmax, db.lprime, len(seqs), total, wall)
    return CandidateSet(
        lmax=lmax,
        lprime=db.lprime,
        seqs=seqs,
        parts=parts,
        t_counts=tcs,
        ends=np.array(ends),
        visited=len(seqs),
        skipped=total - len(seqs),
        wall_time=wall,
    )


@dataclass
class _Tie:
    """Candidates of one length within ``TIE_EPS`` of their chunk minimum."""

    d: np.ndarray
    t: np.ndarray
    keys: list  # (length, leading gate, index within the chunk) = global order
    seqs: list


def _chunk_ties(seqs, prods, n: int, g: int, targets) -> list:
    if not seqs:
        return [None] * len(targets)
    parts = np.array(prods, dtype=np.float64).T
    tcs = np.fromiter((s.count(T_GATE) for s in seqs), dtype=np.int64, count=len(seqs))
    out = []
    for tgt in targets:
        d = dist8(tgt, parts)
        idx = np.flatnonzero(d <= d.min() + TIE_EPS)
        out.append(_Tie(d[idx], tcs[idx], [(n, g, int(i)) for i in idx], [seqs[i] for i in idx]))
    return out


def _scan_shard(g: int, lmax: int, db: CanonDb, targets) -> dict:
    out = {}
    for n in range(1, lmax + 1):
        seqs, prods = _walk(g, n, db)
        out[n] = (len(seqs), _chunk_ties(seqs, prods, n, g, targets))
    return out


def _pick(ties: list):
    """Winner over a list of tie chunks: min distance, min T, earliest."""
    ties = [t for t in ties if t is not None]
    gmin = min(float(t.d.min()) for t in ties)
    best = None
    n_opt = 0
    for tie in ties:
        for d, t, key, seq in zip(tie.d, tie.t, tie.keys, tie.seqs):
            if d <= gmin + TIE_EPS:
                n_opt += 1
                cand = (int(t), key)
                if best is None or cand < best[0]:
                    best = (cand, float(d), seq)
    (t, _), d, seq = best
    return seq, d, t, n_opt


def scan(targets: Sequence[Unitary2], lmax: int, db: CanonDb, shards: Optional[int] = None):
    """Stream the skip walk, keeping only near-optimal candidates per target.

    Memory stays proportional to the tie sets rather than to the number of
    visited sequences, so budgets beyond what :class:`CandidateSet` can hold
    are reachable.  Returns ``(ties, visited)`` where ``ties[i][n]`` lists the
    tie chunks of target ``i`` at length ``n``.
    """
    _check_budget(db, lmax)
    shards = os.cpu_count() or 1 if shards is None else shards
    tparts = [t.parts for t in targets]
    gates = range(1, N_GATES + 1)
    if lmax == 0:
        results = {}
    elif shards <= 1:
        results = {g: _scan_shard(g, lmax, db, tparts) for g in gates}
    else:
        with ProcessPoolExecutor(max_workers=min(shards, N_GATES)) as pool:
            futs = {g: pool.submit(_scan_shard, g, lmax, db, tparts) for g in gates}
            results = {g: f.result() for g, f in futs.items()}
    ident = _chunk_ties([()], [PARTS[0]], 0, 0, tparts)
    ties = [[[ident[i]]] for i in range(len(targets))]
    visited = [1]
    for n in range(1, lmax + 1):
        visited.append(sum(results[g][n][0] for g in gates))
        for i in range(len(targets)):
            ties[i].append([results[g][n][1][i] for g in gates])
    return ties, visited


def search_optimal(
    target: Unitary2,
    lmax: int,
    db: CanonDb,
    *,
    shards: Optional[int] = None,
    candidates: Optional[CandidateSet] = None,
) -> SearchResult:
    """Closest sequence of at most ``lmax`` gates to ``target``.

    Ties within 1e-12 go to the fewest T gates, then to the earliest
    sequence.  ``optima_count`` counts the tied candidates the walk visited;
    equivalent rewrites that were skipped are not included.  Without a
    precomputed ``candidates`` set the walk is streamed.
    """
    t0 = time.perf_counter()
    total = sum(N_GATES**n for n in range(lmax + 1))
    if candidates is not None:
        if candidates.lmax < lmax:
            raise ValueError(f"candidate set covers lmax={candidates.lmax} < {lmax}")
        idx, d, n_opt = candidates.select(target, upto=lmax)
        seq, tc = candidates.seqs[idx], int(candidates.t_counts[idx])
        visited = int(candidates.ends[lmax])
    else:
        ties, per_len = scan([target], lmax, db, shards)
        seq, d, tc, n_opt = _pick([t for chunks in ties[0] for t in chunks])
        visited = sum(per_len)
    return SearchResult(
        best_seq=seq,
        best_dist=d,
        t_count=tc,
        optima_count=n_opt,
        sequences_visited=visited,
        sequences_skipped=total - visited,
        wall_time=time.perf_counter() - t0,
    )


def convergence_curve(
    target: Unitary2,
    lmax: int,
    db: CanonDb,
    *,
    label: str = "",
    shards: Optional[int] = None,
    candidates: Optional[CandidateSet] = None,
) -> list[ConvergenceRecord]:
    """Best distance for every budget ``l = 0 .. lmax`` from one enumeration."""
    records = []
    if candidates is not None:
        d = distances(target, candidates.parts)
        for l in range(lmax + 1):
            idx, dist, _ = candidates.select(target, upto=l, d=d)
            records.append(ConvergenceRecord(label, l, dist, candidates.seqs[idx], int(candidates.t_counts[idx])))
        return records
    ties, _ = scan([target], lmax, db, shards)
    acc: list = []
    for l in range(lmax + 1):
        acc.extend(ties[0][l])
        seq, dist, tc, _ = _pick(acc)
        records.append(ConvergenceRecord(label, l, dist, seq, tc))
    return records


def search_exhaustive(target: Unitary2, lmax: int) -> SearchResult:
    """Score every one of the ``24^0 + ... + 24^lmax`` sequences.

    Validation oracle only.  Uses the same product association and
    tie-breaking as :func:`search_optimal`.
    """
    if lmax > EXHAUSTIVE_CAP:
        raise SearchBudgetError(f"exhaustive search is capped at lmax={EXHAUSTIVE_CAP}, got {lmax}")
    if lmax < 0:
        raise ValueError("lmax must be >= 0")
    t0 = time.perf_counter()
    tgt = target.parts
    gparts = np.array(PARTS[1:], dtype=np.float64).T  # 8 x 24
    gate_is_t = np.zeros(N_GATES, dtype=np.int64)
    gate_is_t[T_GATE - 1] = 1

    # per block: tied distances, their t-counts and global order numbers
    kept = []
    best_so_far = np.inf
    order = 0
    for n in range(lmax + 1):
        r = min(n, _BLOCK_DEPTH)
        m = n - r
        for prefix in np.ndindex(*([N_GATES] * m)) if m else [()]:
            pre = tuple(x + 1 for x in prefix)
            parts = [np.array([x]) for x in PARTS[0]]
            for g in pre:
                parts = list(mul8(parts, [np.array([x]) for x in PARTS[g]]))
            tc = np.array([sum(1 for g in pre if g == T_GATE)], dtype=np.int64)
            for _ in range(r):
                parts = [
                    np.asarray(x).reshape(-1)
                    for x in mul8([p[:, None] for p in parts], [q[None, :] for q in gparts])
                ]
                tc = (tc[:, None] + gate_is_t[None, :]).reshape(-1)
            d = dist8(tgt, parts)
            bmin = d.min()
            if bmin <= best_so_far + TIE_EPS:
                tie = np.flatnonzero(d <= bmin + TIE_EPS)
                kept.append((d[tie], tc[tie], tie + order))
                best_so_far = min(best_so_far, bmin)
            order += d.size
    gmin = min(k[0].min() for k in kept)
    flat_d = np.concatenate([k[0] for k in kept])
    flat_t = np.concatenate([k[1] for k in kept])
    flat_o = np.concatenate([k[2] for k in kept])
    mask = flat_d <= gmin + TIE_EPS
    cand_t = flat_t[mask]
    cand_o = flat_o[mask]
    winner_o = int(cand_o[cand_t == cand_t.min()].min())
    seq = _seq_from_order(winner_o)
    d = float(flat_d[flat_o == winner_o][0])
    return SearchResult(
        best_seq=seq,
        best_dist=d,
        t_count=seq.count(T_GATE),
        optima_count=int(mask.sum()),
        sequences_visited=order,
        sequences_skipped=0,
        wall_time=time.perf_counter() - t0,
    )


def _seq_from_order(o: int) -> GateSeq:
    """Invert the global order number of a sequence."""
    n, base = 0, 0
    while base + N_GATES**n <= o:
        base += N_GATES**n
        n += 1
    rem = o - base
    digits = []
    for _ in range(n):
        digits.append(rem % N_GATES + 1)
        rem //= N_GATES
    return tuple(reversed(digits))
