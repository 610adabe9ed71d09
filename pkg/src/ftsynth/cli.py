"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 data error, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import re
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import bench
from .canondb import DEFAULT_LPRIME, DEFAULT_MAX_ENTRIES, DbBudgetExceeded, DbError, build_canon_db, load_db, save_db
from .gateset import SequenceParseError
from .search import SearchBudgetError, enumerate_candidates, search_optimal
from .unitary import NonUnitaryError, Unitary2, from_euler

log = logging.getLogger("ftsynth")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BUDGET = 0, 2, 3, 4
COMMANDS = ("build-db", "approx", "verify-fixtures", "bench-phase", "bench-random")


class TargetParseError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    db: Optional[str] = None
    lmax: int = 15
    lprime: int = DEFAULT_LPRIME
    target: Optional[str] = None
    seed: int = 0
    n_targets: int = bench.DESK_TARGETS
    out: Optional[str] = None
    shards: Optional[int] = None
    max_entries: int = DEFAULT_MAX_ENTRIES
    ds: tuple = tuple(range(1, 11))
    fit_range: Optional[tuple] = None
    json_fit: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.command != "build-db" and self.command != "verify-fixtures" and self.lprime < 1:
            raise ValueError("lprime must be >= 1 for search commands")
        if self.command == "approx" and not self.target:
            raise ValueError("approx needs exactly one --target")

    def header(self) -> str:
        shards = self.shards if self.shards is not None else os.cpu_count() or 1
        fields = {
            "command": self.command, "db": self.db, "lmax": self.lmax, "lprime": self.lprime,
            "target": self.target, "seed": self.seed, "n_targets": self.n_targets,
            "out": self.out, "shards": shards,
        }
        return "# " + " ".join(f"{k}={v}" for k, v in fields.items())


def _float(field: str, text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise TargetParseError(f"{field}: not a number: {text!r}") from None
    if not math.isfinite(x):
        raise TargetParseError(f"{field}: not finite: {text!r}")
    return x


def parse_target(spec: str) -> Unitary2:
    """Parse ``R:d=<int>``, ``R:phi=<float>``, ``euler:<a>,<b>,<t>`` or ``mat:<8 floats>``.

    ``mat`` takes row-major (re, im) pairs separated by commas.
    """
    spec = spec.strip()
    m = re.fullmatch(r"R:d=(.+)", spec)
    if m:
        try:
            d = int(m.group(1))
        except ValueError:
            raise TargetParseError(f"d: not an integer: {m.group(1)!r}") from None
        if d < 1:
            raise TargetParseError(f"d: must be >= 1, got {d}")
        return bench.phase_target(d=d)
    m = re.fullmatch(r"R:phi=(.+)", spec)
    if m:
        return bench.phase_target(phi=_float("phi", m.group(1)))
    if spec.startswith("euler:"):
        vals = spec[len("euler:"):].split(",")
        if len(vals) != 3:
            raise TargetParseError(f"euler: expected 3 angles, got {len(vals)}")
        a, b, t = (_float(name, v) for name, v in zip(("alpha", "beta", "theta"), vals))
        return from_euler(a, b, t)
    if spec.startswith("mat:"):
        vals = spec[len("mat:"):].split(",")
        if len(vals) != 8:
            raise TargetParseError(f"mat: expected 8 floats, got {len(vals)}")
        x = [_float(f"mat[{i}]", v) for i, v in enumerate(vals)]
        m2 = np.array([[complex(x[0], x[1]), complex(x[2], x[3])], [complex(x[4], x[5]), complex(x[6], x[7])]])
        try:
            return Unitary2.from_matrix(m2, tol=1e-9)
        except NonUnitaryError as exc:
            raise TargetParseError(f"mat: {exc}") from None
    raise TargetParseError(f"unrecognised target spec {spec!r}")


def _get_db(cfg: RunConfig):
    if cfg.db and os.path.exists(cfg.db):
        db = load_db(cfg.db)
        cfg.lprime = db.lprime
        return db
    log.warning("no db file at %s; building depth %d in memory", cfg.db, cfg.lprime)
    return build_canon_db(cfg.lprime, cfg.max_entries)


def _write_records(cfg: RunConfig, records) -> None:
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            bench.write_csv(records, fh)
    else:
        bench.write_csv(records, sys.stdout)


def run(cfg: RunConfig) -> int:
    if cfg.command in ("build-db", "verify-fixtures"):
        print(cfg.header())
    if cfg.command == "build-db":
        db = build_canon_db(cfg.lprime, cfg.max_entries)
        out = cfg.out or cfg.db or f"q{cfg.lprime}.gfdb"
        save_db(db, out)
        counts = " ".join(f"{k}:{v}" for k, v in db.counts_by_length().items())
        print(f"entries={len(db)} lprime={db.lprime} path={out} per_length={counts}")
        return EXIT_OK

    if cfg.command == "verify-fixtures":
        ok = True
        for name in bench.FIXTURES:
            rep = bench.verify_fixture(name)
            print(rep.line())
            ok &= rep.passed
        return EXIT_OK if ok else EXIT_DATA

    target = parse_target(cfg.target) if cfg.command == "approx" else None
    db = _get_db(cfg)
    print(cfg.header())
    if cfg.command == "approx":
        res = search_optimal(target, cfg.lmax, db, shards=cfg.shards)
        print(res.summary())
        return EXIT_OK

    if cfg.command == "bench-phase":
        records = bench.phase_experiment(cfg.ds, cfg.lmax, db, shards=cfg.shards)
        _write_records(cfg, records)
        for d in cfg.ds:
            last = [r for r in records if r.target == f"R:d={d}"][-1]
            print(f"R:d={d} lmax={cfg.lmax} dist={last.dist:.6e} t_count={last.t_count}", file=sys.stderr)
        return EXIT_OK

    if cfg.command == "bench-random":
        cands = enumerate_candidates(cfg.lmax, db, cfg.shards)
        records, fit = bench.scaling_experiment(
            cfg.n_targets, cfg.lmax, db, cfg.seed, fit_range=cfg.fit_range, candidates=cands
        )
        _write_records(cfg, records)
        summary = (
            f"fit a={fit.a:.6g} b={fit.b:.6g} l_range={fit.l_range[0]}..{fit.l_range[1]} "
            f"targets={fit.sample_count} residual={fit.residual:.3g} visited={cands.visited}"
        )
        print(summary, file=sys.stderr if not cfg.out else sys.stdout)
        if cfg.json_fit:
            print(fit.to_json())
        return EXIT_OK
    raise AssertionError(cfg.command)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ftsynth", description="Optimal Clifford+T approximations of single-qubit gates.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, search=True):
        sp.add_argument("--lprime", type=int, default=DEFAULT_LPRIME, help="canonical db depth (default %(default)s)")
        sp.add_argument("--max-entries", type=int, default=DEFAULT_MAX_ENTRIES, help="db size budget")
        if search:
            sp.add_argument("--db", help="canonical db file; built in memory if absent")
            sp.add_argument("--lmax", type=int, default=15, help="maximum sequence length (default %(default)s)")
            sp.add_argument("--shards", type=int, default=None, help="worker processes (default: all cores)")

    sp = sub.add_parser("build-db", help="build and save the canonical sequence db")
    common(sp, search=False)
    sp.add_argument("--out", help="output path (default q<lprime>.gfdb)")

    sp = sub.add_parser("approx", help="optimal approximation of one target")
    common(sp)
    sp.add_argument("--target", required=True, help="R:d=7 | R:phi=0.1 | euler:a,b,t | mat:8 floats")

    sub.add_parser("verify-fixtures", help="check the published R_128 sequences")

    sp = sub.add_parser("bench-phase", help="convergence curves for R_{2^d}")
    common(sp)
    sp.add_argument("--d", type=int, nargs="+", default=list(range(1, 11)), help="exponents d (default 1..10)")
    sp.add_argument("--out", help="CSV path (default stdout)")

    sp = sub.add_parser("bench-random", help="random-target scaling experiment")
    common(sp)
    sp.add_argument("--n", type=int, default=bench.DESK_TARGETS, dest="n_targets", help="number of targets")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--fit-range", type=int, nargs=2, metavar=("LO", "HI"), help="l range of the fit")
    sp.add_argument("--out", help="CSV path (default stdout)")
    sp.add_argument("--json", action="store_true", dest="json_fit", help="print the fit as JSON")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    kw = {k: v for k, v in vars(ns).items() if k not in ("verbose", "d")}
    if getattr(ns, "d", None) is not None:
        kw["ds"] = tuple(ns.d)
    if kw.get("fit_range") is not None:
        kw["fit_range"] = tuple(kw["fit_range"])
    return RunConfig(**kw)


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(ns)
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return run(cfg)
    except (DbBudgetExceeded, SearchBudgetError) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (DbError, TargetParseError, SequenceParseError, NonUnitaryError, bench.FixtureError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
