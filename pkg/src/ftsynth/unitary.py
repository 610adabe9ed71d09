"""Single-qubit unitaries, the phase-blind distance, and phase canonicalization.

A :class:`Unitary2` stores the 2x2 matrix ``[[a, b], [c, d]]`` as eight
doubles ``(a.re, a.im, b.re, b.im, c.re, c.im, d.re, d.im)``.  All
arithmetic goes through :func:`mul8` and :func:`dist8`, which are written
with plain real multiplies and adds so that the same code run on Python
floats or on numpy arrays gives bit-identical results.  The search relies on
that: a sequence evaluated alone and the same sequence evaluated inside a
batch must score exactly the same distance.
"""

from __future__ import annotations

import cmath
import hashlib
import math
import struct
from typing import Iterable, Sequence

import numpy as np

UNITARITY_TOL = 1e-12
#: two unitaries are the same operator iff their distance is below this
UNIQUE_EPS = 1e-10
#: quantization grid for hash keys
HASH_GRID = 1e-6
# slack used when deciding which buckets an equal unitary may sit in
_PROBE_SLACK = 1e-9
_PIVOT_MODULUS = 0.5

TWO_PI = 2.0 * math.pi


class NonUnitaryError(ValueError):
    """Raised when raw entries do not form a unitary matrix."""


def mul8(x, y):
    """Product ``x @ y`` of two matrices in 8-component form.

    Works element-wise on floats or equally shaped numpy arrays.
    """
    ar, ai, br, bi, cr, ci, dr, di = x
    er, ei, fr, fi, gr, gi, hr, hi = y
    return (
        (ar * er - ai * ei) + (br * gr - bi * gi),
        (ar * ei + ai * er) + (br * gi + bi * gr),
        (ar * fr - ai * fi) + (br * hr - bi * hi),
        (ar * fi + ai * fr) + (br * hi + bi * hr),
        (cr * er - ci * ei) + (dr * gr - di * gi),
        (cr * ei + ci * er) + (dr * gi + di * gr),
        (cr * fr - ci * fi) + (dr * hr - di * hi),
        (cr * fi + ci * fr) + (dr * hi + di * hr),
    )


def dist8(u, v) -> np.ndarray:
    """Vectorised distance between ``u`` and ``v`` (8-component form).

    ``sqrt((2 - |tr(u^dag v)|) / 2)`` equals ``min_phi ||u - e^{i phi} v||_F / 2``
    for unitary inputs.  The second form is evaluated because it does not
    cancel catastrophically near zero: rounding-level differences give
    distances near 1e-16 instead of near 1e-8.
    """
    u = [np.asarray(p, dtype=np.float64) for p in u]
    v = [np.asarray(p, dtype=np.float64) for p in v]
    tr_re = (u[0] * v[0] + u[1] * v[1]) + (u[2] * v[2] + u[3] * v[3])
    tr_re = tr_re + ((u[4] * v[4] + u[5] * v[5]) + (u[6] * v[6] + u[7] * v[7]))
    tr_im = (u[0] * v[1] - u[1] * v[0]) + (u[2] * v[3] - u[3] * v[2])
    tr_im = tr_im + ((u[4] * v[5] - u[5] * v[4]) + (u[6] * v[7] - u[7] * v[6]))
    mod = np.sqrt(tr_re * tr_re + tr_im * tr_im)
    zero = mod == 0.0
    safe = np.where(zero, 1.0, mod)
    zr = np.where(zero, 1.0, tr_re / safe)
    zi = np.where(zero, 0.0, -tr_im / safe)
    acc = 0.0
    for k in range(0, 8, 2):
        vr, vi = v[k], v[k + 1]
        dr = u[k] - (zr * vr - zi * vi)
        di = u[k + 1] - (zr * vi + zi * vr)
        acc = acc + (dr * dr + di * di)
    d = np.sqrt(acc) * 0.5
    return np.minimum(np.where(zero, 1.0, d), 1.0)


class Unitary2:
    """Immutable 2x2 unitary, compared modulo global phase."""

    __slots__ = ("_p",)

    def __init__(self, a: complex, b: complex, c: complex, d: complex, *, check: bool = True):
        parts = (
            float(a.real), float(a.imag), float(b.real), float(b.imag),
            float(c.real), float(c.imag), float(d.real), float(d.imag),
        )
        object.__setattr__(self, "_p", parts)
        if check:
            self._validate(UNITARITY_TOL)

    @classmethod
    def from_parts(cls, parts: Iterable[float], *, check: bool = False) -> "Unitary2":
        p = tuple(float(x) for x in parts)
        if len(p) != 8:
            raise ValueError(f"expected 8 real components, got {len(p)}")
        u = cls.__new__(cls)
        object.__setattr__(u, "_p", p)
        if check:
            u._validate(UNITARITY_TOL)
        return u

    @classmethod
    def from_matrix(cls, m, *, tol: float = UNITARITY_TOL) -> "Unitary2":
        m = np.asarray(m, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
        u = cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1], check=False)
        u._validate(tol)
        return u

    @classmethod
    def identity(cls) -> "Unitary2":
        return cls.from_parts((1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0))

    def __setattr__(self, name, value):
        raise AttributeError("Unitary2 is immutable")

    def _validate(self, tol: float) -> None:
        m = self.to_array()
        err = np.max(np.abs(m.conj().T @ m - np.eye(2)))
        if not err <= tol:
            raise NonUnitaryError(f"matrix is not unitary: max |U^dag U - I| = {err:.3g}")
        if not abs(abs(np.linalg.det(m)) - 1.0) <= 1e-9:
            raise NonUnitaryError("matrix does not have |det| = 1")

    @property
    def parts(self) -> tuple:
        return self._p

    @property
    def a(self) -> complex:
        return complex(self._p[0], self._p[1])

    @property
    def b(self) -> complex:
        return complex(self._p[2], self._p[3])

    @property
    def c(self) -> complex:
        return complex(self._p[4], self._p[5])

    @property
    def d(self) -> complex:
        return complex(self._p[6], self._p[7])

    def to_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def __matmul__(self, other: "Unitary2") -> "Unitary2":
        if not isinstance(other, Unitary2):
            return NotImplemented
        return Unitary2.from_parts(mul8(self._p, other._p))

    def dagger(self) -> "Unitary2":
        ar, ai, br, bi, cr, ci, dr, di = self._p
        return Unitary2.from_parts((ar, -ai, cr, -ci, br, -bi, dr, -di))

    def with_phase(self, phi: float) -> "Unitary2":
        z = cmath.exp(1j * phi)
        return Unitary2(z * self.a, z * self.b, z * self.c, z * self.d, check=False)

    def unitarity_error(self) -> float:
        m = self.to_array()
        return float(np.max(np.abs(m.conj().T @ m - np.eye(2))))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Unitary2):
            return NotImplemented
        return self._p == other._p

    def __hash__(self) -> int:
        return hash(self._p)

    def __repr__(self) -> str:
        return f"Unitary2([[{self.a:.6g}, {self.b:.6g}], [{self.c:.6g}, {self.d:.6g}]])"


def distance(u: Unitary2, v: Unitary2) -> float:
    """Global-phase-invariant distance ``sqrt((2 - |tr(u^dag v)|) / 2)``.

    This is the m-dimensional metric specialised to m = 2.  Symmetric, in
    [0, 1], and zero exactly when ``u`` and ``v`` differ by a phase.
    """
    return float(dist8([[x] for x in u.parts], [[x] for x in v.parts])[0])


def distances(target: Unitary2, parts: Sequence[np.ndarray]) -> np.ndarray:
    """Distances from ``target`` to a batch given as 8 component arrays."""
    return dist8(target.parts, parts)


def triangle_check(u: Unitary2, v: Unitary2, w: Unitary2) -> bool:
    return distance(u, w) <= distance(u, v) + distance(v, w) + 1e-12


def phase_canonicalize(u: Unitary2) -> Unitary2:
    """Remove the global phase so the pivot entry is real and positive.

    The pivot is the first entry in row-major order with modulus above 0.5;
    one of ``a`` and ``b`` always qualifies.
    """
    return Unitary2.from_parts(_canon_parts(u.parts, _pivot(u.parts)))


def _pivot(p) -> int:
    return 0 if math.hypot(p[0], p[1]) > _PIVOT_MODULUS else 2


def _canon_parts(p, pivot: int):
    pr, pi = p[pivot], p[pivot + 1]
    m = math.hypot(pr, pi)
    zr, zi = pr / m, -pi / m
    out = []
    for k in range(0, 8, 2):
        xr, xi = p[k], p[k + 1]
        out.append(zr * xr - zi * xi)
        out.append(zr * xi + zi * xr)
    out[pivot + 1] = 0.0
    return tuple(out)


def _key_from_cells(cells) -> int:
    digest = hashlib.blake2b(struct.pack("<8q", *cells), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def hash_key(u: Unitary2) -> int:
    """64-bit bucket key of a phase-canonicalized unitary.

    Each real component is floored onto a grid of width ``HASH_GRID``.  Key
    equality is only a hint: membership must be confirmed with
    :func:`distance` (see :func:`probe_keys`).
    """
    return _key_from_cells([math.floor(x / HASH_GRID) for x in u.parts])


def insert_key(p) -> int:
    """Bucket key under which raw parts ``p`` are stored."""
    return _key_from_cells([math.floor(x / HASH_GRID) for x in _canon_parts(p, _pivot(p))])


def probe_keys(p) -> list[int]:
    """Every bucket that may hold a unitary within ``UNIQUE_EPS`` of ``p``.

    Both pivot choices are tried when ``|a|`` sits near the pivot threshold,
    and both neighbouring cells are tried for any component near a grid line.
    """
    am = math.hypot(p[0], p[1])
    pivots = []
    if am > _PIVOT_MODULUS - _PROBE_SLACK:
        pivots.append(0)
    if am <= _PIVOT_MODULUS + _PROBE_SLACK:
        pivots.append(2)
    keys = []
    for pivot in pivots:
        options = []
        for x in _canon_parts(p, pivot):
            lo = math.floor((x - _PROBE_SLACK) / HASH_GRID)
            hi = math.floor((x + _PROBE_SLACK) / HASH_GRID)
            options.append((lo,) if lo == hi else (lo, hi))
        cells = [[]]
        for opt in options:
            cells = [c + [o] for c in cells for o in opt]
        keys.extend(_key_from_cells(c) for c in cells)
    return keys


def from_euler(alpha: float, beta: float, theta: float) -> Unitary2:
    """Generic single-qubit gate from Euler-type angles.

    ``[[cos(t/2) e^{i(a+b)/2},  sin(t/2) e^{i(a-b)/2}],
    [-sin(t/2) e^{i(-a+b)/2}, cos(t/2) e^{i(-a-b)/2}]]`` with angles taken
    mod 2 pi.
    """
    alpha, beta, theta = (x % TWO_PI for x in (alpha, beta, theta))
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return Unitary2(
        c * cmath.exp(0.5j * (alpha + beta)),
        s * cmath.exp(0.5j * (alpha - beta)),
        -s * cmath.exp(0.5j * (-alpha + beta)),
        c * cmath.exp(0.5j * (-alpha - beta)),
    )


def phase_gate(phi: float) -> Unitary2:
    """``diag(1, e^{i phi})``."""
    return Unitary2(1.0, 0.0, 0.0, cmath.exp(1j * phi))
