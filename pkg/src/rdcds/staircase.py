"""Staircase block structures, the re-encoding layer and the Cauchy generator.

All row and block numbers in this module are 1-based, matching the usual
notation for the construction; array slicing converts at the boundary.
Symbol arrays may carry trailing batch axes: a message of shape ``(L, *b)``
produces matrices of shape ``(rows, cols, *b)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import FieldTooSmall, ShapeMismatch
from .field import PrimeField
from .params import DerivedParams, SystemParams, derive


@dataclass(frozen=True)
class StaircaseProfile:
    """Shape of one staircase: heights, widths and where replicas come from."""

    total_rows: int
    r_base: int
    omega: int
    alpha: tuple
    beta: tuple
    gamma: tuple
    lam: tuple

    @property
    def G(self) -> int:
        return len(self.alpha) - 1

    @property
    def length(self) -> int:
        """Message length consumed by block 1."""
        return self.alpha[1] * self.gamma[1]

    @property
    def width(self) -> int:
        return self.lam[self.G]

    def cols(self, i: int) -> slice:
        return slice(self.lam[i - 1], self.lam[i])

    def source_row(self, i: int, j: int) -> int:
        """Row of block j that block i (> j) replicates."""
        return self.r_base + i - j


def outer_profile(d: DerivedParams) -> StaircaseProfile:
    return StaircaseProfile(d.beta[1], d.params.R_r, d.omega, d.alpha, d.beta, d.gamma, d.lam)


def inner_profile(d: DerivedParams) -> StaircaseProfile:
    p = d.params
    return StaircaseProfile(p.N - p.S, p.R_r - p.S, d.omega, d.alpha_p, d.beta_p, d.gamma_p, d.lam_p)


def reshape(v, rows: int, cols: int) -> np.ndarray:
    """Row-major fill of a symbol sequence into a rows x cols matrix."""
    v = np.asarray(v)
    if v.shape[0] != rows * cols:
        raise ShapeMismatch(f"cannot reshape {v.shape[0]} symbols into {rows}x{cols}")
    return v.reshape((rows, cols) + v.shape[1:])


def replicated_body(m: np.ndarray, prof: StaircaseProfile, i: int) -> np.ndarray:
    """Concatenate the rows of blocks 1..i-1 that feed block i."""
    parts = [m[prof.source_row(i, j) - 1, prof.cols(j)] for j in range(1, i)]
    return np.concatenate(parts, axis=0)


NoiseSpec = Sequence[np.ndarray] | Callable[[int, np.ndarray], np.ndarray]


def scgen(msg, noise: NoiseSpec, prof: StaircaseProfile) -> np.ndarray:
    """Build a staircase matrix (total_rows x width) from a message and noise.

    ``noise`` is either a sequence of Omega x gamma_i blocks or a callable
    ``noise(i, body)`` that receives block i's message rows and returns its
    noise rows; the callable form lets noise depend on the block contents.
    """
    msg = np.asarray(msg, dtype=np.int64)
    if msg.shape[0] != prof.length:
        raise ShapeMismatch(f"message has {msg.shape[0]} symbols, profile needs {prof.length}")
    batch = msg.shape[1:]
    out = np.zeros((prof.total_rows, prof.width) + batch, dtype=np.int64)
    for i in range(1, prof.G + 1):
        a, b, g = prof.alpha[i], prof.beta[i], prof.gamma[i]
        src = msg if i == 1 else replicated_body(out, prof, i)
        body = reshape(src, a, g)
        z = noise(i, body) if callable(noise) else np.asarray(noise[i - 1], dtype=np.int64)
        if z.shape != (b - a, g) + batch:
            raise ShapeMismatch(f"noise block {i} has shape {z.shape}, expected {(b - a, g) + batch}")
        c = prof.cols(i)
        out[:a, c] = body
        out[a:b, c] = z
    return out


def row_meta(prof: StaircaseProfile) -> list:
    """Per block, a label for every row: message, replicated, noise or zero."""
    meta = []
    for i in range(1, prof.G + 1):
        a, b = prof.alpha[i], prof.beta[i]
        kind = "message" if i == 1 else "replicated"
        meta.append([kind] * a + ["noise"] * (b - a) + ["zero"] * (prof.total_rows - b))
    return meta


def replication_map(prof: StaircaseProfile, i: int) -> list:
    """For block i >= 2: (row, col) -> (source block, source row, source col).

    Worked out entry by entry from flat offsets rather than by slicing, so it
    can serve as an independent check of :func:`scgen`.
    """
    g = prof.gamma[i]
    out = {}
    for k in range(prof.alpha[i] * g):
        off, j = k, 1
        while off >= prof.gamma[j]:
            off -= prof.gamma[j]
            j += 1
        out[(k // g + 1, k % g + 1)] = (j, prof.r_base + i - j, off + 1)
    return out


def reencode_row(p: SystemParams, G1: int, j: int, i: int) -> int:
    """Outer row of block j carried into re-encoded group i."""
    return p.R_r + G1 + i - j


def reencode_input(m1: np.ndarray, d: DerivedParams, i: int) -> np.ndarray:
    prof = outer_profile(d)
    parts = [m1[reencode_row(d.params, d.G1, j, i) - 1, prof.cols(j)] for j in range(1, d.G1 + 1)]
    return np.concatenate(parts, axis=0)


@dataclass
class StaircasePair:
    M1: np.ndarray
    M2: np.ndarray
    derived: DerivedParams

    @property
    def groups(self) -> list:
        w = self.derived.group_len
        return [self.M2[:, g * w:(g + 1) * w] for g in range(self.derived.P)]

    def row_meta(self) -> dict:
        d = self.derived
        return {"M1": row_meta(outer_profile(d)), "M2": row_meta(inner_profile(d))}


def pscgen(msg, outer_noise: NoiseSpec, inner_noise, d: DerivedParams) -> StaircasePair:
    """Outer staircase plus re-encoded groups for the unconstrained servers.

    ``inner_noise`` is either ``inner_noise[i-1][j-1]`` blocks or a callable
    ``inner_noise(i, j, body)``.
    """
    m1 = scgen(msg, outer_noise, outer_profile(d))
    inner = inner_profile(d)
    batch = m1.shape[2:]
    groups = []
    for i in range(1, d.P + 1):
        w = reencode_input(m1, d, i)
        if callable(inner_noise):
            spec = (lambda ii: (lambda j, body: inner_noise(ii, j, body)))(i)
        else:
            spec = inner_noise[i - 1]
        groups.append(scgen(w, spec, inner))
    if groups:
        m2 = np.concatenate(groups, axis=1)
    else:
        m2 = np.zeros((inner.total_rows, 0) + batch, dtype=np.int64)
    return StaircasePair(m1, m2, d)


def zero_noise(d: DerivedParams, batch=()):
    """Zero noise blocks for both layers."""
    om = d.omega
    outer = [np.zeros((om, d.gamma[i]) + tuple(batch), dtype=np.int64) for i in range(1, d.G1 + 1)]
    inner = [[np.zeros((om, d.gamma_p[j]) + tuple(batch), dtype=np.int64) for j in range(1, d.G2 + 1)]
             for _ in range(d.P)]
    return outer, inner


def random_noise(d: DerivedParams, field: PrimeField, rng: np.random.Generator):
    om = d.omega
    outer = [field.random(rng, (om, d.gamma[i])) for i in range(1, d.G1 + 1)]
    inner = [[field.random(rng, (om, d.gamma_p[j])) for j in range(1, d.G2 + 1)] for _ in range(d.P)]
    return outer, inner


@dataclass(frozen=True)
class CauchyCode:
    x_points: tuple
    f_points: tuple
    C: np.ndarray
    field: PrimeField

    @property
    def N(self) -> int:
        return len(self.x_points)

    def rows(self, servers) -> np.ndarray:
        """Rows of C for 1-based server indices."""
        return self.C[[n - 1 for n in servers]]


def cauchy_matrix(field: PrimeField, xs, fs) -> np.ndarray:
    q = field.q
    out = np.zeros((len(xs), len(fs)), dtype=np.int64)
    for r, x in enumerate(xs):
        for c, f in enumerate(fs):
            out[r, c] = field.inv((x - f) % q)
    return out


@lru_cache(maxsize=256)
def cauchy(p: SystemParams, d: DerivedParams | None = None) -> CauchyCode:
    d = d or derive(p)
    need = p.N + d.beta1
    if d.q < need:
        raise FieldTooSmall(f"q={d.q} < N + beta_1 = {need}")
    field = PrimeField(d.q)
    xs = tuple(range(1, p.N + 1))
    fs = tuple(p.N + j for j in range(1, d.beta1 + 1))
    return CauchyCode(xs, fs, cauchy_matrix(field, xs, fs), field)
