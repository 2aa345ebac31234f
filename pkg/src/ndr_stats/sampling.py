"""
Seeded generation of correlated speckle intensities and NDR realisations.

The simulation pipeline is

    Z1 ~ CN(0, 2 sigma_z^2),  Z2 = rho_z Z1 + sqrt(1 - rho_z^2) W
    X = |Z1|^2, Y = |Z2|^2                       (correlated exponentials)
    (X, Y) summed over k independent pairs       (correlated Gammas)
    D = |X - Y| / (X + Y)

Large requests are cut into fixed-size chunks. Chunk ``j`` always draws
from ``SeedSequence(seed, spawn_key=(stream_id, j))`` so the output does not
depend on how many worker threads process the chunks.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Union

import numpy as np

from .dist import FieldParams, GammaPairParams
from .specfun import DomainError

__all__ = [
    "SeedSpec",
    "ComplexPair",
    "IntensityPair",
    "SampleSizeError",
    "KINDS",
    "CHUNK_SIZE",
    "MAX_COUNT",
    "worker_count",
    "sample_complex_pair",
    "sample_intensity_pair",
    "sample_gamma_pair",
    "sample_ndr",
    "ndr_from_pairs",
    "iter_batches",
    "sample_batch",
]

KINDS = ("complex", "intensity", "gamma", "ndr")
CHUNK_SIZE = 1 << 16
# default guard on a single request; about 3 GB of float64 for the complex kind
MAX_COUNT = 100_000_000
THREADS_ENV = "NDR_STATS_THREADS"

Params = Union[FieldParams, GammaPairParams]


class SampleSizeError(ValueError):
    """Requested sample count exceeds the configured cap."""


@dataclass(frozen=True)
class SeedSpec:
    """Root seed plus a stream identifier for independent parallel streams."""

    seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if int(v) != v or not (0 <= v < 2**64):
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def generator(self, chunk: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id), int(chunk)))
        return np.random.Generator(np.random.PCG64(ss))


class ComplexPair(NamedTuple):
    z1_re: np.ndarray
    z1_im: np.ndarray
    z2_re: np.ndarray
    z2_im: np.ndarray


class IntensityPair(NamedTuple):
    x1: np.ndarray
    x2: np.ndarray


def _as_field(p: Params) -> FieldParams:
    return p if isinstance(p, FieldParams) else p.field()


def _as_gamma(p: Params) -> GammaPairParams:
    return p if isinstance(p, GammaPairParams) else p.to_gamma(1)


def _integer_shape(p: GammaPairParams) -> int:
    if not p.is_integer_shape:
        raise DomainError(
            f"sampling needs an integer shape k, got k = {p.k}; "
            "non-integer k is only supported by the analytic evaluators"
        )
    return int(p.k)


def sample_complex_pair(fp: FieldParams, rng: np.random.Generator, size=None) -> ComplexPair:
    """Draw (Z1, Z2) with per-component standard deviation ``sigma_z``.

    With ``size=None`` each field is a float, otherwise an array of that size.
    """
    g = rng.standard_normal((4,) if size is None else (4, size))
    g *= fp.sigma_z
    c = math.sqrt(1.0 - fp.rho_z**2)
    z1_re, z1_im = g[0], g[1]
    z2_re = fp.rho_z * z1_re + c * g[2]
    z2_im = fp.rho_z * z1_im + c * g[3]
    if size is None:
        return ComplexPair(float(z1_re), float(z1_im), float(z2_re), float(z2_im))
    return ComplexPair(z1_re, z1_im, z2_re, z2_im)


def sample_intensity_pair(fp: FieldParams, rng: np.random.Generator, size=None) -> IntensityPair:
    """Squared magnitudes of one correlated complex pair."""
    z = sample_complex_pair(fp, rng, size)
    return IntensityPair(z.z1_re**2 + z.z1_im**2, z.z2_re**2 + z.z2_im**2)


def sample_gamma_pair(p: GammaPairParams, rng: np.random.Generator, size=None) -> IntensityPair:
    """Sum of ``k`` independent correlated exponential pairs."""
    k = _integer_shape(p)
    fp = p.field()
    acc = sample_intensity_pair(fp, rng, size)
    x1, x2 = acc
    for _ in range(k - 1):
        nxt = sample_intensity_pair(fp, rng, size)
        x1 = x1 + nxt.x1
        x2 = x2 + nxt.x2
    return IntensityPair(x1, x2)


def ndr_from_pairs(x1, x2):
    """|x1 - x2| / (x1 + x2)."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return np.abs(x1 - x2) / (x1 + x2)


def sample_ndr(p: GammaPairParams, rng: np.random.Generator, size=None):
    """Draw D from Gamma pairs, redrawing the (float-only) event x1 + x2 == 0."""
    pair = sample_gamma_pair(p, rng, size)
    if size is None:
        while pair.x1 + pair.x2 == 0.0:
            pair = sample_gamma_pair(p, rng)
        return float(ndr_from_pairs(pair.x1, pair.x2))
    x1, x2 = pair
    bad = np.flatnonzero(x1 + x2 == 0.0)
    while bad.size:
        redo = sample_gamma_pair(p, rng, bad.size)
        x1[bad], x2[bad] = redo.x1, redo.x2
        bad = bad[x1[bad] + x2[bad] == 0.0]
    return ndr_from_pairs(x1, x2)


def worker_count(workers: int | None = None) -> int:
    """Worker threads to use: explicit value, else $NDR_STATS_THREADS, else 1."""
    if workers is None:
        env = os.environ.get(THREADS_ENV, "").strip()
        workers = int(env) if env else 1
    return max(1, int(workers))


def _draw_chunk(p: Params, kind: str, seed: SeedSpec, chunk: int, size: int):
    rng = seed.generator(chunk)
    if kind == "complex":
        return sample_complex_pair(_as_field(p), rng, size)
    if kind == "intensity":
        return sample_intensity_pair(_as_field(p), rng, size)
    if kind == "gamma":
        return sample_gamma_pair(_as_gamma(p), rng, size)
    return sample_ndr(_as_gamma(p), rng, size)


def _check_request(p: Params, count: int, kind: str, max_count: int):
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    if int(count) != count or count < 1:
        raise ValueError(f"count must be a positive integer, got {count!r}")
    if count > max_count:
        raise SampleSizeError(f"count {count} exceeds the cap of {max_count} samples")
    if kind in ("gamma", "ndr"):
        _integer_shape(_as_gamma(p))


def iter_batches(
    p: Params,
    count: int,
    seed: SeedSpec = SeedSpec(),
    kind: str = "ndr",
    workers: int | None = None,
    chunk_size: int = CHUNK_SIZE,
    max_count: int = MAX_COUNT,
) -> Iterator:
    """Yield consecutive chunks of a deterministic sample stream, in order.

    With several workers, chunks are generated in windows of ``workers``
    chunks by a thread pool; ordering and values do not change.
    """
    _check_request(p, count, kind, max_count)
    sizes = [chunk_size] * (count // chunk_size)
    if count % chunk_size:
        sizes.append(count % chunk_size)
    n_workers = worker_count(workers)
    if n_workers == 1:
        for j, size in enumerate(sizes):
            yield _draw_chunk(p, kind, seed, j, size)
        return
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        for start in range(0, len(sizes), n_workers):
            window = range(start, min(start + n_workers, len(sizes)))
            yield from pool.map(lambda j: _draw_chunk(p, kind, seed, j, sizes[j]), window)


def sample_batch(
    p: Params,
    count: int,
    seed: SeedSpec = SeedSpec(),
    kind: str = "ndr",
    workers: int | None = None,
    chunk_size: int = CHUNK_SIZE,
    max_count: int = MAX_COUNT,
):
    """Draw ``count`` samples of ``kind`` as arrays.

    Returns a ``ComplexPair`` (complex), an ``IntensityPair`` (intensity,
    gamma) or a 1-D array (ndr). ``complex`` and ``intensity`` use the
    field-level view of ``p``; ``gamma`` and ``ndr`` need an integer ``k``.
    """
    chunks = list(iter_batches(p, count, seed, kind, workers, chunk_size, max_count))
    if kind == "ndr":
        return np.concatenate(chunks)
    cls = ComplexPair if kind == "complex" else IntensityPair
    return cls(*(np.concatenate(cols) for cols in zip(*chunks)))
