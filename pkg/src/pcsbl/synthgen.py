"""Synthetic block-sparse ensembles.

An instance plants K standard-normal nonzeros, split into L contiguous
blocks of random sizes, inside L contiguous "super-blocks" that partition
the index range with the same random fractions; each block gets a uniform
random start within its super-block. The signal and the columns of the
Gaussian measurement matrix are normalized to unit l2 norm, and optional
noise is rescaled so the instance hits the requested SNR exactly.

Generation is a pure function of the spec: the bit stream comes from the
counter-based Philox generator keyed by the spec seed, so instances are
reproducible byte-for-byte across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import GenerationError
from .model import Problem

_MAX_ATTEMPTS = 1000


@dataclass(frozen=True)
class EnsembleSpec:
    """Parameters of one synthetic instance."""

    n: int
    m: int
    k: int
    l: int
    snr_db: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.l <= self.k <= self.n:
            raise ValueError(f"need 1 <= l <= k <= n, got l={self.l}, k={self.k}, n={self.n}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")


@dataclass(frozen=True)
class Instance:
    """A generated problem plus the planted layout."""

    problem: Problem
    block_layout: List[Tuple[int, int]]  # (start, length) per block
    fractions: np.ndarray
    spec: EnsembleSpec


def _rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def block_sizes_from_fractions(k: int, fractions: np.ndarray) -> np.ndarray:
    """Block sizes: ceil(k * r) for the first L-1 blocks, remainder last."""
    sizes = np.ceil(k * np.asarray(fractions[:-1], dtype=float)).astype(int)
    return np.append(sizes, k - sizes.sum())


def draw_partition(k: int, l: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Draw block sizes summing to k from normalized uniform fractions.

    Redraws when the remainder-defined last block would be empty; gives up
    with `GenerationError` after 1000 attempts (k too small for l).
    """
    if not 1 <= l <= k:
        raise ValueError(f"need 1 <= l <= k, got l={l}, k={k}")
    for _ in range(_MAX_ATTEMPTS):
        fractions = rng.uniform(size=l)
        fractions /= fractions.sum()
        sizes = block_sizes_from_fractions(k, fractions)
        if sizes[-1] >= 1:
            return sizes, fractions
    raise GenerationError(f"could not draw a partition of {k} nonzeros into {l} blocks")


def _apportion(n: int, fractions: np.ndarray) -> np.ndarray:
    """Split n into integer parts proportional to fractions (largest remainder)."""
    raw = n * fractions
    base = np.floor(raw).astype(int)
    shortfall = n - base.sum()
    if shortfall:
        order = np.argsort(-(raw - base), kind="stable")
        base[order[:shortfall]] += 1
    return base


def place_blocks(
    n: int, sizes: np.ndarray, fractions: np.ndarray, rng: np.random.Generator
) -> List[Tuple[int, int]]:
    """Place each block uniformly at random inside its super-block.

    The super-blocks partition ``range(n)`` with lengths apportioned from
    the same fractions that set the block sizes. Raises `GenerationError`
    when a block does not fit its super-block (caller may redraw).
    """
    super_lens = _apportion(n, np.asarray(fractions, dtype=float))
    layout: List[Tuple[int, int]] = []
    start = 0
    for size, super_len in zip(sizes, super_lens):
        if size > super_len:
            raise GenerationError(f"block of length {size} exceeds its super-block of length {super_len}")
        offset = int(rng.integers(0, super_len - size + 1))
        layout.append((start + offset, int(size)))
        start += super_len
    return layout


def generate(spec: EnsembleSpec) -> Instance:
    """Generate one instance. Pure in (spec); identical specs give
    bit-identical instances."""
    rng = _rng_for(spec.seed)

    layout = None
    for _ in range(_MAX_ATTEMPTS):
        sizes, fractions = draw_partition(spec.k, spec.l, rng)
        try:
            layout = place_blocks(spec.n, sizes, fractions, rng)
        except GenerationError:
            continue
        break
    if layout is None:
        raise GenerationError(f"could not place {spec.l} blocks of {spec.k} nonzeros into n={spec.n}")

    x = np.zeros(spec.n)
    for start, length in layout:
        x[start : start + length] = rng.standard_normal(length)
    x /= np.linalg.norm(x)

    A = rng.standard_normal((spec.m, spec.n))
    A /= np.linalg.norm(A, axis=0)[None, :]

    clean = A @ x
    if spec.snr_db is None:
        y = clean
        noise_variance = 0.0
    else:
        w = rng.standard_normal(spec.m)
        w *= np.linalg.norm(clean) * 10.0 ** (-spec.snr_db / 20.0) / np.linalg.norm(w)
        y = clean + w
        noise_variance = float(w @ w) / spec.m

    problem = Problem(A=A, y=y, noise_variance=noise_variance, truth=x)
    return Instance(problem=problem, block_layout=layout, fractions=fractions, spec=spec)
