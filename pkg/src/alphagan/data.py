"""Seven-bit toy dataset: uniform even integers in [0, 126], optional LSB-flip label noise."""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

from .divergences import DiscreteDist

N_BITS = 7
N_VALUES = 1 << N_BITS
LSB_INDEX = N_BITS - 1
# big-endian: index 0 is the most significant bit
_BIT_WEIGHTS = 1 << np.arange(N_BITS - 1, -1, -1)


def make_rng(seed: int, *keys: Union[str, int]) -> np.random.Generator:
    """Independent generator for a named stream derived from a root seed.

    String keys are hashed with CRC32, so the same (seed, keys) always yields the
    same stream regardless of which other streams were drawn first.
    """
    spawn_key = tuple(zlib.crc32(k.encode()) if isinstance(k, str) else int(k) for k in keys)
    return np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=spawn_key))


def encode7(value: int) -> np.ndarray:
    value = int(value)
    if not 0 <= value < N_VALUES:
        raise ValueError(f"value {value} outside [0, 127]")
    return ((value & _BIT_WEIGHTS) > 0).astype(np.int8)


def decode7(bits: Sequence[int]) -> int:
    bits = np.asarray(bits)
    if bits.shape != (N_BITS,):
        raise ValueError("expected 7 bits")
    return int(bits.astype(np.int64) @ _BIT_WEIGHTS)


def encode_many(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    if np.any((values < 0) | (values >= N_VALUES)):
        raise ValueError("values outside [0, 127]")
    return ((values[:, None] & _BIT_WEIGHTS) > 0).astype(np.float64)


def decode_many(bits: np.ndarray) -> np.ndarray:
    return np.asarray(bits).astype(np.int64) @ _BIT_WEIGHTS


@dataclass(frozen=True)
class ToyDatasetSpec:
    n_samples: int = 25600
    noise_pct: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_samples <= 0:
            raise ValueError("n_samples must be positive")
        if not 0.0 <= self.noise_pct <= 100.0:
            raise ValueError("noise_pct must lie in [0, 100]")


class ToyDataset(NamedTuple):
    bits: np.ndarray
    corrupt: np.ndarray


def sample_evens(n: int, rng: np.random.Generator) -> np.ndarray:
    return 2 * rng.integers(0, N_VALUES // 2, size=n)


def generate_dataset(spec: ToyDatasetSpec, rng: np.random.Generator = None) -> ToyDataset:
    """Bits of ``n_samples`` uniform even integers, with floor(noise_pct% * n) rows LSB-flipped."""
    if rng is None:
        rng = make_rng(spec.seed, "dataset")
    bits = encode_many(sample_evens(spec.n_samples, rng))
    n_corrupt = int(np.floor(spec.noise_pct / 100.0 * spec.n_samples))
    corrupt = np.zeros(spec.n_samples, dtype=bool)
    if n_corrupt:
        idx = rng.choice(spec.n_samples, size=n_corrupt, replace=False)
        corrupt[idx] = True
        bits[idx, LSB_INDEX] = 1.0 - bits[idx, LSB_INDEX]
    return ToyDataset(bits, corrupt)


def threshold_bits(g_out: np.ndarray) -> np.ndarray:
    """Bit i is 1 iff the generator output i is at least 0.5; works row-wise on batches."""
    g_out = np.asarray(g_out)
    if g_out.shape[-1] != N_BITS:
        raise ValueError("generator output must have 7 entries")
    return (g_out >= 0.5).astype(np.int8)


def empirical_distribution(values: Iterable[int]) -> DiscreteDist:
    values = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=np.int64)
    if values.size == 0:
        raise ValueError("empty sample")
    if np.any((values < 0) | (values >= N_VALUES)):
        raise ValueError("values outside [0, 127]")
    counts = np.bincount(values, minlength=N_VALUES)
    return DiscreteDist(tuple(range(N_VALUES)), counts / values.size)


def uniform_evens() -> DiscreteDist:
    probs = np.zeros(N_VALUES)
    probs[0::2] = 1.0 / (N_VALUES // 2)
    return DiscreteDist(tuple(range(N_VALUES)), probs)


def dump_dataset(dataset: ToyDataset, path) -> None:
    with open(path, "w") as fh:
        for row, bad in zip(dataset.bits.astype(int), dataset.corrupt):
            fh.write(" ".join(map(str, row)) + (" #corrupt" if bad else "") + "\n")


def load_dataset(path) -> ToyDataset:
    rows, corrupt = [], []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        body, _, tag = line.partition("#")
        rows.append([int(b) for b in body.split()])
        corrupt.append(tag.strip() == "corrupt")
    return ToyDataset(np.array(rows, dtype=np.float64), np.array(corrupt, dtype=bool))
