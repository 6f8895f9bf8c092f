"""Linear filter banks for the Fields-of-Experts prior.

A bank is an ordered set of square kernels ``k_i`` with positive weights
``theta_i``. Banks are either imported from a ``FOEBANK`` text file or built
from the non-constant 2-D DCT basis as a stand-in for learned filters.

File format::

    FOEBANK 1
    <N_f> <s>
    <theta_0>
    <s lines of s reals>
    <theta_1>
    ...
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Filter",
    "FilterBank",
    "BankFormatError",
    "load_bank",
    "write_bank",
    "substitute_bank",
]

MAGIC = "FOEBANK 1"


class BankFormatError(ValueError):
    """Raised when a bank file cannot be parsed."""


@dataclass(frozen=True)
class Filter:
    kernel: np.ndarray
    weight: float

    def __post_init__(self):
        k = np.array(self.kernel, dtype=np.float64)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise ValueError(f"kernel must be square, got shape {k.shape}")
        if k.shape[0] % 2 != 1:
            raise ValueError(f"kernel side must be odd, got {k.shape[0]}")
        if not self.weight > 0:
            raise ValueError(f"non-positive weight {self.weight}")
        k.setflags(write=False)
        object.__setattr__(self, "kernel", k)
        object.__setattr__(self, "weight", float(self.weight))

    @property
    def size(self) -> int:
        return self.kernel.shape[0]


@dataclass(frozen=True)
class FilterBank:
    """Immutable, ordered collection of filters sharing one kernel size.

    Attributes
    ----------
    filters : tuple of Filter
    source : {"imported", "substitute"}
    """

    filters: tuple
    source: str = "imported"
    _stack: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        filters = tuple(self.filters)
        if not filters:
            raise ValueError("a filter bank needs at least one filter")
        sizes = {f.size for f in filters}
        if len(sizes) != 1:
            raise ValueError(f"all kernels must share one size, got {sorted(sizes)}")
        if self.source not in ("imported", "substitute"):
            raise ValueError(f"unknown bank source {self.source!r}")
        stack = np.stack([f.kernel for f in filters])
        stack.setflags(write=False)
        object.__setattr__(self, "filters", filters)
        object.__setattr__(self, "_stack", stack)

    def __len__(self) -> int:
        return len(self.filters)

    @property
    def size(self) -> int:
        return self.filters[0].size

    @property
    def kernels(self) -> np.ndarray:
        """Read-only array of shape ``(N_f, s, s)``."""
        return self._stack

    @property
    def weights(self) -> np.ndarray:
        return np.array([f.weight for f in self.filters])

    @classmethod
    def from_arrays(cls, kernels, weights, source="imported") -> "FilterBank":
        return cls(
            tuple(Filter(k, w) for k, w in zip(kernels, weights, strict=True)),
            source=source,
        )


def load_bank(path) -> FilterBank:
    """Parse a ``FOEBANK 1`` text file.

    Raises
    ------
    BankFormatError
        On a bad header, truncated data, a non-square kernel row or a
        non-positive weight. Filter-level problems name the filter index.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh.read().split("\n")]
    lines = [ln for ln in lines if ln]

    if not lines or lines[0].split() != MAGIC.split():
        raise BankFormatError(f"{os.fspath(path)}: missing '{MAGIC}' header")
    try:
        n_f, s = (int(t) for t in lines[1].split())
    except (IndexError, ValueError):
        raise BankFormatError(f"{os.fspath(path)}: malformed size line") from None
    if n_f < 1 or s < 1 or s % 2 != 1:
        raise BankFormatError(
            f"{os.fspath(path)}: need N_f >= 1 and odd kernel size, got {n_f} {s}"
        )

    filters = []
    pos = 2
    for i in range(n_f):
        if pos + s >= len(lines):
            raise BankFormatError(f"truncated data at filter {i}")
        try:
            weight = float(lines[pos])
        except ValueError:
            raise BankFormatError(f"malformed weight at filter {i}") from None
        if not weight > 0:
            raise BankFormatError(f"non-positive weight at filter {i}")
        rows = []
        for r in range(s):
            tokens = lines[pos + 1 + r].split()
            if len(tokens) != s:
                raise BankFormatError(
                    f"non-square kernel at filter {i}: row {r} has {len(tokens)} "
                    f"entries, expected {s}"
                )
            try:
                rows.append([float(t) for t in tokens])
            except ValueError:
                raise BankFormatError(f"malformed kernel entry at filter {i}") from None
        filters.append(Filter(np.array(rows), weight))
        pos += s + 1
    if pos != len(lines):
        raise BankFormatError(
            f"{os.fspath(path)}: {len(lines) - pos} unexpected trailing lines"
        )
    return FilterBank(tuple(filters), source="imported")


def write_bank(bank: FilterBank, path) -> None:
    """Write ``bank`` in the FOEBANK text format.

    Values are written with ``repr`` so that :func:`load_bank` reproduces
    them bit-exactly.
    """
    out = [MAGIC, f"{len(bank)} {bank.size}"]
    for f in bank.filters:
        out.append(repr(f.weight))
        for row in f.kernel:
            out.append(" ".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")


def _dct_frequencies(size):
    # low to high total frequency, ties broken by the vertical index
    pairs = [(a, b) for a in range(size) for b in range(size) if (a, b) != (0, 0)]
    return sorted(pairs, key=lambda ab: (ab[0] + ab[1], ab[0]))


def substitute_bank(size: int = 7, count: int = 48) -> FilterBank:
    """Deterministic stand-in bank made of non-constant 2-D DCT-II atoms.

    Each kernel is the outer product of two 1-D cosine atoms, normalised to
    unit Frobenius norm; all weights are 1. Kernels are ordered by increasing
    total frequency, so ``count < size**2 - 1`` keeps the smoothest ones.
    """
    if size < 3 or size % 2 != 1:
        raise ValueError(f"size must be odd and >= 3, got {size}")
    if not 1 <= count <= size * size - 1:
        raise ValueError(
            f"count must be in [1, {size * size - 1}] for size {size}, got {count}"
        )
    x = np.arange(size)
    atoms = np.cos(np.pi * (2 * x[None, :] + 1) * x[:, None] / (2 * size))
    kernels = []
    for a, b in _dct_frequencies(size)[:count]:
        k = np.outer(atoms[a], atoms[b])
        kernels.append(k / np.linalg.norm(k))
    return FilterBank.from_arrays(kernels, np.ones(count), source="substitute")
