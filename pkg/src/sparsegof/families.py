"""Parametric cell-probability families, top-k0 weights, and reproducible multinomial sampling."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import CellModel, CountVector, ValidationError, WeightVector

FAMILY_KINDS = ("equiprobable", "family1", "family2", "family3", "custom")

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class FamilySpec:
    """Which family, its parameter, and the number of cells.

    ``param`` is ``r`` for family1/family3 and ``r'`` for family2; it is
    ignored for equiprobable models. ``probs`` is only used for ``custom``.
    """

    kind: str
    k: int
    param: Optional[float] = None
    probs: Optional[tuple] = None

    def __post_init__(self) -> None:
        if self.kind not in FAMILY_KINDS:
            raise ValidationError(f"unknown family {self.kind!r}; choose from {FAMILY_KINDS}")
        if self.k < 2:
            raise ValidationError("k must be at least 2")
        r = self.param
        if self.kind in ("family1", "family2", "family3") and r is None:
            raise ValidationError(f"{self.kind} needs a parameter")
        if self.kind == "family1":
            if not 0.0 < r < 2.0:
                raise ValidationError(f"family1 needs r in (0, 2), got {r}")
            if self.k % 2:
                raise ValidationError(f"family1 needs an even k, got {self.k}")
        elif self.kind == "family2":
            if not 0.0 < r < 2.0:
                raise ValidationError(f"family2 needs r' in (0, 2), got {r}")
            if self.k % 4:
                raise ValidationError(f"family2 needs k divisible by 4, got {self.k}")
        elif self.kind == "family3":
            if not 0.0 < r < 8.0:
                raise ValidationError(f"family3 needs r in (0, 8), got {r}")
            if self.k % 20:
                raise ValidationError(f"family3 needs k a multiple of 20, got {self.k}")
        elif self.kind == "custom":
            if self.probs is None or len(self.probs) != self.k:
                raise ValidationError("custom family needs k probabilities")

    @property
    def label(self) -> str:
        if self.kind in ("equiprobable", "custom"):
            return self.kind
        return f"{self.kind}(r={self.param:g})"


def build_model(spec: FamilySpec) -> CellModel:
    k, r = spec.k, spec.param
    p = np.empty(k)
    if spec.kind == "equiprobable":
        p[:] = 1.0 / k
    elif spec.kind == "family1":
        p[: k // 2] = r / k
        p[k // 2 :] = (2.0 - r) / k
    elif spec.kind == "family2":
        q = k // 4
        p[:q] = 1.5 * r / k
        p[q : 2 * q] = 0.5 * r / k
        p[2 * q :] = (2.0 - r) / k
    elif spec.kind == "family3":
        m = (19 * k) // 20
        p[:m] = r / (8.0 * k)
        p[m:] = (160.0 - 19.0 * r) / (8.0 * k)
    else:
        p[:] = spec.probs
    return CellModel(p)


def weights_for_cells(k: int, selected: Sequence[int]) -> WeightVector:
    """Weight ``k/k0`` on the ``k0`` selected cell indices, 0 elsewhere."""
    idx = np.unique(np.asarray(selected, dtype=np.int64))
    if idx.size == 0 or idx.size == k:
        raise ValidationError(f"top-k0 scheme needs 0 < k0 < k, got k0={idx.size}")
    if idx[0] < 0 or idx[-1] >= k:
        raise ValidationError("selected cell index out of range")
    w = np.zeros(k)
    w[idx] = k / idx.size
    return WeightVector(w)


def topk0_weights(k: int, h: float, active_low_indices: bool = True) -> WeightVector:
    """Top-k0 scheme with ``k0 = round(h k)``.

    The first ``k0`` cells are weighted when ``active_low_indices`` is true,
    otherwise the last ``k0``.
    """
    if not 0.0 < h < 1.0:
        raise ValidationError(f"h must lie in (0, 1), got {h}")
    k0 = int(round(h * k))
    if k0 <= 0 or k0 >= k:
        raise ValidationError(f"h*k = {h * k:g} rounds to a degenerate k0={k0}")
    idx = np.arange(k0) if active_low_indices else np.arange(k - k0, k)
    return weights_for_cells(k, idx)


@dataclass(frozen=True)
class SamplerSeed:
    """Counter-based stream address: replicate ``stream`` of study ``seed``."""

    seed: int
    stream: int = 0

    def __post_init__(self) -> None:
        for name in ("seed", "stream"):
            v = getattr(self, name)
            if not 0 <= v <= _MASK64:
                raise ValidationError(f"{name} must be a 64-bit unsigned integer")

    def generator(self) -> np.random.Generator:
        # Philox keyed by (seed, stream): no shared state between replicates
        return np.random.Generator(np.random.Philox(key=(self.stream << 64) | self.seed))


class AliasTable:
    """Walker/Vose alias table for O(1) categorical draws."""

    def __init__(self, probs: np.ndarray):
        p = np.asarray(probs, dtype=np.float64)
        k = p.size
        scaled = p * (k / p.sum())
        prob = np.ones(k)
        alias = np.arange(k, dtype=np.int64)
        small = [i for i in range(k) if scaled[i] < 1.0]
        large = [i for i in range(k) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] -= 1.0 - scaled[s]
            (small if scaled[g] < 1.0 else large).append(g)
        # leftovers carry probability 1 up to rounding
        self.prob = prob
        self.alias = alias
        self.k = k

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size) * self.k
        col = u.astype(np.int64)
        np.minimum(col, self.k - 1, out=col)
        keep = (u - col) < self.prob[col]
        return np.where(keep, col, self.alias[col])

    def counts(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if n == 0:
            return np.zeros(self.k, dtype=np.int64)
        return np.bincount(self.draw(rng, n), minlength=self.k)


def sample_counts(
    model: CellModel, n: int, seed: SamplerSeed, table: Optional[AliasTable] = None
) -> CountVector:
    """Multinomial(n, p) counts determined entirely by ``(model, n, seed)``."""
    if n < 0:
        raise ValidationError("n must be nonnegative")
    table = table or AliasTable(model.probs)
    return CountVector(table.counts(seed.generator(), n))


def sample_block(table: AliasTable, n: int, seed: int, start: int, stop: int) -> np.ndarray:
    """Counts for replicates ``start..stop-1`` as rows of a float array."""
    out = np.empty((stop - start, table.k))
    for row, stream in enumerate(range(start, stop)):
        out[row] = table.counts(SamplerSeed(seed, stream).generator(), n)
    return out
