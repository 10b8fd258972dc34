"""Velocity quadrature on (0, 1) and Clenshaw-Curtis sparse grids on [-1, 1]^d."""
import itertools
import logging
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Dict, Tuple

import numpy as np
import pandas as pd

MERGE_DIGITS = 12


@dataclass(frozen=True)
class VelocityQuadrature:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]


@dataclass(frozen=True)
class SparseGrid:
    nodes: np.ndarray
    weights: np.ndarray
    level: int
    dimension: int

    def __len__(self) -> int:
        return self.nodes.shape[0]

    @property
    def probability_weights(self) -> np.ndarray:
        """Weights of the uniform probability measure on [-1, 1]^d."""
        return self.weights / 2.0 ** self.dimension

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.nodes, columns=[f"z{i + 1}" for i in range(self.dimension)])
        frame["weight"] = self.weights
        return frame


def gauss_legendre_unit(M: int) -> VelocityQuadrature:
    """M-point Gauss-Legendre rule mapped to (0, 1), weights summing to one."""
    if M < 1:
        raise ValueError(f"velocity quadrature needs M >= 1, got {M}")
    nodes, weights = np.polynomial.legendre.leggauss(M)
    return VelocityQuadrature(nodes=0.5 * (nodes + 1.0), weights=0.5 * weights)


@lru_cache(maxsize=None)
def _clenshaw_curtis(level: int) -> Tuple[np.ndarray, np.ndarray]:
    if level == 0:
        return np.array([0.0]), np.array([2.0])
    n = 2 ** level
    j = np.arange(n + 1)
    theta = (j / n) * np.pi
    k = np.arange(1, n // 2 + 1)
    b = np.where(k == n // 2, 1.0, 2.0)
    cosines = np.cos(2.0 * np.outer(theta, k))
    c = np.where((j == 0) | (j == n), 1.0, 2.0)
    weights = c / n * (1.0 - cosines @ (b / (4.0 * k ** 2 - 1.0)))
    nodes = np.cos(theta)
    nodes[n // 2] = 0.0
    # ascending order
    return nodes[::-1].copy(), weights[::-1].copy()


def clenshaw_curtis_1d(level: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nested Clenshaw-Curtis rule on [-1, 1]: 1 node at level 0, 2^level + 1 nodes above."""
    if level < 0:
        raise ValueError(f"Clenshaw-Curtis level must be >= 0, got {level}")
    nodes, weights = _clenshaw_curtis(level)
    return nodes.copy(), weights.copy()


def _level_multi_indices(d: int, level: int):
    """Multi-indices i with level - d + 1 <= |i| <= level, lexicographic."""
    for index in itertools.product(range(level + 1), repeat=d):
        total = sum(index)
        if level - d + 1 <= total <= level:
            yield index, total


def smolyak_grid(d: int, level: int) -> SparseGrid:
    """Smolyak combination of nested Clenshaw-Curtis rules, duplicates merged."""
    if d < 1:
        raise ValueError(f"sparse grid dimension must be >= 1, got {d}")
    if level < 0:
        raise ValueError(f"sparse grid level must be >= 0, got {level}")

    merged: Dict[Tuple[float, ...], list] = {}
    for index, total in _level_multi_indices(d, level):
        coefficient = (-1) ** (level - total) * comb(d - 1, level - total)
        rules = [_clenshaw_curtis(i) for i in index]
        for combo in itertools.product(*(range(len(nodes)) for nodes, _ in rules)):
            point = tuple(rules[axis][0][m] for axis, m in enumerate(combo))
            weight = coefficient * np.prod([rules[axis][1][m] for axis, m in enumerate(combo)])
            key = tuple(round(c, MERGE_DIGITS) + 0.0 for c in point)
            if key in merged:
                merged[key][1] += weight
            else:
                merged[key] = [point, weight]

    keys = sorted(merged)
    nodes = np.array([merged[k][0] for k in keys], dtype=float).reshape(len(keys), d)
    weights = np.array([merged[k][1] for k in keys], dtype=float)
    logging.info(f"Smolyak grid d={d} level={level}: {len(keys)} nodes")
    return SparseGrid(nodes=nodes, weights=weights, level=level, dimension=d)
