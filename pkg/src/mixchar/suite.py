"""Named chain collections used by the verification runs."""

from __future__ import annotations

import numpy as np

from .chain import ChainModel, binary_tree, clique, cycle, hypercube, lazy, path, random_tree
from .spectral import DEFAULT_SEED

RANDOM_TREES = 20
RANDOM_TREE_MAX_N = 10


def random_trees(count: int = RANDOM_TREES, seed: int = DEFAULT_SEED,
                 max_n: int = RANDOM_TREE_MAX_N) -> list[ChainModel]:
    """Random weighted trees; sizes drawn from [3, max_n], weights log-uniform on [1/4, 4]."""
    rng = np.random.default_rng(seed)
    sizes = rng.integers(3, max_n + 1, size=count)
    return [random_tree(int(n), seed=seed + k) for k, n in enumerate(sizes)]


def sandwich_suite(seed: int = DEFAULT_SEED) -> list[ChainModel]:
    chains = [cycle(n) for n in range(3, 11)]
    chains += [path(n) for n in range(2, 11)]
    chains += [clique(n) for n in range(3, 9)]
    chains += [hypercube(d) for d in range(2, 5)]
    chains += [binary_tree(d) for d in range(1, 4)]
    chains += random_trees(seed=seed)
    return chains


def lazy_suite(seed: int = DEFAULT_SEED, a: float = 0.5) -> list[ChainModel]:
    return [lazy(c, a) for c in sandwich_suite(seed)]


def tree_suite(seed: int = DEFAULT_SEED) -> list[ChainModel]:
    chains = [path(n) for n in range(2, 11)]
    chains += [binary_tree(d) for d in range(1, 4)]
    chains += random_trees(seed=seed)
    return chains
