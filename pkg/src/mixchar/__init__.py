"""Mixing-time characterizations and inequality verification for finite reversible Markov chains."""

from .chain import (ChainModel, WeightedNetwork, binary_tree, birth_death, clique, cycle, family,
                    from_matrix, from_network, from_spec, hypercube, lazy, load_chain, path,
                    random_tree, rescale_rows, star, two_point)
from .errors import InputError, MixcharError, NotMixing
from .verify import Config, analyze, run_suite

__version__ = "0.1.0"

__all__ = [
    "ChainModel", "WeightedNetwork", "binary_tree", "birth_death", "clique", "cycle", "family",
    "from_matrix", "from_network", "from_spec", "hypercube", "lazy", "load_chain", "path",
    "random_tree", "rescale_rows", "star", "two_point", "InputError", "MixcharError", "NotMixing",
    "Config", "analyze", "run_suite",
]
