"""Exact computation in Carnot groups and numerical differentiability probes."""

from .algebra import LieVector, StratifiedAlgebra, bracket, preset, validate
from .decompose import bracket_word, path_decompose, split_sum
from .group import GroupPoint, bch, dilate, exp, hom_norm, identity, inverse, multiply, point, vector_field
from .metric import HorizontalWord, cc_upper, flow, word_length

__version__ = "0.1.0"

__all__ = [
    "GroupPoint",
    "HorizontalWord",
    "LieVector",
    "StratifiedAlgebra",
    "bch",
    "bracket",
    "bracket_word",
    "cc_upper",
    "dilate",
    "exp",
    "flow",
    "hom_norm",
    "identity",
    "inverse",
    "multiply",
    "path_decompose",
    "point",
    "preset",
    "split_sum",
    "validate",
    "vector_field",
    "word_length",
]
