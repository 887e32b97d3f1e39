"""
fastsketch - fast similarity sketches and similarity search.

Builds size-t similarity sketches whose entrywise agreement estimates the
Jaccard similarity of two sets, compares them with MinHash and one
permutation hashing, and answers approximate similarity queries with an
LSH index that never reports a set at or below the far threshold.

Usage:
    # From installed package
    fastsketch histogram --t 16 --trials 2000

    # As a module
    python -m fastsketch lsh-build sets.tsv index.fsli
"""

from fastsketch.baselines import (
    BaselineSketch,
    densify_optimal,
    densify_rotation,
    estimate_baseline,
    exact_jaccard,
    minhash_sketch,
    oph_sketch,
)
from fastsketch.config import APP_NAME, APP_VERSION, Method, OutputFormat
from fastsketch.hashing import KeyedHasher, SketchHasher, new_hasher, tokenize
from fastsketch.lsh import LshIndex, LshParams, build_index, derive_params, query
from fastsketch.main import main
from fastsketch.separation import Decision, SeparationParams, separate
from fastsketch.sketch import (
    FeatureVector,
    Sketch,
    SketchValue,
    dot_estimate,
    estimate_jaccard,
    featurize_bbit,
    fill_sketch,
    union_sketch,
)

__version__ = APP_VERSION

__all__ = [
    "APP_NAME",
    "APP_VERSION",
    "BaselineSketch",
    "Decision",
    "FeatureVector",
    "KeyedHasher",
    "LshIndex",
    "LshParams",
    "Method",
    "OutputFormat",
    "SeparationParams",
    "Sketch",
    "SketchHasher",
    "SketchValue",
    "build_index",
    "densify_optimal",
    "densify_rotation",
    "derive_params",
    "dot_estimate",
    "estimate_baseline",
    "estimate_jaccard",
    "exact_jaccard",
    "featurize_bbit",
    "fill_sketch",
    "main",
    "minhash_sketch",
    "new_hasher",
    "oph_sketch",
    "query",
    "separate",
    "tokenize",
    "union_sketch",
    "__version__",
]
