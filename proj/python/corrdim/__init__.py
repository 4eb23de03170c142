"""Correlation dimension of next-token log-probability streams."""

import json

import numpy as np

from . import _corrdim
from ._corrdim import (
    CorrdimError,
    __version__,
    distinct_n,
    heaps_coefficient,
    pair_counts,
    rep_n,
    tokenize,
    zipf_coefficient,
)

__all__ = [
    "CorrdimError",
    "__version__",
    "analyze",
    "distinct_n",
    "fit",
    "heaps_coefficient",
    "pair_counts",
    "read_stream",
    "rep_n",
    "tokenize",
    "write_stream",
    "zipf_coefficient",
]


def read_stream(path):
    """Load an LPRS file. Returns a dict with values, token_ids, meta, normalized, fp16."""
    raw = _corrdim.read_stream(str(path))
    raw["meta"] = json.loads(raw.pop("meta_json"))
    return raw


def write_stream(path, values, token_ids=None, meta=None, normalized=False, fp16=False):
    """Write an LPRS file; returns the number of bytes written."""
    ids = None if token_ids is None else np.asarray(token_ids, dtype=np.uint32)
    return _corrdim.write_stream(str(path), np.asarray(values, dtype=np.float32), ids,
                                 json.dumps(meta or {}), normalized, fp16)


def analyze(values, **options):
    """Full pipeline on an (N, D) array; keyword options mirror the CLI flags."""
    return json.loads(_corrdim.analyze(np.asarray(values, dtype=np.float32), **options))


def fit(eps, s, n_steps, **options):
    return json.loads(_corrdim.fit(list(map(float, eps)), list(map(float, s)), int(n_steps), **options))
