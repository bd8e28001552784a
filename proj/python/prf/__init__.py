"""Random forest training, prediction and cluster simulation."""

import json

from ._core import CapacityError, Dataset, Forest, SchemaMismatch, data_volume, dsi_table, train
from ._core import simulate as _simulate

__all__ = [
    "CapacityError",
    "Dataset",
    "Forest",
    "SchemaMismatch",
    "data_volume",
    "dsi_table",
    "simulate",
    "train",
]


def simulate(forest, cluster):
    """Simulated cost ledger for `forest` on `cluster` (a dict or JSON text)."""
    text = cluster if isinstance(cluster, str) else json.dumps(cluster)
    return json.loads(_simulate(forest, text))
