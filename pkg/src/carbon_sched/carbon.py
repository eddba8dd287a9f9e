"""Emission arithmetic: operational emissions and the dataset transfer cost."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KWH_PER_GB = 0.023
COMPRESSED_DATASET_GB = 0.320


@dataclass(frozen=True)
class TransferCostModel:
    """Energy spent moving the training data between regions.

    Checkpoint/state files are neglected by default but can be priced in
    through ``checkpoint_gb``.
    """

    kwh_per_gb: float = KWH_PER_GB
    dataset_gb: float = COMPRESSED_DATASET_GB
    checkpoint_gb: float = 0.0

    def __post_init__(self):
        for name in ("kwh_per_gb", "dataset_gb", "checkpoint_gb"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


FREE_TRANSFER = TransferCostModel(dataset_gb=0.0)


def operational_emissions(energy_window, intensity_window) -> float:
    """gCO2eq of drawing ``energy_window`` kWh at ``intensity_window`` g/kWh.

    Every emission total in the package goes through this reduction (an
    elementwise product summed along a contiguous axis), so equal inputs
    give bit-equal totals wherever they are computed.
    """
    e = np.asarray(energy_window, dtype=float)
    i = np.asarray(intensity_window, dtype=float)
    if e.shape != i.shape:
        raise ValueError(f"length mismatch: {e.shape} vs {i.shape}")
    if e.size == 0:
        return 0.0
    return float(np.ascontiguousarray(e * i).sum())


def operational_emissions_rows(energy, intensity_rows) -> np.ndarray:
    """Row-wise :func:`operational_emissions` for a 2-D stack of windows."""
    prod = np.ascontiguousarray(np.asarray(intensity_rows, dtype=float) * np.asarray(energy, dtype=float))
    return prod.sum(axis=-1)


def transfer_energy(model: TransferCostModel) -> float:
    return model.kwh_per_gb * (model.dataset_gb + model.checkpoint_gb)


def transfer_emissions(model: TransferCostModel, intensity_at_transfer: float) -> float:
    if intensity_at_transfer < 0:
        raise ValueError("intensity must be >= 0")
    return transfer_energy(model) * intensity_at_transfer
