"""Collections of graph signals sharing one node set.

Signals are stored column-major: ``values`` has shape ``(n, m)`` with one
signal per column.  An optional boolean array of the same shape marks which
entries were observed (True = observed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .filtering import ObservationMask


@dataclass(frozen=True, eq=False)
class SignalSet:
    values: np.ndarray
    masks: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise DimensionError(f"signal matrix must be 2-D, got shape {values.shape}")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.masks is not None:
            masks = np.asarray(self.masks, dtype=bool)
            if masks.shape != values.shape:
                raise DimensionError(
                    f"masks shape {masks.shape} does not match signals shape {values.shape}"
                )
            masks = masks.copy()
            masks.setflags(write=False)
            object.__setattr__(self, "masks", masks)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def mask_for(self, j: int) -> ObservationMask:
        if self.masks is None:
            return ObservationMask.full(self.n)
        return ObservationMask(self.masks[:, j])

    def zero_filled(self) -> np.ndarray:
        """Signal matrix with unobserved entries replaced by zero."""
        if self.masks is None:
            return self.values.copy()
        return np.where(self.masks, self.values, 0.0)


def save_signals_csv(X: np.ndarray, path) -> None:
    """Write signals as CSV, one row per signal, header ``s0..s{n-1}``."""
    X = np.asarray(X, dtype=float)
    header = ",".join(f"s{i}" for i in range(X.shape[0]))
    np.savetxt(path, X.T, fmt="%.17g", delimiter=",", header=header, comments="")


def load_signals_csv(path) -> np.ndarray:
    """Read a signals CSV back into an ``(n, m)`` column-major matrix."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data.T


def save_masks_csv(masks: np.ndarray, path) -> None:
    """Write observation masks as 0/1 CSV with the same layout as signals."""
    masks = np.asarray(masks, dtype=bool)
    header = ",".join(f"s{i}" for i in range(masks.shape[0]))
    np.savetxt(path, masks.T.astype(int), fmt="%d", delimiter=",", header=header, comments="")


def load_masks_csv(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data.T.astype(bool)
