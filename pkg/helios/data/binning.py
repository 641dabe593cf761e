"""
Power Binning
=============

Solar power is turned into N_c ordinal classes by equal-width bins over
[0, max training power]. Each domain fits its own edges from its own training
split; nothing about one domain's power distribution is reused for another.
"""

from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from ..exceptions import BinningError
from ..logging import get_logger

logger = get_logger("helios.data.binning")


@dataclass(frozen=True)
class BinningScheme:
    """Equal-width class edges in kW.

    Attributes:
        n_classes: number of classes N_c
        edges: n_classes + 1 ascending edges, edges[0] == 0
        domain_id: location the edges were fitted on
    """

    n_classes: int
    edges: Tuple[float, ...]
    domain_id: str = ""

    def __post_init__(self):
        edges = tuple(float(e) for e in self.edges)
        object.__setattr__(self, "edges", edges)
        if self.n_classes < 2:
            raise BinningError(f"n_classes must be >= 2, got {self.n_classes}")
        if len(edges) != self.n_classes + 1:
            raise BinningError(f"expected {self.n_classes + 1} edges, got {len(edges)}")
        if edges[0] != 0.0:
            raise BinningError(f"first edge must be 0, got {edges[0]}")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise BinningError(f"edges must be strictly ascending: {edges}")

    @property
    def upper(self) -> float:
        return self.edges[-1]

    def to_dict(self) -> Dict[str, Any]:
        return {"n_classes": self.n_classes, "edges": list(self.edges), "domain_id": self.domain_id}

    @classmethod
    def from_dict(cls, payload: dict) -> 'BinningScheme':
        try:
            return cls(n_classes=int(payload["n_classes"]), edges=tuple(payload["edges"]),
                       domain_id=str(payload.get("domain_id", "")))
        except (KeyError, TypeError, ValueError) as e:
            raise BinningError(f"invalid binning payload: {e}")


def fit_bins(power: Sequence[float], n_classes: int, domain_id: str = "") -> BinningScheme:
    """
    Fit equal-width edges over [0, max(power)].

    Raises:
        BinningError: If power is empty or negative, n_classes < 2, or the maximum
            power is 0 (a plant that never produced)
    """
    if n_classes < 2:
        raise BinningError(f"n_classes must be >= 2, got {n_classes}")
    values = np.asarray(power, dtype=np.float64)
    if values.size == 0:
        raise BinningError("cannot fit bins on an empty power series")
    if np.isnan(values).any():
        raise BinningError("power series contains NaN")
    if (values < 0).any():
        raise BinningError("power values must be >= 0")
    top = float(values.max())
    if top == 0.0:
        raise BinningError("maximum power is 0; degenerate plant")

    edges = np.linspace(0.0, top, n_classes + 1)
    # linspace can land a hair off the observed max
    edges[-1] = top
    scheme = BinningScheme(n_classes=n_classes, edges=tuple(edges.tolist()), domain_id=domain_id)
    logger.debug("Fitted power bins", extra=scheme.to_dict())
    return scheme


def assign_labels(power: Sequence[float], scheme: BinningScheme) -> Tuple[np.ndarray, int]:
    """
    Map power values to class indices.

    edges[i] <= p < edges[i+1] gives class i; p == edges[-1] gives the top class;
    p > edges[-1] is clamped to the top class and counted.

    Returns:
        (int64 labels, number of clamped values)

    Raises:
        BinningError: On negative or NaN power
    """
    values = np.asarray(power, dtype=np.float64)
    if np.isnan(values).any():
        raise BinningError("power series contains NaN")
    if (values < 0).any():
        raise BinningError("power values must be >= 0")
    edges = np.asarray(scheme.edges)
    labels = np.searchsorted(edges, values, side="right") - 1
    labels = np.clip(labels, 0, scheme.n_classes - 1).astype(np.int64)
    n_clamped = int((values > scheme.upper).sum())
    if n_clamped:
        logger.warning("Power above the top bin edge clamped to the top class",
                       extra={"count": n_clamped, "upper": scheme.upper, "domain_id": scheme.domain_id})
    return labels, n_clamped


def assign_label(power: float, scheme: BinningScheme) -> int:
    """Class index of a single power value (see :func:`assign_labels`)."""
    labels, _ = assign_labels([power], scheme)
    return int(labels[0])
