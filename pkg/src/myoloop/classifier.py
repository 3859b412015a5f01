"""Nearest rest-anchored segment classification in the discriminant subspace.

Each active movement gets an axis: the segment from the rest centroid to that
movement's centroid, parameterized ``L_i(t) = anchor + t * (tip - anchor)``
with ``t`` clamped to [0, 1]. A query point is labeled by the axis minimizing
the Euclidean distance to its clamped orthogonal projection; the label falls
back to rest when the winning parameter t* sits below ``t_rest`` (all axes
share the rest anchor, so near-rest activity projects near t = 0 everywhere).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import math

import numpy as np

from .errors import DegenerateAxisError, DimensionMismatchError, EmptyAxisSetError
from .movements import REST
from .signal import FeatureVector
from .subspace import SubspaceModel, project

DEFAULT_T_REST = 0.15

#: Minimum rest-to-centroid distance for a usable axis.
AXIS_EPS = 1e-9


@dataclass
class Axis:
    movement: str
    anchor: np.ndarray
    tip: np.ndarray

    @property
    def offset(self) -> np.ndarray:
        return self.tip - self.anchor

    def point_at(self, t: float) -> np.ndarray:
        return self.anchor + t * self.offset


@dataclass
class AxisSet:
    """Per-movement axes sharing the rest anchor, in canonical movement order."""

    axes: list[Axis]

    def __post_init__(self):
        if not self.axes:
            raise EmptyAxisSetError("axis set is empty")
        self._offsets = np.vstack([a.offset for a in self.axes])
        self._norms_sq = np.sum(self._offsets**2, axis=1)

    @property
    def anchor(self) -> np.ndarray:
        return self.axes[0].anchor

    @property
    def movements(self) -> list[str]:
        return [a.movement for a in self.axes]

    @property
    def dim(self) -> int:
        return self.anchor.shape[0]


@dataclass
class Decision:
    """One classification: label plus winning-axis geometry."""

    label: str
    winning_axis: str | None
    t_star: float
    distance: float
    margin: float


def build_axes(model: SubspaceModel, eps: float = AXIS_EPS) -> AxisSet:
    """One axis per active movement, anchored at the rest centroid."""
    anchor = model.rest_centroid
    axes = []
    for movement in model.movements:
        if movement == REST:
            continue
        tip = model.centroid(movement)
        if float(np.linalg.norm(tip - anchor)) < eps:
            raise DegenerateAxisError(movement)
        axes.append(Axis(movement=movement, anchor=anchor, tip=tip))
    return AxisSet(axes=axes)


def classify(axes: AxisSet, y: np.ndarray, t_rest: float = DEFAULT_T_REST) -> Decision:
    """Label a subspace point by its nearest axis segment.

    Distance ties pick the earliest axis (lowest movement id). The label is
    rest iff the winner's clamped parameter is strictly below ``t_rest``.
    """
    point = np.asarray(y, dtype=np.float64)
    if point.shape != (axes.dim,):
        raise DimensionMismatchError(f"expected point of dimension {axes.dim}, got {point.shape}")

    rel = point - axes.anchor
    t = np.clip((axes._offsets @ rel) / axes._norms_sq, 0.0, 1.0)
    residual = rel[None, :] - t[:, None] * axes._offsets
    dist = np.sqrt(np.sum(residual**2, axis=1))

    win = int(np.argmin(dist))  # first minimum = lowest movement id
    if dist.shape[0] > 1:
        runner_up = float(np.min(np.delete(dist, win)))
        margin = runner_up - float(dist[win])
    else:
        margin = math.inf
    t_win = float(t[win])
    movement = axes.axes[win].movement
    label = REST if t_win < t_rest else movement
    return Decision(
        label=label,
        winning_axis=movement,
        t_star=t_win,
        distance=float(dist[win]),
        margin=margin,
    )


def decision_stream(
    model: SubspaceModel,
    axes: AxisSet,
    features: Iterable[FeatureVector | np.ndarray],
    t_rest: float = DEFAULT_T_REST,
    smooth: int = 0,
) -> Iterator[Decision]:
    """Classify a feature stream in order, one decision per input.

    ``smooth`` > 1 enables majority voting over the last ``smooth`` raw
    labels; vote ties keep the previously emitted label when it is among the
    tied candidates, otherwise the tied label seen most recently wins. Only
    the label field is smoothed; geometry stays per-window.
    """
    window: deque[str] = deque(maxlen=smooth if smooth > 1 else 1)
    previous: str | None = None
    for item in features:
        values = item.values if isinstance(item, FeatureVector) else item
        decision = classify(axes, project(model, values), t_rest=t_rest)
        if smooth > 1:
            window.append(decision.label)
            voted = _majority(window, previous)
            previous = voted
            if voted != decision.label:
                decision = Decision(
                    label=voted,
                    winning_axis=decision.winning_axis,
                    t_star=decision.t_star,
                    distance=decision.distance,
                    margin=decision.margin,
                )
        yield decision


def _majority(window: Sequence[str], previous: str | None) -> str:
    counts: dict[str, int] = {}
    for label in window:
        counts[label] = counts.get(label, 0) + 1
    best = max(counts.values())
    tied = [label for label, c in counts.items() if c == best]
    if len(tied) == 1:
        return tied[0]
    if previous in tied:
        return previous
    for label in reversed(window):
        if label in tied:
            return label
    return tied[0]
