"""Discriminant subspace fitting and projection.

Fitting solves the generalized symmetric eigenproblem

    S_b v = rho (S_w + lambda I) v

with S_w the pooled within-class scatter and S_b the between-class scatter,
keeping the top ``p = min(k - 1, d)`` eigenvectors as basis columns ordered by
non-increasing eigenvalue. Conventions pinned for reproducibility:

 *  eigenvalue ties keep the solver's index order (stable sort);
 *  each basis column is sign-flipped so its largest-magnitude component is
    positive (ties: lowest index wins).

Projection is ``basis.T @ (x - global_mean)``; class centroids stored on the
model are the projected class means. The 3-D review view uses the first three
basis directions translated so the rest centroid sits exactly at the origin,
padding with zeros when p < 3.
"""
from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, RegularizationRequiredError
from .movements import REST, movement_sort_key

MODEL_FORMAT_VERSION = "subspace/v1"

#: lambda = REG_SCALE * trace(S_w) / d when no explicit ridge is given.
REG_SCALE = 1e-3

#: Eigenvalues at or below this (relative to the largest scatter scale) count
#: as zero when flagging a degenerate fit.
_DEGENERATE_TOL = 1e-12


@dataclass
class CalibrationSet:
    """Labeled feature samples grouped per movement, rest class required.

    ``classes`` maps movement id to an (n_i, d) sample block; iteration order
    is canonical (registry order, unknown ids last, lexicographic).
    """

    classes: dict[str, np.ndarray]

    def __post_init__(self):
        if REST not in self.classes:
            raise ValueError("calibration set must include the rest class")
        ordered = sorted(self.classes.items(), key=lambda kv: movement_sort_key(kv[0]))
        self.classes = {}
        dim = None
        for movement, block in ordered:
            arr = np.asarray(block, dtype=np.float64)
            if arr.ndim != 2:
                raise ValueError(f"class {movement!r}: samples must be 2-D")
            if arr.shape[0] < 2:
                raise ValueError(f"class {movement!r}: needs at least 2 samples")
            if dim is None:
                dim = arr.shape[1]
            elif arr.shape[1] != dim:
                raise DimensionMismatchError(
                    f"class {movement!r} has dimension {arr.shape[1]}, expected {dim}"
                )
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"class {movement!r}: samples must be finite")
            self.classes[movement] = arr

    @property
    def movements(self) -> list[str]:
        return list(self.classes)

    @property
    def active_movements(self) -> list[str]:
        return [m for m in self.classes if m != REST]

    @property
    def k(self) -> int:
        return len(self.classes)

    @property
    def dim(self) -> int:
        return next(iter(self.classes.values())).shape[1]

    @property
    def n_total(self) -> int:
        return sum(block.shape[0] for block in self.classes.values())

    def replace(self, movement: str, samples: np.ndarray) -> "CalibrationSet":
        """New set with one movement's samples replaced (others shared)."""
        classes = dict(self.classes)
        classes[movement] = np.asarray(samples, dtype=np.float64)
        return CalibrationSet(classes)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for movement, block in self.classes.items():
            h.update(movement.encode("utf-8"))
            h.update(np.asarray(block.shape, dtype=np.int64).tobytes())
            h.update(np.ascontiguousarray(block).tobytes())
        return h.hexdigest()


@dataclass
class SubspaceModel:
    """Fitted discriminant basis with projected class centroids."""

    movements: list[str]
    basis: np.ndarray          # (d, p)
    global_mean: np.ndarray    # (d,)
    centroids: np.ndarray      # (k, p), rows follow ``movements``
    eigenvalues: np.ndarray    # (p,)
    regularization: float
    provenance: str

    @property
    def d(self) -> int:
        return self.basis.shape[0]

    @property
    def p(self) -> int:
        return self.basis.shape[1]

    @property
    def k(self) -> int:
        return len(self.movements)

    @property
    def degenerate(self) -> bool:
        """True when between-class scatter vanished (all eigenvalues ~ 0)."""
        if self.eigenvalues.size == 0:
            return True
        return bool(np.max(self.eigenvalues) <= _DEGENERATE_TOL)

    def centroid(self, movement: str) -> np.ndarray:
        return self.centroids[self.movements.index(movement)]

    @property
    def rest_centroid(self) -> np.ndarray:
        return self.centroid(REST)


def scatter_matrices(cal: CalibrationSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(S_w, S_b, global_mean) for a calibration set.

    S_w pools unnormalized within-class scatter; S_b weights each squared
    class-mean offset by the class sample count.
    """
    d = cal.dim
    total = np.zeros(d)
    n_total = 0
    means = {}
    for movement, block in cal.classes.items():
        means[movement] = block.mean(axis=0)
        total += block.sum(axis=0)
        n_total += block.shape[0]
    global_mean = total / n_total

    s_w = np.zeros((d, d))
    s_b = np.zeros((d, d))
    for movement, block in cal.classes.items():
        centered = block - means[movement]
        s_w += centered.T @ centered
        offset = means[movement] - global_mean
        s_b += block.shape[0] * np.outer(offset, offset)
    return s_w, s_b, global_mean


def default_regularization(cal: CalibrationSet) -> float:
    s_w, _, _ = scatter_matrices(cal)
    return REG_SCALE * float(np.trace(s_w)) / cal.dim


def fit_lda(cal: CalibrationSet, regularization: float | None = None) -> SubspaceModel:
    """Fit the discriminant subspace from a calibration set.

    ``regularization`` is the ridge added to S_w; ``None`` selects the default
    ``1e-3 * trace(S_w) / d``. An explicit 0 on singular scatter raises
    ``RegularizationRequiredError``.
    """
    s_w, s_b, global_mean = scatter_matrices(cal)
    d = cal.dim
    if regularization is None:
        regularization = REG_SCALE * float(np.trace(s_w)) / d
    if regularization < 0:
        raise ValueError("regularization must be >= 0")

    lhs = s_w + regularization * np.eye(d)
    try:
        # eigh demands the right-hand matrix be positive definite.
        eigvals, eigvecs = scipy.linalg.eigh(s_b, lhs)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        if regularization == 0:
            raise RegularizationRequiredError(
                "pooled within-class scatter is singular; pass a positive regularization"
            ) from exc
        raise

    p = min(cal.k - 1, d)
    order = np.argsort(-eigvals, kind="stable")[:p]
    basis = eigvecs[:, order].copy()
    eigenvalues = eigvals[order].copy()

    # Sign convention: largest-magnitude component positive, lowest index wins ties.
    for j in range(basis.shape[1]):
        col = basis[:, j]
        pivot = int(np.argmax(np.abs(col)))
        if col[pivot] < 0:
            basis[:, j] = -col

    movements = cal.movements
    centroids = np.vstack(
        [basis.T @ (cal.classes[m].mean(axis=0) - global_mean) for m in movements]
    )
    return SubspaceModel(
        movements=movements,
        basis=basis,
        global_mean=global_mean,
        centroids=centroids,
        eigenvalues=eigenvalues,
        regularization=float(regularization),
        provenance=cal.content_hash(),
    )


def project(model: SubspaceModel, x: np.ndarray) -> np.ndarray:
    """Project one feature vector (d,) or a batch (n, d) into the subspace."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape[-1] != model.d:
        raise DimensionMismatchError(f"expected dimension {model.d}, got {arr.shape[-1]}")
    return (arr - model.global_mean) @ model.basis


def reviewer_coords(model: SubspaceModel, x: np.ndarray) -> np.ndarray:
    """First three subspace coordinates translated so rest maps to (0, 0, 0).

    Accepts (d,) or (n, d); pads with zeros when the subspace has p < 3.
    """
    y = project(model, x)
    return _to_view(model, y)


def centroid_view(model: SubspaceModel) -> dict[str, np.ndarray]:
    """Per-movement centroid positions in the 3-D review frame."""
    return {m: _to_view(model, model.centroids[i]) for i, m in enumerate(model.movements)}


def _to_view(model: SubspaceModel, y: np.ndarray) -> np.ndarray:
    rest = model.rest_centroid
    arr = np.atleast_2d(np.asarray(y, dtype=np.float64))
    out = np.zeros((arr.shape[0], 3))
    m = min(3, model.p)
    out[:, :m] = arr[:, :m] - rest[:m]
    return out[0] if np.ndim(y) == 1 else out


def save_model(model: SubspaceModel, path) -> None:
    """Write the versioned binary model container."""
    header = {
        "d": model.d,
        "p": model.p,
        "k": model.k,
        "lambda": model.regularization,
        "movements": model.movements,
        "provenance": model.provenance,
    }
    with open(path, "wb") as fh:
        fh.write((MODEL_FORMAT_VERSION + "\n").encode("ascii"))
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
        for block in (model.basis, model.global_mean, model.centroids, model.eigenvalues):
            fh.write(np.ascontiguousarray(block, dtype="<f8").tobytes())


def load_model(path) -> SubspaceModel:
    """Read a model container written by ``save_model`` (bit-exact round trip)."""
    with open(path, "rb") as fh:
        magic = fh.readline().decode("ascii").strip()
        if magic != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format {magic!r}")
        header = json.loads(fh.readline().decode("utf-8"))
        d, p, k = header["d"], header["p"], header["k"]
        raw = fh.read()
    buf = io.BytesIO(raw)

    def take(shape) -> np.ndarray:
        n = int(np.prod(shape))
        block = np.frombuffer(buf.read(n * 8), dtype="<f8", count=n)
        return block.reshape(shape).copy()

    basis = take((d, p))
    global_mean = take((d,))
    centroids = take((k, p))
    eigenvalues = take((p,))
    return SubspaceModel(
        movements=list(header["movements"]),
        basis=basis,
        global_mean=global_mean,
        centroids=centroids,
        eigenvalues=eigenvalues,
        regularization=float(header["lambda"]),
        provenance=header["provenance"],
    )
