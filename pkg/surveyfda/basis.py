"""Empirical orthonormal basis for the functional covariate.

Curves live on a uniform grid over [0, 1]; inner products are Riemann
sums with weight ``step``. The basis is obtained from the eigenvectors of
the sample covariance of the centered curves, computed through an SVD of
``sqrt(step) * centered`` so that eigencurves are orthonormal under the
grid inner product:

    step * basis.T @ basis == I_K

Each eigencurve is flipped so that its entry of largest magnitude is
positive.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DataValidationError, DegenerateDataError

LOG = logging.getLogger("surveyfda")

SIGN_CONVENTION = "largest-magnitude entry positive"
TIME_RESCALING = "grid rescaled linearly to [0, 1]"

# Cumulative shares within this distance of the threshold count as reaching
# it, so that threshold=1.0 retains exactly the numerical rank.
SHARE_TOLERANCE = 1e-10


@dataclass(frozen=True)
class CurveGrid:
    times: np.ndarray
    step: float

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "step", float(self.step))
        if times.ndim != 1 or times.shape[0] < 2:
            raise DataValidationError("a curve grid needs at least 2 points")
        if not np.all(np.isfinite(times)):
            raise DataValidationError("curve grid times must be finite")
        diffs = np.diff(times)
        if np.any(diffs <= 0):
            raise DataValidationError(
                "curve grid times must be strictly increasing"
            )
        expected = (times[-1] - times[0]) / (times.shape[0] - 1)
        if abs(self.step - expected) > 1e-12 or np.any(
            np.abs(diffs - expected) > 1e-9 * max(1.0, abs(expected))
        ):
            raise DataValidationError(
                "curve grid must be uniform; non-uniform grids are not "
                "supported"
            )

    @property
    def size(self) -> int:
        return int(np.asarray(self.times).shape[0])

    @classmethod
    def from_times(cls, times, rescale: bool = True) -> "CurveGrid":
        """Build a grid from raw time points, by default mapping them
        linearly onto [0, 1].
        """
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or times.shape[0] < 2:
            raise DataValidationError("a curve grid needs at least 2 points")
        if rescale:
            span = times[-1] - times[0]
            if not span > 0:
                raise DataValidationError(
                    "curve grid times must be strictly increasing"
                )
            times = (times - times[0]) / span
        step = (times[-1] - times[0]) / (times.shape[0] - 1)
        return cls(times=times, step=float(step))

    @classmethod
    def unit_interval(cls, size: int) -> "CurveGrid":
        return cls.from_times(np.linspace(0.0, 1.0, size), rescale=False)


@dataclass(frozen=True)
class BasisExpansion:
    grid: CurveGrid
    mean_curve: np.ndarray
    basis: np.ndarray
    scores: np.ndarray
    var_explained: np.ndarray
    eigenvalues: np.ndarray
    residual_variance: float
    threshold: float

    @property
    def K(self) -> int:
        return int(self.basis.shape[1])

    @property
    def step(self) -> float:
        return self.grid.step

    def metadata(self) -> dict:
        return {
            "K": self.K,
            "grid_size": self.grid.size,
            "threshold": self.threshold,
            "var_explained": [float(v) for v in self.var_explained],
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "residual_variance": self.residual_variance,
            "sign_convention": SIGN_CONVENTION,
            "time_rescaling": TIME_RESCALING,
            "centering": "unweighted sample mean",
        }


def _check_finite(matrix: np.ndarray, what: str):
    bad = np.argwhere(~np.isfinite(matrix))
    if bad.size:
        row, col = (int(v) for v in bad[0])
        raise DataValidationError(
            f"non-finite {what} value at row {row}, column {col}"
        )


def center_curves(curves: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Subtract the (unweighted) pointwise mean curve."""
    curves = np.asarray(curves, dtype=float)
    if curves.ndim != 2 or curves.shape[0] < 2:
        raise DataValidationError(
            f"need an (n x T) curve matrix with n >= 2, got {curves.shape}"
        )
    _check_finite(curves, "curve")

    mean_curve = curves.mean(axis=0)
    return mean_curve, curves - mean_curve


def _orient(vectors: np.ndarray) -> np.ndarray:
    # Flip each column so its entry of largest magnitude is positive.
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def compute_fpca(
    centered: np.ndarray,
    grid: CurveGrid,
    threshold: float = 0.95,
    mean_curve: np.ndarray | None = None,
) -> BasisExpansion:
    """Functional principal components of already-centered curves.

    K is the smallest number of components whose cumulative eigenvalue
    share reaches ``threshold``.
    """
    centered = np.asarray(centered, dtype=float)
    if centered.ndim != 2 or centered.shape[0] < 2:
        raise DataValidationError(
            f"need an (n x T) curve matrix with n >= 2, got {centered.shape}"
        )
    if centered.shape[1] != grid.size:
        raise DataValidationError(
            f"curves have {centered.shape[1]} points but the grid has "
            f"{grid.size}"
        )
    if not 0.0 < threshold <= 1.0:
        raise DataValidationError(
            f"variance threshold must be in (0, 1], got {threshold}"
        )
    _check_finite(centered, "curve")

    n = centered.shape[0]
    root_step = np.sqrt(grid.step)
    _, singular, vt = np.linalg.svd(centered * root_step, full_matrices=False)
    eigenvalues = singular**2 / (n - 1)
    total = float(eigenvalues.sum())
    if total <= 0.0:
        raise DegenerateDataError(
            "centered curves are identically zero; there is no variance "
            "to explain"
        )

    shares = np.minimum(np.cumsum(eigenvalues) / total, 1.0)
    K = int(np.argmax(shares >= threshold - SHARE_TOLERANCE)) + 1

    vectors = _orient(vt[:K].T)
    basis = vectors / root_step
    scores = grid.step * centered @ basis

    if mean_curve is None:
        mean_curve = np.zeros(grid.size)

    LOG.info(
        "Retained %d functional components explaining %.4f of variance",
        K,
        shares[K - 1],
        extra={"event": "basis"},
    )

    return BasisExpansion(
        grid=grid,
        mean_curve=np.asarray(mean_curve, dtype=float),
        basis=basis,
        scores=scores,
        var_explained=shares[:K],
        eigenvalues=eigenvalues[:K],
        residual_variance=float(eigenvalues[K:].sum()),
        threshold=threshold,
    )


def fit_basis(
    curves: np.ndarray, grid: CurveGrid, threshold: float = 0.95
) -> BasisExpansion:
    """Center the curves and compute their FPCA in one step."""
    mean_curve, centered = center_curves(curves)
    return compute_fpca(centered, grid, threshold, mean_curve=mean_curve)


def project_curves(
    curves: np.ndarray, expansion: BasisExpansion
) -> np.ndarray:
    """Scores of each row of ``curves`` in the expansion's basis."""
    curves = np.atleast_2d(np.asarray(curves, dtype=float))
    if curves.shape[1] != expansion.grid.size:
        raise DataValidationError(
            f"curve has {curves.shape[1]} points but the basis grid has "
            f"{expansion.grid.size}"
        )
    _check_finite(curves, "curve")
    return expansion.step * (curves - expansion.mean_curve) @ expansion.basis


def project_curve(curve: np.ndarray, expansion: BasisExpansion) -> np.ndarray:
    curve = np.asarray(curve, dtype=float)
    if curve.ndim != 1:
        raise DataValidationError("project_curve expects a single curve")
    return project_curves(curve[None, :], expansion)[0]


def reconstruct_eta(
    b_draws: np.ndarray, expansion: BasisExpansion
) -> np.ndarray:
    """Evaluate ``eta(t) = sum_k b(k) phi_k(t)`` for each row of draws."""
    b_draws = np.atleast_2d(np.asarray(b_draws, dtype=float))
    if b_draws.shape[1] != expansion.K:
        raise DataValidationError(
            f"coefficient draws have {b_draws.shape[1]} columns but the "
            f"basis has K={expansion.K}"
        )
    return b_draws @ expansion.basis.T
