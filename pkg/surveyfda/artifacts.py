"""Persistence of fitted models.

A fit directory holds:

    run.json                 ArtifactMetadata for the whole run
    basis.csv                time, mean, phi_1..phi_K
    draws.csv                binomial draws, or
    slice_<c>.draws.csv      one file per stick-breaking slice
    <draws file>.json        ArtifactMetadata of that draws file

Draws files have one row per retained draw and the columns
``chain, draw, beta[<name>].., b[1]..b[K], tau2, lambda2[1]..lambda2[K]``.
Every float is written with 17 significant digits, which reads back
exactly.
"""

import logging
import os
import re
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .basis import BasisExpansion, CurveGrid
from .errors import DataValidationError
from .models.binomial import PosteriorDraws
from .schemas import ArtifactMetadata

LOG = logging.getLogger("surveyfda")

FLOAT_FORMAT = "%.17g"
RUN_FILE = "run.json"
BASIS_FILE = "basis.csv"
DRAWS_FILE = "draws.csv"

_BETA = re.compile(r"^beta\[(.+)\]$")


def slice_draws_file(c: int) -> str:
    return f"slice_{c}.draws.csv"


def draws_columns(beta_names: list[str], K: int) -> list[str]:
    return (
        ["chain", "draw"]
        + [f"beta[{name}]" for name in beta_names]
        + [f"b[{k + 1}]" for k in range(K)]
        + ["tau2"]
        + [f"lambda2[{k + 1}]" for k in range(K)]
    )


def draws_frame(draws: PosteriorDraws) -> pd.DataFrame:
    chain = np.asarray(draws.chain, dtype=int)
    draw = np.zeros_like(chain)
    for c in np.unique(chain):
        mask = chain == c
        draw[mask] = np.arange(int(mask.sum()))
    values = np.column_stack(
        [
            draws.beta_draws,
            draws.b_draws,
            draws.tau2_draws[:, None],
            draws.lambda2_draws,
        ]
    )
    columns = draws_columns(draws.beta_names, draws.K)
    frame = pd.DataFrame(values, columns=columns[2:])
    frame.insert(0, "draw", draw)
    frame.insert(0, "chain", chain)
    return frame


def write_metadata(metadata: ArtifactMetadata, path: str):
    with open(path, "w", encoding="utf-8") as f:
        f.write(metadata.model_dump_json(indent=2))
        f.write("\n")


def read_metadata(path: str) -> ArtifactMetadata:
    if not os.path.exists(path):
        raise DataValidationError(f"artifact metadata not found: {path}")
    with open(path, encoding="utf-8") as f:
        return ArtifactMetadata.model_validate_json(f.read())


def write_draws(
    draws: PosteriorDraws, path: str, metadata: ArtifactMetadata
):
    frame = draws_frame(draws)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    sidecar = metadata.model_copy(update={"columns": list(frame.columns)})
    write_metadata(sidecar, path + ".json")
    LOG.info(
        "Wrote %d draws to %s",
        draws.M,
        path,
        extra={"event": "artifact", "success": True},
    )


def read_draws(path: str) -> PosteriorDraws:
    if not os.path.exists(path):
        raise DataValidationError(f"draws file not found: {path}")
    frame = pd.read_csv(path, float_precision="round_trip")
    columns = list(frame.columns)
    if columns[:2] != ["chain", "draw"] or "tau2" not in columns:
        raise DataValidationError(
            f"{path}, line 1: not a draws file (columns {columns[:4]}...)"
        )
    beta_cols = [c for c in columns if _BETA.match(c)]
    b_cols = [c for c in columns if c.startswith("b[")]
    lambda_cols = [c for c in columns if c.startswith("lambda2[")]
    expected = draws_columns(
        [_BETA.match(c).group(1) for c in beta_cols], len(b_cols)
    )
    if columns != expected or len(lambda_cols) != len(b_cols):
        raise DataValidationError(
            f"{path}, line 1: unexpected column layout"
        )
    if frame.isna().to_numpy().any():
        raise DataValidationError(f"{path}: draws contain missing values")

    return PosteriorDraws(
        beta_draws=frame[beta_cols].to_numpy(dtype=float),
        b_draws=frame[b_cols].to_numpy(dtype=float).reshape(len(frame), -1),
        tau2_draws=frame["tau2"].to_numpy(dtype=float),
        lambda2_draws=frame[lambda_cols]
        .to_numpy(dtype=float)
        .reshape(len(frame), -1),
        chain=frame["chain"].to_numpy(dtype=int),
        beta_names=[_BETA.match(c).group(1) for c in beta_cols],
    )


def write_basis(expansion: BasisExpansion, path: str):
    frame = pd.DataFrame(
        expansion.basis,
        columns=[f"phi_{k + 1}" for k in range(expansion.K)],
    )
    frame.insert(0, "mean", expansion.mean_curve)
    frame.insert(0, "time", expansion.grid.times)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def read_basis(path: str, metadata: dict) -> BasisExpansion:
    """Rebuild the expansion used by a fit. Training scores are not
    stored, so ``scores`` comes back with zero rows.
    """
    if not os.path.exists(path):
        raise DataValidationError(f"basis file not found: {path}")
    frame = pd.read_csv(path, float_precision="round_trip")
    phi = [c for c in frame.columns if c.startswith("phi_")]
    if list(frame.columns[:2]) != ["time", "mean"]:
        raise DataValidationError(f"{path}, line 1: not a basis file")
    if len(phi) != metadata.get("K", len(phi)):
        raise DataValidationError(
            f"{path}: {len(phi)} basis functions but metadata says "
            f"K={metadata.get('K')}"
        )
    grid = CurveGrid.from_times(frame["time"].to_numpy(float), rescale=False)
    basis = frame[phi].to_numpy(dtype=float).reshape(len(frame), -1)
    return BasisExpansion(
        grid=grid,
        mean_curve=frame["mean"].to_numpy(dtype=float),
        basis=basis,
        scores=np.zeros((0, len(phi))),
        var_explained=np.asarray(metadata.get("var_explained", [])),
        eigenvalues=np.asarray(metadata.get("eigenvalues", [])),
        residual_variance=float(metadata.get("residual_variance", 0.0)),
        threshold=float(metadata.get("threshold", 0.95)),
    )


@dataclass
class FitArtifact:
    """Everything ``fit`` wrote into one output directory."""

    directory: str
    metadata: ArtifactMetadata
    basis: BasisExpansion
    draws: list[PosteriorDraws]

    @classmethod
    def load(cls, directory: str) -> "FitArtifact":
        metadata = read_metadata(os.path.join(directory, RUN_FILE))
        basis = read_basis(
            os.path.join(directory, BASIS_FILE), metadata.basis or {}
        )
        if metadata.category_names:
            files = [
                slice_draws_file(c)
                for c in range(1, len(metadata.category_names))
            ]
        else:
            files = [DRAWS_FILE]
        draws = [read_draws(os.path.join(directory, f)) for f in files]
        for d in draws:
            if d.K != basis.K:
                raise DataValidationError(
                    f"{directory}: draws have K={d.K} but the basis has "
                    f"K={basis.K}"
                )
        return cls(
            directory=directory, metadata=metadata, basis=basis, draws=draws
        )

    @property
    def multinomial(self) -> bool:
        return bool(self.metadata.category_names)
