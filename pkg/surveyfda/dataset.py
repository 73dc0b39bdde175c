"""Loading and validating the two input tables of a run.

The curves file holds one wide row per unit: the id column followed by
one column per grid point, whose header is the (numeric) time of that
point. The scalars file holds one row per unit with the id, response,
optional trial count, survey weight, optional category label and any
scalar covariates, as named by the run's ColumnContract.

Nothing partially validated leaves this module: every check runs before
a FunctionalDataset is returned.
"""

import logging
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .basis import CurveGrid
from .errors import DataValidationError
from .schemas import ColumnContract, Mode, RunConfig

LOG = logging.getLogger("surveyfda")

INTERCEPT = "intercept"

# Data rows start on the line after the header.
FIRST_DATA_LINE = 2


@dataclass
class FunctionalDataset:
    unit_ids: list[str]
    curves: np.ndarray
    times: np.ndarray
    raw_weights: np.ndarray
    covariates: pd.DataFrame
    Z: np.ndarray | None = None
    trials: np.ndarray | None = None
    labels: np.ndarray | None = None
    category_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.curves = np.asarray(self.curves, dtype=float)
        self.times = np.asarray(self.times, dtype=float)
        self.raw_weights = np.asarray(self.raw_weights, dtype=float)
        n = len(self.unit_ids)
        if self.curves.shape != (n, self.times.shape[0]):
            raise DataValidationError(
                f"curves have shape {self.curves.shape}, expected "
                f"({n}, {self.times.shape[0]})"
            )
        if len(self.covariates) != n:
            raise DataValidationError(
                f"{len(self.covariates)} covariate rows for {n} units"
            )
        for name in ("raw_weights", "Z", "trials", "labels"):
            value = getattr(self, name)
            if value is not None and np.shape(value) != (n,):
                raise DataValidationError(
                    f"{name} must have length {n}, got {np.shape(value)}"
                )
        if self.Z is not None and self.trials is None:
            self.trials = np.ones(n)

    @property
    def n(self) -> int:
        return len(self.unit_ids)

    @property
    def T(self) -> int:
        return int(self.times.shape[0])

    @property
    def grid(self) -> CurveGrid:
        return CurveGrid.from_times(self.times)

    @property
    def covariate_names(self) -> list[str]:
        return [str(c) for c in self.covariates.columns]

    def covariate_scaling(self) -> dict[str, list[float]]:
        """Mean and standard deviation (divisor n) of every covariate.
        Constant covariates get a standard deviation of 1.
        """
        out = {}
        for name in self.covariate_names:
            values = self.covariates[name].to_numpy(dtype=float)
            sd = float(values.std())
            out[name] = [float(values.mean()), sd if sd > 0 else 1.0]
        return out

    def design_matrix(
        self,
        intercept: bool = True,
        scaling: dict[str, list[float]] | None = None,
    ) -> tuple[np.ndarray, list[str]]:
        """Scalar design matrix and its column names.

        With ``scaling``, each covariate is centered and scaled by the
        given (mean, sd) pair.
        """
        columns = []
        names = []
        if intercept:
            columns.append(np.ones(self.n))
            names.append(INTERCEPT)
        for name in self.covariate_names:
            values = self.covariates[name].to_numpy(dtype=float)
            if scaling is not None:
                if name not in scaling:
                    raise DataValidationError(
                        f"no scaling recorded for covariate {name!r}"
                    )
                mean, sd = scaling[name]
                values = (values - mean) / sd
            columns.append(values)
            names.append(name)
        if not columns:
            raise DataValidationError(
                "the model has no scalar terms; enable the intercept or "
                "name at least one covariate"
            )
        return np.column_stack(columns), names

    def responses(self) -> tuple[np.ndarray, np.ndarray]:
        if self.Z is None or self.trials is None:
            raise DataValidationError("dataset carries no binomial response")
        return self.Z, self.trials

    def subset(self, indices) -> "FunctionalDataset":
        indices = np.asarray(indices, dtype=int)

        def pick(value):
            return None if value is None else value[indices]

        return FunctionalDataset(
            unit_ids=[self.unit_ids[i] for i in indices],
            curves=self.curves[indices],
            times=self.times.copy(),
            raw_weights=self.raw_weights[indices],
            covariates=self.covariates.iloc[indices].reset_index(drop=True),
            Z=pick(self.Z),
            trials=pick(self.trials),
            labels=pick(self.labels),
            category_names=list(self.category_names),
        )

    def to_files(
        self,
        curves_path: str,
        scalars_path: str,
        columns: ColumnContract | None = None,
    ):
        """Write the dataset in the layout :func:`ingest` reads.

        Values are written with 17 significant digits so that reading them
        back reproduces every float exactly.
        """
        columns = columns or ColumnContract()
        sep = columns.delimiter

        curves = pd.DataFrame(
            self.curves, columns=[format(t, ".17g") for t in self.times]
        )
        curves.insert(0, columns.id_column, self.unit_ids)
        curves.to_csv(curves_path, sep=sep, index=False, float_format="%.17g")

        scalars = pd.DataFrame({columns.id_column: self.unit_ids})
        if self.Z is not None:
            scalars[columns.response_column] = self.Z.astype(int)
        if columns.trials_column and self.trials is not None:
            scalars[columns.trials_column] = self.trials.astype(int)
        scalars[columns.weight_column] = self.raw_weights
        if columns.category_column and self.labels is not None:
            scalars[columns.category_column] = [
                self.category_names[int(c) - 1] for c in self.labels
            ]
        for name in self.covariate_names:
            scalars[name] = self.covariates[name].to_numpy()
        scalars.to_csv(
            scalars_path, sep=sep, index=False, float_format="%.17g"
        )


def _read_table(path: str, columns: ColumnContract) -> pd.DataFrame:
    if not path or not os.path.exists(path):
        raise DataValidationError(f"input file not found: {path}")
    try:
        frame = pd.read_csv(
            path,
            sep=columns.delimiter,
            dtype={columns.id_column: str},
            skip_blank_lines=False,
            float_precision="round_trip",
        )
    except pd.errors.ParserError as exc:
        # The parser reports the offending line itself.
        raise DataValidationError(f"{path}: ragged row: {exc}") from exc
    except (pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataValidationError(f"{path}: cannot parse: {exc}") from exc

    if columns.id_column not in frame.columns:
        raise DataValidationError(
            f"{path}, line 1: missing id column {columns.id_column!r}"
        )
    return frame


def _check_ids(frame: pd.DataFrame, path: str, id_column: str) -> list[str]:
    ids = frame[id_column]
    missing = np.flatnonzero(ids.isna().to_numpy())
    if missing.size:
        line = int(missing[0]) + FIRST_DATA_LINE
        raise DataValidationError(f"{path}, line {line}: missing unit id")
    dupes = np.flatnonzero(ids.duplicated().to_numpy())
    if dupes.size:
        line = int(dupes[0]) + FIRST_DATA_LINE
        raise DataValidationError(
            f"{path}, line {line}: duplicate unit id {ids.iloc[dupes[0]]!r}"
        )
    return [str(v) for v in ids]


def _numeric(frame: pd.DataFrame, path: str) -> np.ndarray:
    """Convert every column to float, citing the first bad cell."""
    if frame.shape[1] == 0:
        return np.zeros((len(frame), 0))
    values = frame.apply(pd.to_numeric, errors="coerce").to_numpy(float)
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        row, col = (int(v) for v in bad[0])
        raise DataValidationError(
            f"{path}, line {row + FIRST_DATA_LINE}: missing or non-finite "
            f"value {frame.iat[row, col]!r} in column {frame.columns[col]!r}"
        )
    return values


def _read_curves(path: str, columns: ColumnContract):
    frame = _read_table(path, columns)
    ids = _check_ids(frame, path, columns.id_column)
    values = frame.drop(columns=[columns.id_column])
    try:
        times = np.array([float(c) for c in values.columns])
    except ValueError as exc:
        raise DataValidationError(
            f"{path}, line 1: curve column headers must be numeric times "
            f"({exc})"
        ) from exc
    if times.shape[0] < 2:
        raise DataValidationError(
            f"{path}, line 1: curves need at least 2 grid points"
        )
    return ids, times, _numeric(values, path)


def _apply_log1p(curves: np.ndarray, path: str) -> np.ndarray:
    bad = np.argwhere(curves <= -1.0)
    if bad.size:
        row, col = (int(v) for v in bad[0])
        raise DataValidationError(
            f"{path}, line {row + FIRST_DATA_LINE}: log(1+x) is undefined "
            f"for x={curves[row, col]} at grid point {col + 1}"
        )
    return np.log1p(curves)


def _category_labels(
    values: pd.Series, categories: list[str], path: str
) -> np.ndarray:
    lookup = {name: c + 1 for c, name in enumerate(categories)}
    labels = np.empty(len(values), dtype=int)
    for row, value in enumerate(values):
        key = str(value).strip()
        if key not in lookup:
            raise DataValidationError(
                f"{path}, line {row + FIRST_DATA_LINE}: category {key!r} "
                f"is not one of {categories}"
            )
        labels[row] = lookup[key]
    return labels


def _check_counts(frame: pd.DataFrame, columns: ColumnContract, path: str):
    names = [columns.response_column]
    if columns.trials_column:
        names.append(columns.trials_column)
    counts = _numeric(frame[names], path)
    Z = counts[:, 0]
    trials = counts[:, 1] if columns.trials_column else np.ones(len(frame))
    bad = np.flatnonzero(
        (Z != np.round(Z))
        | (trials != np.round(trials))
        | (Z < 0)
        | (trials < 1)
        | (Z > trials)
    )
    if bad.size:
        row = int(bad[0])
        raise DataValidationError(
            f"{path}, line {row + FIRST_DATA_LINE}: response {Z[row]} is "
            f"not a count within 0..{trials[row]}"
        )
    return Z, trials


def ingest(
    curves_file: str | None,
    scalars_file: str | None,
    config: RunConfig,
    outcomes: bool = True,
) -> FunctionalDataset:
    """Read, align and validate the curves and scalars files.

    Scalars rows are reordered to follow the curves file. With
    ``outcomes=False`` (new units to predict for) responses and category
    labels are neither required nor read.
    """
    columns = config.columns
    if not curves_file or not scalars_file:
        raise DataValidationError(
            "both a curves file and a scalars file are required"
        )

    ids, times, curves = _read_curves(curves_file, columns)
    try:
        CurveGrid.from_times(times)
    except DataValidationError as exc:
        raise exc.annotate(f"{curves_file}, line 1")
    if config.log1p:
        curves = _apply_log1p(curves, curves_file)

    frame = _read_table(scalars_file, columns)
    scalar_ids = _check_ids(frame, scalars_file, columns.id_column)
    position = {unit: row for row, unit in enumerate(scalar_ids)}
    for row, unit in enumerate(ids):
        if unit not in position:
            raise DataValidationError(
                f"{curves_file}, line {row + FIRST_DATA_LINE}: unit "
                f"{unit!r} has no row in {scalars_file}"
            )
    if len(scalar_ids) != len(ids):
        extra = sorted(set(scalar_ids) - set(ids))
        raise DataValidationError(
            f"{scalars_file}: units {extra[:5]} have no curve in "
            f"{curves_file}"
        )
    order = np.array([position[unit] for unit in ids], dtype=int)

    binomial = config.mode == Mode.binomial
    has_response = outcomes and columns.response_column in frame.columns
    labelled = outcomes and not binomial
    has_weight = outcomes or columns.weight_column in frame.columns
    required = list(columns.covariates)
    if has_weight:
        required.append(columns.weight_column)
    if (outcomes and binomial) or has_response:
        required.append(columns.response_column)
    if columns.trials_column and has_response:
        required.append(columns.trials_column)
    if labelled:
        required.append(str(columns.category_column))
    absent = [name for name in required if name not in frame.columns]
    if absent:
        raise DataValidationError(
            f"{scalars_file}, line 1: missing columns {absent}"
        )

    # Validation runs in file order so that errors cite the right line.
    numeric = _numeric(frame[list(columns.covariates)], scalars_file)
    if has_weight:
        weights = _numeric(frame[[columns.weight_column]], scalars_file)[:, 0]
    else:
        weights = np.ones(len(frame))
    bad = np.flatnonzero(weights <= 0)
    if bad.size:
        raise DataValidationError(
            f"{scalars_file}, line {int(bad[0]) + FIRST_DATA_LINE}: survey "
            f"weight must be positive, got {weights[bad[0]]}"
        )

    Z = trials = None
    if has_response:
        Z, trials = _check_counts(frame, columns, scalars_file)
        Z, trials = Z[order], trials[order]

    labels = None
    if labelled:
        labels = _category_labels(
            frame[str(columns.category_column)],
            config.categories,
            scalars_file,
        )[order]

    dataset = FunctionalDataset(
        unit_ids=ids,
        curves=curves,
        times=times,
        raw_weights=weights[order],
        covariates=pd.DataFrame(
            numeric[order], columns=list(columns.covariates)
        ),
        Z=Z,
        trials=trials,
        labels=labels,
        category_names=list(config.categories) if labels is not None else [],
    )

    LOG.info(
        "Ingested %d units on a %d-point grid with %d covariates",
        dataset.n,
        dataset.T,
        len(dataset.covariate_names),
        extra={"event": "ingest", "success": True},
    )
    return dataset
