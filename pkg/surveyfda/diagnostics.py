"""Convergence summaries of posterior draws."""

import logging
import warnings

import arviz as az
import numpy as np
import pandas as pd

from .artifacts import draws_frame
from .errors import DataValidationError
from .models.binomial import PosteriorDraws

LOG = logging.getLogger("surveyfda")

SUMMARY_COLUMNS = [
    "parameter",
    "mean",
    "sd",
    "q5",
    "q50",
    "q95",
    "ess",
    "r_hat",
    "degenerate",
]


def _by_chain(values: np.ndarray, chain: np.ndarray) -> np.ndarray:
    """Reshape one parameter's draws to (chains, draws per chain)."""
    ids = np.unique(chain)
    counts = {int((chain == c).sum()) for c in ids}
    if len(counts) != 1:
        raise DataValidationError(
            f"chains have unequal lengths {sorted(counts)}"
        )
    return np.stack([values[chain == c] for c in ids])


def parameter_summary(values: np.ndarray, chain: np.ndarray) -> dict:
    by_chain = _by_chain(np.asarray(values, dtype=float), chain)
    sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
    degenerate = not sd > 0
    if degenerate:
        ess = r_hat = float("nan")
    else:
        with warnings.catch_warnings():
            # Short chains make arviz warn; the numbers are still reported.
            warnings.simplefilter("ignore")
            ess = float(az.ess(by_chain, method="bulk"))
            r_hat = float(az.rhat(by_chain, method="split"))
    q5, q50, q95 = np.quantile(values, [0.05, 0.5, 0.95])
    return {
        "mean": float(values.mean()),
        "sd": sd,
        "q5": float(q5),
        "q50": float(q50),
        "q95": float(q95),
        "ess": ess,
        "r_hat": r_hat,
        "degenerate": degenerate,
    }


def summary_table(draws: PosteriorDraws) -> pd.DataFrame:
    """Per parameter: mean, sd, 5/50/95% quantiles, bulk ESS, split R-hat.

    Parameters whose draws are all equal are flagged ``degenerate`` and get
    no ESS or R-hat.
    """
    frame = draws_frame(draws)
    chain = frame["chain"].to_numpy()
    rows = []
    for name in frame.columns[2:]:
        row = parameter_summary(frame[name].to_numpy(dtype=float), chain)
        if row["degenerate"]:
            LOG.warning(
                "Draws of %s are constant",
                name,
                extra={"event": "diagnostics"},
            )
        rows.append({"parameter": name, **row})
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def trace_table(draws: PosteriorDraws) -> pd.DataFrame:
    """Draws in long form: one row per (parameter, chain, draw)."""
    frame = draws_frame(draws)
    trace = frame.melt(
        id_vars=["chain", "draw"], var_name="parameter", value_name="value"
    )
    return trace[["parameter", "chain", "draw", "value"]]
