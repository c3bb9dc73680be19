"""Downstream summaries of fitted models.

Covers protest-vote reports, rank-based quantile comparisons between two
fits, item-response-curve data for single-dimension fits, and chamber pivot
statistics (party medians, floor median, veto pivot).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .model import (
    BillMeta,
    FitResult,
    LegislatorMeta,
    Party,
    Vote,
    VoteMatrix,
    yea_probability,
)

__all__ = [
    "QuantileRow",
    "PivotalSummary",
    "ProtestRow",
    "IRCData",
    "empirical_quantiles",
    "empirical_quantile",
    "protest_report",
    "irc_points",
    "pivotal_quantities",
    "compare_fits",
]


@dataclass(frozen=True)
class QuantileRow:
    legislator_id: str
    quantile_a: float
    quantile_b: float
    abs_delta: float


@dataclass(frozen=True)
class PivotalSummary:
    dem_median: float
    rep_median: float
    interparty_distance: float
    floor_median: float
    veto_pivot: float


@dataclass(frozen=True)
class ProtestRow:
    i: int
    j: int
    legislator_id: str
    bill_id: str
    gamma: float
    observed: Vote
    p_no_shift: float


@dataclass
class IRCData:
    bill_id: str
    curve: list[tuple[float, float]]
    overlay: list[tuple[float, int, bool]] = field(default_factory=list)


def empirical_quantiles(theta_column: np.ndarray) -> np.ndarray:
    """(rank - 0.5) / I with mean ranks for ties; largest value -> near 1."""
    theta_column = np.asarray(theta_column, dtype=float).reshape(-1)
    if theta_column.size < 2:
        raise ValueError("need at least two positions")
    ranks = stats.rankdata(theta_column, method="average")
    return (ranks - 0.5) / theta_column.size


def empirical_quantile(theta_column: np.ndarray, i: int) -> float:
    return float(empirical_quantiles(theta_column)[i])


def protest_report(
    fit: FitResult,
    data: VoteMatrix,
    legislators: list[LegislatorMeta],
    bills: list[BillMeta],
) -> list[ProtestRow]:
    """One row per nonzero shift: ids, shift value, observed vote, and the
    model's yea probability with the shift removed."""
    state = fit.state
    rows = []
    for i, j, g in fit.protest_cells:
        m_no_shift = float(state.alpha[j] + state.beta[j] @ state.theta[i])
        rows.append(ProtestRow(
            i=i,
            j=j,
            legislator_id=legislators[i].id,
            bill_id=bills[j].id,
            gamma=g,
            observed=Vote(int(data.votes[i, j])),
            p_no_shift=float(yea_probability(m_no_shift)),
        ))
    return rows


def irc_points(
    fit: FitResult, j: int, grid: np.ndarray, data: VoteMatrix | None = None
) -> IRCData:
    """Item response curve for bill j on a position grid.

    The overlay lists (estimated position, observed vote code, protest flag)
    per legislator; votes come from ``data`` when supplied, otherwise the
    Missing code is used.
    """
    state = fit.state
    if state.dimension != 1:
        raise ValueError("item response curves are defined only for one dimension")
    i_count, j_count = state.shape
    if not (0 <= j < j_count):
        raise IndexError(f"bill index {j} out of range")
    grid = np.asarray(grid, dtype=float).reshape(-1)
    probs = yea_probability(state.alpha[j] + state.beta[j, 0] * grid)
    flagged = {i for i, jj, _ in fit.protest_cells if jj == j}
    overlay = [
        (
            float(state.theta[i, 0]),
            int(data.votes[i, j]) if data is not None else int(Vote.MISSING),
            i in flagged,
        )
        for i in range(i_count)
    ]
    return IRCData(
        bill_id=data.bills[j].id if data is not None else f"bill-{j}",
        curve=[(float(x), float(p)) for x, p in zip(grid, probs)],
        overlay=overlay,
    )


def pivotal_quantities(
    theta_column: np.ndarray,
    parties: list[Party | None],
    veto_quantile: float = 2.0 / 3.0,
) -> PivotalSummary:
    """Party medians, chamber floor median, and a configurable veto pivot.

    The veto pivot is the position at the given quantile counted from the
    negative (liberal) end; at 0.5 it coincides with the floor median.
    """
    theta_column = np.asarray(theta_column, dtype=float).reshape(-1)
    if len(parties) != theta_column.size:
        raise ValueError("party labels do not match positions")
    if not (0.0 < veto_quantile < 1.0):
        raise ValueError("veto_quantile must lie in (0, 1)")
    dem = theta_column[[p is Party.DEM for p in parties]]
    rep = theta_column[[p is Party.REP for p in parties]]
    if dem.size == 0 or rep.size == 0:
        raise ValueError("both parties must be nonempty")
    dem_median = float(np.median(dem))
    rep_median = float(np.median(rep))
    return PivotalSummary(
        dem_median=dem_median,
        rep_median=rep_median,
        interparty_distance=abs(rep_median - dem_median),
        floor_median=float(np.median(theta_column)),
        veto_pivot=float(np.quantile(theta_column, veto_quantile)),
    )


def compare_fits(
    fit_a: FitResult, fit_b: FitResult, legislators: list[LegislatorMeta],
    dimension: int = 0,
) -> list[QuantileRow]:
    """Per-legislator quantiles under two fits, sorted by |difference| descending.

    Both fits must cover the same roster and be sign-anchored beforehand so
    that "near 1" means the same end of the scale in both.
    """
    ia, _ = fit_a.state.shape
    ib, _ = fit_b.state.shape
    if not (ia == ib == len(legislators)):
        raise ValueError("fits and roster cover different legislator sets")
    qa = empirical_quantiles(fit_a.state.theta[:, dimension])
    qb = empirical_quantiles(fit_b.state.theta[:, dimension])
    rows = [
        QuantileRow(
            legislator_id=m.id,
            quantile_a=float(a),
            quantile_b=float(b),
            abs_delta=float(abs(a - b)),
        )
        for m, a, b in zip(legislators, qa, qb)
    ]
    rows.sort(key=lambda r: (-r.abs_delta, r.legislator_id))
    return rows
