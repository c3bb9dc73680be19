"""Sequential screening of raw roll-call matrices.

One pass, in a fixed order: explicit exclusions, lopsided bills, sparse
legislators, unanimous bills.  Each rule sees the matrix as left by the rule
before it (not iterated to a fixpoint), and the output is always a sub-matrix
of the input with cell values untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import Vote, VoteMatrix

__all__ = [
    "PreprocessConfig",
    "PreprocessReport",
    "EmptyMatrixError",
    "filter_lopsided",
    "filter_sparse_legislators",
    "drop_unanimous",
    "pipeline",
]


class EmptyMatrixError(RuntimeError):
    """A screening stage removed every legislator or bill."""

    def __init__(self, report: "PreprocessReport"):
        super().__init__("preprocessing removed every legislator or bill")
        self.report = report


@dataclass
class PreprocessConfig:
    lopsided_threshold: float = 0.01
    min_participation: float = 0.10
    drop_unanimous: bool = True
    exclude_legislators: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not (0.0 <= self.lopsided_threshold < 1.0):
            raise ValueError("lopsided_threshold must lie in [0, 1)")
        if not (0.0 <= self.min_participation <= 1.0):
            raise ValueError("min_participation must lie in [0, 1]")


@dataclass
class PreprocessReport:
    dropped_bills_lopsided: list[str] = field(default_factory=list)
    dropped_legislators_sparse: list[str] = field(default_factory=list)
    dropped_bills_unanimous: list[str] = field(default_factory=list)
    excluded_ids: list[str] = field(default_factory=list)
    input_dims: tuple[int, int] = (0, 0)
    output_dims: tuple[int, int] = (0, 0)


def _subset(data: VoteMatrix, rows: np.ndarray | None = None,
            cols: np.ndarray | None = None) -> VoteMatrix:
    votes = data.votes
    legislators = data.legislators
    bills = data.bills
    if rows is not None:
        votes = votes[rows, :]
        legislators = [legislators[i] for i in np.flatnonzero(rows)]
    if cols is not None:
        votes = votes[:, cols]
        bills = [bills[j] for j in np.flatnonzero(cols)]
    return VoteMatrix(votes, legislators, bills)


def _lopsided_keep(data: VoteMatrix, threshold: float) -> np.ndarray:
    yeas = (data.votes == Vote.YEA).sum(axis=0)
    nays = (data.votes == Vote.NAY).sum(axis=0)
    total = yeas + nays
    minority = np.minimum(yeas, nays) / np.maximum(total, 1)
    return (total > 0) & (minority > threshold)


def filter_lopsided(data: VoteMatrix, threshold: float) -> tuple[VoteMatrix, list[str]]:
    """Drop bills whose minority side got <= threshold of the observed votes.

    Missing cells are excluded from the denominator; bills with no observed
    votes at all are dropped and reported too.  The boundary is inclusive:
    a minority share exactly at the threshold is dropped.
    """
    if not (0.0 <= threshold < 1.0):
        raise ValueError("threshold must lie in [0, 1)")
    keep = _lopsided_keep(data, threshold)
    dropped = [data.bills[j].id for j in np.flatnonzero(~keep)]
    if not keep.any():
        raise EmptyMatrixError(PreprocessReport(
            dropped_bills_lopsided=dropped,
            input_dims=data.shape, output_dims=(data.shape[0], 0)))
    return _subset(data, cols=keep), dropped


def _sparse_keep(data: VoteMatrix, min_participation: float) -> np.ndarray:
    observed = (data.votes != Vote.MISSING).sum(axis=1)
    return observed / data.n_bills >= min_participation


def filter_sparse_legislators(
    data: VoteMatrix, min_participation: float
) -> tuple[VoteMatrix, list[str]]:
    """Drop legislators voting on strictly fewer than the required share of bills."""
    keep = _sparse_keep(data, min_participation)
    dropped = [data.legislators[i].id for i in np.flatnonzero(~keep)]
    if not keep.any():
        raise EmptyMatrixError(PreprocessReport(
            dropped_legislators_sparse=dropped,
            input_dims=data.shape, output_dims=(0, data.shape[1])))
    return _subset(data, rows=keep), dropped


def _unanimous_keep(data: VoteMatrix) -> np.ndarray:
    yeas = (data.votes == Vote.YEA).sum(axis=0)
    nays = (data.votes == Vote.NAY).sum(axis=0)
    return (yeas > 0) & (nays > 0)


def drop_unanimous(data: VoteMatrix) -> tuple[VoteMatrix, list[str]]:
    """Drop bills with no observed Nay votes, or symmetrically no observed Yea.

    All-Nay bills offer no ideological contrast either, so both directions go.
    """
    keep = _unanimous_keep(data)
    dropped = [data.bills[j].id for j in np.flatnonzero(~keep)]
    if not keep.any():
        raise EmptyMatrixError(PreprocessReport(
            dropped_bills_unanimous=dropped,
            input_dims=data.shape, output_dims=(data.shape[0], 0)))
    return _subset(data, cols=keep), dropped


def pipeline(data: VoteMatrix, config: PreprocessConfig) -> tuple[VoteMatrix, PreprocessReport]:
    """Apply exclusions, lopsided, sparse-legislator, unanimous rules once each."""
    report = PreprocessReport(input_dims=data.shape)
    if config.exclude_legislators:
        excluded = set(config.exclude_legislators)
        keep = np.array([m.id not in excluded for m in data.legislators])
        report.excluded_ids = [m.id for m in data.legislators if m.id in excluded]
        if not keep.any():
            report.output_dims = (0, data.shape[1])
            raise EmptyMatrixError(report)
        data = _subset(data, rows=keep)
    try:
        data, report.dropped_bills_lopsided = filter_lopsided(
            data, config.lopsided_threshold)
        data, report.dropped_legislators_sparse = filter_sparse_legislators(
            data, config.min_participation)
        if config.drop_unanimous:
            data, report.dropped_bills_unanimous = drop_unanimous(data)
    except EmptyMatrixError as exc:
        # Merge the partial stage report into the pipeline-level one.
        stage = exc.report
        report.dropped_bills_lopsided += stage.dropped_bills_lopsided
        report.dropped_legislators_sparse += stage.dropped_legislators_sparse
        report.dropped_bills_unanimous += stage.dropped_bills_unanimous
        report.output_dims = stage.output_dims
        raise EmptyMatrixError(report) from None
    report.output_dims = data.shape
    return data, report
