"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from robustirt import (
    BillMeta,
    Hyperparams,
    LegislatorMeta,
    ModelState,
    Party,
    Vote,
    VoteMatrix,
)


def make_matrix(codes, parties=None) -> VoteMatrix:
    """Build a VoteMatrix from an array of vote codes (1/0/-1)."""
    codes = np.asarray(codes, dtype=np.int8)
    i_count, j_count = codes.shape
    legislators = [
        LegislatorMeta(
            id=f"L{i}",
            party=None if parties is None else parties[i],
        )
        for i in range(i_count)
    ]
    bills = [BillMeta(id=f"B{j}") for j in range(j_count)]
    return VoteMatrix(codes, legislators, bills)


def random_instance(rng: np.random.Generator, i_count=20, j_count=30, k=1):
    """A random vote matrix and matching random state, for oracle tests."""
    theta = rng.standard_normal((i_count, k))
    alpha = rng.standard_normal(j_count) * 0.5
    beta = rng.standard_normal((j_count, k))
    m = alpha[None, :] + theta @ beta.T
    u = rng.random((i_count, j_count))
    votes = np.where(u < _ndtr(m), np.int8(Vote.YEA), np.int8(Vote.NAY))
    missing = rng.random((i_count, j_count)) < 0.05
    votes[missing] = np.int8(Vote.MISSING)
    data = make_matrix(votes)
    state = ModelState(
        rng.standard_normal((i_count, k)),
        rng.standard_normal(j_count),
        rng.standard_normal((j_count, k)),
        {},
    )
    return data, state


def _ndtr(m):
    from scipy.special import ndtr

    return ndtr(m)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_hp():
    return Hyperparams(lam=3.0, dimension=1)


def sign_align(estimate: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Resolve the 1-D sign ambiguity by correlating against a reference."""
    s = np.sign(np.corrcoef(estimate, reference)[0, 1])
    return s * estimate


def standardized(x: np.ndarray) -> np.ndarray:
    return (x - x.mean()) / x.std()
