"""Post-hoc identification transforms.

The model's likelihood is invariant under affine reparameterizations of the
positions (sign flips in one dimension, orthogonal maps in K dimensions), so
estimates are pinned down only after centering/whitening the positions,
anchoring the sign with party information, or aligning to a reference
configuration.  Every transform here preserves all linear predictors exactly,
hence the likelihood.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .model import LegislatorMeta, ModelState, Party

__all__ = [
    "IdentificationError",
    "AnchorMode",
    "AnchorSpec",
    "standardize",
    "sign_anchor",
    "procrustes_align",
]


class IdentificationError(RuntimeError):
    pass


class AnchorMode(enum.Enum):
    PARTY_POSITIVE = "party_positive"
    LEGISLATOR_POSITIVE = "legislator_positive"
    NONE = "none"


@dataclass(frozen=True)
class AnchorSpec:
    mode: AnchorMode = AnchorMode.NONE
    party: Party | None = None
    legislator_id: str | None = None

    @staticmethod
    def party_positive(party: Party) -> "AnchorSpec":
        return AnchorSpec(mode=AnchorMode.PARTY_POSITIVE, party=Party(party))

    @staticmethod
    def legislator_positive(legislator_id: str) -> "AnchorSpec":
        return AnchorSpec(mode=AnchorMode.LEGISLATOR_POSITIVE, legislator_id=legislator_id)

    @staticmethod
    def none() -> "AnchorSpec":
        return AnchorSpec()


def standardize(state: ModelState) -> ModelState:
    """Center positions and whiten to unit population covariance.

    Uses the population (divide-by-I) covariance and its unique symmetric
    inverse square root, so the whitening adds no spurious rotation.  Bill
    parameters absorb the inverse transform: slopes are mapped through the
    square root and intercepts pick up the mean, leaving every linear
    predictor unchanged.
    """
    theta = state.theta
    i_count = theta.shape[0]
    if i_count < 2:
        raise IdentificationError("need at least two legislators to standardize")
    mean = theta.mean(axis=0)
    centered = theta - mean[None, :]
    cov = centered.T @ centered / i_count
    vals, vecs = np.linalg.eigh(cov)
    if np.min(vals) <= 1e-12 * max(np.max(vals), 1.0):
        raise IdentificationError("position columns are collinear; covariance is singular")
    w = vecs @ np.diag(vals ** -0.5) @ vecs.T          # symmetric inverse sqrt
    w_inv = vecs @ np.diag(vals ** 0.5) @ vecs.T
    new_theta = centered @ w
    new_beta = state.beta @ w_inv                       # (W^-1)^T = W^-1, symmetric
    new_alpha = state.alpha + state.beta @ mean
    return ModelState(new_theta, new_alpha, new_beta, dict(state.gamma))


def sign_anchor(
    state: ModelState, anchor: AnchorSpec, legislators: list[LegislatorMeta]
) -> ModelState:
    """Resolve the one-dimensional sign ambiguity.

    Flips (theta, beta) -> (-theta, -beta) when the anchored party's mean
    position (or the anchored legislator's position) is negative.  Shifts and
    intercepts are untouched; the likelihood is invariant under the flip.
    """
    if state.dimension != 1:
        raise IdentificationError("sign anchoring is defined only for one dimension")
    if anchor.mode is AnchorMode.NONE:
        return state.copy()
    theta = state.theta[:, 0]
    if anchor.mode is AnchorMode.PARTY_POSITIVE:
        idx = [k for k, m in enumerate(legislators) if m.party is anchor.party]
        if not idx:
            raise IdentificationError(f"no legislators with party {anchor.party}")
        pivot = float(np.mean(theta[idx]))
    else:
        idx = [k for k, m in enumerate(legislators) if m.id == anchor.legislator_id]
        if not idx:
            raise IdentificationError(f"no legislator with id {anchor.legislator_id!r}")
        pivot = float(theta[idx[0]])
    if pivot < 0:
        return ModelState(-state.theta, state.alpha, -state.beta, dict(state.gamma))
    return state.copy()


def procrustes_align(state: ModelState, reference_theta: np.ndarray) -> ModelState:
    """Rotate the state's positions onto a reference configuration.

    Finds the orthogonal map minimizing the Frobenius distance between the
    mapped positions and the reference (via SVD of the cross-product) and
    applies it to positions and slopes jointly, preserving all linear
    predictors.  Falls back to the identity with a warning when the
    cross-product is rank-deficient.
    """
    reference_theta = np.atleast_2d(np.asarray(reference_theta, dtype=float))
    if reference_theta.shape != state.theta.shape:
        raise ValueError(
            f"reference shape {reference_theta.shape} does not match positions {state.theta.shape}"
        )
    cross = state.theta.T @ reference_theta
    u, s, vt = np.linalg.svd(cross)
    if np.min(s) <= 1e-12 * max(np.max(s), 1.0):
        warnings.warn("rank-deficient cross-product; skipping alignment", stacklevel=2)
        return state.copy()
    # theta -> theta @ R with R = U V^T minimizes ||theta R - ref||_F;
    # equivalently each position maps through O = R^T.
    rot = u @ vt
    return ModelState(state.theta @ rot, state.alpha, state.beta @ rot, dict(state.gamma))
