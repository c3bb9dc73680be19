"""Parametric-bootstrap roll-call generation with protest-vote injection.

Ground-truth parameters (either from a previous fit on real data or the
synthetic two-party mixture below) generate sincere votes cell by cell; a
small set of extreme legislators then has selected votes inverted to mimic
protest voting.  All randomness flows through per-row generator streams
derived from (seed, row), so output never depends on scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    BillMeta,
    LegislatorMeta,
    ModelState,
    Party,
    Vote,
    VoteMatrix,
    yea_probability,
)

__all__ = [
    "SimulationSpec",
    "SimulatedData",
    "synthetic_truth",
    "generate_sincere",
    "select_protesters",
    "select_protest_bills",
    "inject_protests",
    "run_simulation",
]


@dataclass
class SimulationSpec:
    truth: ModelState
    n_protesters: int = 0
    protest_votes_per_protester: int = 0
    protester_party: Party = Party.DEM
    seed: int = 0
    missing_rate: float = 0.0

    def __post_init__(self):
        if self.n_protesters < 0 or self.protest_votes_per_protester < 0:
            raise ValueError("protest counts must be nonnegative")
        if not (0.0 <= self.missing_rate < 1.0):
            raise ValueError("missing_rate must lie in [0, 1)")
        _, j_count = self.truth.shape
        if self.protest_votes_per_protester > j_count:
            raise ValueError("protest_votes_per_protester exceeds bill count")
        side = _side_indices(self.truth, self.protester_party)
        if self.n_protesters > side.size:
            raise ValueError("not enough legislators on the protester side")


@dataclass
class SimulatedData:
    data: VoteMatrix
    truth: ModelState
    protest_cells: list[tuple[int, int]] = field(default_factory=list)
    protesters: list[int] = field(default_factory=list)


def synthetic_truth(
    i_count: int,
    j_count: int,
    k: int = 1,
    seed: int = 0,
    party_offset: float = 0.8,
    theta_scale: float = 0.3,
    partyline_share: float = 0.25,
    inparty_share: float = 0.75,
    partyline_beta: tuple[float, float] = (7.0, 9.0),
    inparty_beta: tuple[float, float] = (0.5, 0.65),
    filler_beta: tuple[float, float] = (0.3, 0.45),
) -> ModelState:
    """Two-party Gaussian-mixture ground truth for desk-scale runs.

    First-dimension positions sit at -party_offset (first half of rows) or
    +party_offset (second half) plus N(0, theta_scale^2) noise; extra
    dimensions are centered noise.

    Bills are cutpoint votes, the texture of a polarized chamber: each bill
    has slope magnitude drawn from its class range and an intercept
    alpha = -beta * c placing its cutpoint c on the position axis, so a vote
    mostly encodes which side of c the legislator sits on.  Three kinds:

    * party-line (``partyline_share``): cutpoints spread across the
      inter-party gap with steep slopes, so parties split almost
      deterministically; these are the high-discrimination bills protesters
      target, and an inverted vote on one produces an unmistakable residual.
      The spread of cutpoints matters as much as the slopes: flagging every
      protest vote requires the protester's position to work free one flip
      at a time, and a ladder of distinct cutpoints is what gives each
      successive flip a residual large enough to cross the threshold.
    * in-party (``inparty_share``, the bulk): cutpoints scattered through
      the party masses with mild slopes; the resulting graded pattern is
      what resolves positions within a party.
    * filler (the rest; none by default): still milder slopes with
      cutpoints beyond the position range, yielding lopsided votes like
      routine procedural motions.

    The slope ranges are deliberately bimodal, which keeps shift detection
    clean at chamber scale.  Mild-slope bills are capped so no ordinary
    cell's predictor can ever reach a flagging threshold, even after the
    modest slope inflation that follows when a fit absorbs a bill's
    against-the-grain votes.  The steep party-line bills are near-separable,
    so EM approaches their slopes from below; sincere wrong-side votes on
    them occur at true predictors far beyond what the partially converged
    slopes can turn into a flaggable residual, while inverted votes sit so
    far out that they cross any threshold regardless.
    """
    rng = np.random.default_rng(seed)
    n_dem = i_count // 2
    theta = rng.standard_normal((i_count, k)) * theta_scale
    theta[:n_dem, 0] -= party_offset
    theta[n_dem:, 0] += party_offset

    n_partyline = int(round(partyline_share * j_count))
    n_inparty = int(round(inparty_share * j_count))
    kind = np.zeros(j_count, dtype=int)           # 0 partyline, 1 inparty, 2 filler
    kind[n_partyline:n_partyline + n_inparty] = 1
    kind[n_partyline + n_inparty:] = 2
    kind = kind[rng.permutation(j_count)]

    mag = np.where(
        kind == 0,
        rng.uniform(*partyline_beta, size=j_count),
        np.where(
            kind == 1,
            rng.uniform(*inparty_beta, size=j_count),
            rng.uniform(*filler_beta, size=j_count),
        ),
    )
    side = rng.choice([-1.0, 1.0], size=j_count)
    cut = np.where(
        kind == 0,
        rng.uniform(-0.5, 0.5, size=j_count),
        np.where(
            kind == 1,
            side * (party_offset + rng.uniform(-0.25, 0.25, size=j_count)),
            side * rng.uniform(1.6, 2.0, size=j_count),
        ),
    )
    beta = np.zeros((j_count, k))
    beta[:, 0] = rng.choice([-1.0, 1.0], size=j_count) * mag
    alpha = -beta[:, 0] * cut
    if k > 1:
        beta[:, 1:] = rng.standard_normal((j_count, k - 1)) * 0.3
    return ModelState(theta, alpha, beta, {})


def _default_metadata(truth: ModelState) -> tuple[list[LegislatorMeta], list[BillMeta]]:
    i_count, j_count = truth.shape
    legislators = [
        LegislatorMeta(
            id=f"L{i:04d}",
            name=f"Legislator {i}",
            party=Party.DEM if truth.theta[i, 0] < 0 else Party.REP,
        )
        for i in range(i_count)
    ]
    bills = [BillMeta(id=f"B{j:04d}") for j in range(j_count)]
    return legislators, bills


def generate_sincere(
    truth: ModelState,
    seed: int,
    missing_rate: float = 0.0,
    legislators: list[LegislatorMeta] | None = None,
    bills: list[BillMeta] | None = None,
) -> VoteMatrix:
    """Draw each observed cell Yea with its model probability (shifts ignored).

    Cells go missing independently at ``missing_rate`` before the vote draw.
    Row i uses the generator stream seeded by (seed, i), so the matrix is
    identical regardless of evaluation order or worker count.
    """
    i_count, j_count = truth.shape
    prob = yea_probability(truth.alpha[None, :] + truth.theta @ truth.beta.T)
    votes = np.empty((i_count, j_count), dtype=np.int8)
    for i in range(i_count):
        rng = np.random.default_rng((seed, 0, i))
        missing = rng.random(j_count) < missing_rate
        yea = rng.random(j_count) < prob[i]
        row = np.where(yea, np.int8(Vote.YEA), np.int8(Vote.NAY))
        row[missing] = np.int8(Vote.MISSING)
        votes[i] = row
    default_legs, default_bills = _default_metadata(truth)
    return VoteMatrix(
        votes,
        legislators if legislators is not None else default_legs,
        bills if bills is not None else default_bills,
    )


def _side_indices(truth: ModelState, side: Party) -> np.ndarray:
    theta1 = truth.theta[:, 0]
    if side is Party.DEM:
        return np.flatnonzero(theta1 < 0)
    if side is Party.REP:
        return np.flatnonzero(theta1 > 0)
    raise ValueError(f"no protester side defined for party {side}")


def select_protesters(truth: ModelState, n: int, side: Party, seed: int) -> list[int]:
    """Sample n legislators from the extreme decile of the chosen side.

    For the negative side "extreme" means most negative first-dimension
    position.  The decile pool is widened to n when n exceeds it.
    """
    if n == 0:
        return []
    members = _side_indices(truth, side)
    if members.size == 0:
        raise ValueError(f"no legislators on side {side}")
    if n > members.size:
        raise ValueError("not enough legislators on the chosen side")
    theta1 = truth.theta[members, 0]
    order = members[np.argsort(theta1 if side is Party.DEM else -theta1)]
    pool = order[: max(math.ceil(0.1 * members.size), n)]
    rng = np.random.default_rng((seed, 1))
    return sorted(int(i) for i in rng.choice(pool, size=n, replace=False))


def select_protest_bills(truth: ModelState, n_bills: int, seed: int) -> list[int]:
    """Sample n_bills from the top quartile of slope magnitude.

    High-slope bills separate the parties sharply, so an inverted vote there
    is maximally informative.  The quartile pool is widened to n_bills when
    needed.
    """
    _, j_count = truth.shape
    if n_bills > j_count:
        raise ValueError("n_bills exceeds bill count")
    if n_bills == 0:
        return []
    magnitude = np.linalg.norm(truth.beta, axis=1)
    order = np.argsort(-magnitude)
    pool = order[: max(math.ceil(0.25 * j_count), n_bills)]
    rng = np.random.default_rng((seed, 2))
    return sorted(int(j) for j in rng.choice(pool, size=n_bills, replace=False))


def inject_protests(
    data: VoteMatrix,
    protesters: list[int],
    bills: list[int] | list[list[int]],
    truth: ModelState | None = None,
) -> SimulatedData:
    """Invert the selected cells (Yea <-> Nay) and record the flips.

    ``bills`` is either one bill list shared by every protester or one list
    per protester.  Selected cells must be observed.
    """
    if bills and isinstance(bills[0], (list, tuple, np.ndarray)):
        per_protester = [list(b) for b in bills]
        if len(per_protester) != len(protesters):
            raise ValueError("need one bill list per protester")
    else:
        per_protester = [list(bills) for _ in protesters]
    votes = data.votes.copy()
    cells: list[tuple[int, int]] = []
    for i, bill_list in zip(protesters, per_protester):
        for j in bill_list:
            v = votes[i, j]
            if v == Vote.MISSING:
                raise ValueError(f"cannot invert missing cell ({i}, {j})")
            votes[i, j] = Vote.NAY if v == Vote.YEA else Vote.YEA
            cells.append((i, j))
    flipped = VoteMatrix(votes, data.legislators, data.bills)
    return SimulatedData(
        data=flipped,
        truth=truth if truth is not None else ModelState(np.zeros((data.shape[0], 1)),
                                                         np.zeros(data.shape[1]),
                                                         np.zeros((data.shape[1], 1))),
        protest_cells=cells,
        protesters=list(protesters),
    )


def run_simulation(spec: SimulationSpec) -> SimulatedData:
    """Full pipeline: sincere draw, protester/bill selection, inversion.

    Each protester draws an independent bill set; bills whose cell came up
    missing for that protester are excluded from their pool before drawing,
    so the flip count is exact.
    """
    sincere = generate_sincere(spec.truth, spec.seed, spec.missing_rate)
    if spec.n_protesters == 0 or spec.protest_votes_per_protester == 0:
        return SimulatedData(
            data=sincere,
            truth=spec.truth,
            protest_cells=[],
            protesters=select_protesters(
                spec.truth, spec.n_protesters, spec.protester_party, spec.seed
            ),
        )
    protesters = select_protesters(
        spec.truth, spec.n_protesters, spec.protester_party, spec.seed
    )
    magnitude = np.linalg.norm(spec.truth.beta, axis=1)
    j_count = spec.truth.shape[1]
    order = np.argsort(-magnitude)
    quartile = order[: max(math.ceil(0.25 * j_count), spec.protest_votes_per_protester)]
    per_protester: list[list[int]] = []
    for i in protesters:
        observed = quartile[sincere.votes[i, quartile] != Vote.MISSING]
        if observed.size < spec.protest_votes_per_protester:
            raise ValueError(f"protester {i} has too few observed high-slope bills")
        rng = np.random.default_rng((spec.seed, 2, i))
        chosen = rng.choice(observed, size=spec.protest_votes_per_protester, replace=False)
        per_protester.append(sorted(int(j) for j in chosen))
    return inject_protests(sincere, protesters, per_protester, truth=spec.truth)
