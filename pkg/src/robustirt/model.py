"""Core domain types and probability primitives for the robust probit vote model.

The model explains vote (i, j) through a probit link on the linear predictor
``alpha_j + beta_j . theta_i + gamma_ij``.  ``theta`` is the legislator's
position in a K-dimensional policy space, ``alpha``/``beta`` are per-bill
intercept and slope, and ``gamma`` is a per-cell shift that absorbs votes the
spatial part cannot explain.  Nonzero gamma entries mark protest votes.

Normal CDF/PDF values come from ``scipy.special`` (``ndtr`` is accurate to
machine precision over the whole real line).  Mills-ratio style tail ratios
``pdf/cdf`` are evaluated through the scaled complementary error function
``erfcx``, which stays finite and accurate where naive division would hit
0/0 or overflow (see :func:`inverse_mills`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

__all__ = [
    "Vote",
    "Party",
    "Penalty",
    "LegislatorMeta",
    "BillMeta",
    "VoteMatrix",
    "Hyperparams",
    "ModelState",
    "FitResult",
    "linear_predictor",
    "linear_predictor_matrix",
    "yea_probability",
    "normal_pdf",
    "inverse_mills",
    "penalized_log_posterior",
    "lambda_from_pi",
]

_SQRT1_2 = 1.0 / math.sqrt(2.0)
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

# Probabilities are clamped to this range before taking logs so a fully
# saturated cell contributes a large finite value instead of -inf.
P_FLOOR = 1e-300
P_CEIL = 1.0 - 1e-16


class Vote(enum.IntEnum):
    """Observed vote state for one (legislator, bill) cell."""

    NAY = 0
    YEA = 1
    MISSING = -1


class Party(str, enum.Enum):
    DEM = "Dem"
    REP = "Rep"
    OTHER = "Other"


class Penalty(str, enum.Enum):
    """Prior on the shift parameters: hard-threshold, soft-threshold, or frozen."""

    L0 = "l0"
    L1 = "l1"
    NONE = "none"


@dataclass(frozen=True)
class LegislatorMeta:
    id: str
    name: str = ""
    party: Party | None = None
    district: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("legislator id must be nonempty")


@dataclass(frozen=True)
class BillMeta:
    id: str
    label: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("bill id must be nonempty")


@dataclass
class VoteMatrix:
    """Dense I x J roll-call matrix with aligned legislator/bill metadata.

    ``votes`` stores the integer codes of :class:`Vote` (int8).  Missing is a
    distinct third state, not a synonym for Nay.
    """

    votes: np.ndarray
    legislators: list[LegislatorMeta]
    bills: list[BillMeta]

    def __post_init__(self):
        self.votes = np.asarray(self.votes, dtype=np.int8)
        if self.votes.ndim != 2 or self.votes.shape[0] < 1 or self.votes.shape[1] < 1:
            raise ValueError(f"vote grid must be 2-D and nonempty, got shape {self.votes.shape}")
        bad = ~np.isin(self.votes, (Vote.NAY, Vote.YEA, Vote.MISSING))
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise ValueError(f"invalid vote code {self.votes[i, j]} at cell ({i}, {j})")
        if len(self.legislators) != self.votes.shape[0]:
            raise ValueError("legislator metadata length does not match row count")
        if len(self.bills) != self.votes.shape[1]:
            raise ValueError("bill metadata length does not match column count")
        leg_ids = [m.id for m in self.legislators]
        if len(set(leg_ids)) != len(leg_ids):
            raise ValueError("duplicate legislator ids")
        bill_ids = [m.id for m in self.bills]
        if len(set(bill_ids)) != len(bill_ids):
            raise ValueError("duplicate bill ids")

    @property
    def shape(self) -> tuple[int, int]:
        return self.votes.shape

    @property
    def n_legislators(self) -> int:
        return self.votes.shape[0]

    @property
    def n_bills(self) -> int:
        return self.votes.shape[1]

    def observed_mask(self) -> np.ndarray:
        return self.votes != Vote.MISSING

    def yea_mask(self) -> np.ndarray:
        return self.votes == Vote.YEA

    def nay_mask(self) -> np.ndarray:
        return self.votes == Vote.NAY


def _check_spd(name: str, m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if not np.allclose(m, m.T):
        raise ValueError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"{name} must be positive-definite") from exc
    return m


@dataclass
class Hyperparams:
    """Prior and algorithm settings for a fit.

    ``lam`` is the sparsity hyperparameter for the shift-parameter prior;
    ``lam = inf`` under the L0 penalty freezes every shift at zero and is
    equivalent to ``penalty = NONE``.
    """

    lam: float = 3.0
    mu_theta: np.ndarray = None
    sigma_theta: np.ndarray = None
    mu_beta_tilde: np.ndarray = None
    sigma_beta_tilde: np.ndarray = None
    epsilon: float = 1e-4
    max_iter: int = 500
    penalty: Penalty = Penalty.L0
    dimension: int = 1

    def __post_init__(self):
        k = int(self.dimension)
        if k < 1:
            raise ValueError("dimension must be a positive integer")
        self.dimension = k
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        self.penalty = Penalty(self.penalty)
        # Defaults: standard-normal position prior, diffuse (variance 25)
        # prior on the per-bill intercept/slope block, extended isotropically
        # for K > 1.
        if self.mu_theta is None:
            self.mu_theta = np.zeros(k)
        if self.sigma_theta is None:
            self.sigma_theta = np.eye(k)
        if self.mu_beta_tilde is None:
            self.mu_beta_tilde = np.zeros(k + 1)
        if self.sigma_beta_tilde is None:
            self.sigma_beta_tilde = 25.0 * np.eye(k + 1)
        self.mu_theta = np.asarray(self.mu_theta, dtype=float).reshape(k)
        self.mu_beta_tilde = np.asarray(self.mu_beta_tilde, dtype=float).reshape(k + 1)
        self.sigma_theta = _check_spd("sigma_theta", self.sigma_theta)
        self.sigma_beta_tilde = _check_spd("sigma_beta_tilde", self.sigma_beta_tilde)
        if self.sigma_theta.shape != (k, k):
            raise ValueError("sigma_theta shape does not match dimension")
        if self.sigma_beta_tilde.shape != (k + 1, k + 1):
            raise ValueError("sigma_beta_tilde shape does not match dimension")


@dataclass
class ModelState:
    """Parameter block: positions, bill parameters, and sparse shifts.

    ``gamma`` maps (i, j) -> shift value and stores only nonzero entries;
    absent cells are structural zeros.
    """

    theta: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    gamma: dict[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        self.theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        self.alpha = np.asarray(self.alpha, dtype=float).reshape(-1)
        self.beta = np.asarray(self.beta, dtype=float)
        if self.beta.ndim == 1:
            self.beta = self.beta.reshape(-1, 1)
        i_count, k = self.theta.shape
        j_count = self.alpha.shape[0]
        if self.beta.shape != (j_count, k):
            raise ValueError(
                f"beta shape {self.beta.shape} inconsistent with alpha ({j_count}) and theta (K={k})"
            )
        for arr, name in ((self.theta, "theta"), (self.alpha, "alpha"), (self.beta, "beta")):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
        for (i, j), g in self.gamma.items():
            if g == 0.0:
                raise ValueError(f"gamma stores a structural zero at ({i}, {j})")
            if not math.isfinite(g):
                raise ValueError(f"gamma at ({i}, {j}) is non-finite")
            if not (0 <= i < i_count and 0 <= j < j_count):
                raise ValueError(f"gamma index ({i}, {j}) out of range")

    @property
    def shape(self) -> tuple[int, int]:
        return self.theta.shape[0], self.alpha.shape[0]

    @property
    def dimension(self) -> int:
        return self.theta.shape[1]

    def gamma_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for (i, j), g in self.gamma.items():
            out[i, j] = g
        return out

    def copy(self) -> "ModelState":
        return ModelState(self.theta.copy(), self.alpha.copy(), self.beta.copy(), dict(self.gamma))

    @staticmethod
    def from_dense_gamma(theta, alpha, beta, gamma_dense) -> "ModelState":
        gamma_dense = np.asarray(gamma_dense, dtype=float)
        nz = np.argwhere(gamma_dense != 0.0)
        gamma = {(int(i), int(j)): float(gamma_dense[i, j]) for i, j in nz}
        return ModelState(theta, alpha, beta, gamma)


@dataclass
class FitResult:
    state: ModelState
    objective_trace: list[float]
    iterations: int
    converged: bool
    protest_cells: list[tuple[int, int, float]]


def linear_predictor(state: ModelState, i: int, j: int) -> float:
    """alpha_j + beta_j . theta_i + gamma_ij, with gamma_ij = 0 when absent."""
    i_count, j_count = state.shape
    if not (0 <= i < i_count and 0 <= j < j_count):
        raise IndexError(f"cell ({i}, {j}) out of range for {i_count} x {j_count} state")
    return float(
        state.alpha[j]
        + state.beta[j] @ state.theta[i]
        + state.gamma.get((i, j), 0.0)
    )


def linear_predictor_matrix(state: ModelState) -> np.ndarray:
    """All I x J linear predictors at once."""
    m = state.alpha[None, :] + state.theta @ state.beta.T
    for (i, j), g in state.gamma.items():
        m[i, j] += g
    return m


def yea_probability(m):
    """Standard normal CDF of the linear predictor; strictly in (0, 1)."""
    return special.ndtr(m)


def normal_pdf(m):
    m = np.asarray(m, dtype=float)
    return np.exp(-0.5 * m * m) / math.sqrt(2.0 * math.pi)


def inverse_mills(m):
    """pdf(m) / cdf(-m), evaluated without forming the near-zero tail CDF.

    Uses pdf(m)/cdf(-m) = sqrt(2/pi) / erfcx(m / sqrt(2)), which is stable for
    all finite m: for m far in the right tail the direct quotient is 0/0 while
    erfcx decays like 1/m.
    """
    m = np.asarray(m, dtype=float)
    return _SQRT_2_OVER_PI / special.erfcx(m * _SQRT1_2)


def penalized_log_posterior(state: ModelState, data: VoteMatrix, hp: Hyperparams) -> float:
    """Log posterior of the observed votes, up to one fixed additive constant.

    Sum of the observed-cell Bernoulli log likelihood, full Gaussian log
    densities of the position and bill-parameter priors (normalization
    constants included), and the shift penalty.  The constant dropped (the
    shift-prior normalizer) is the same for every penalty kind, so traces
    from different penalties are on a common scale.

    Probabilities are clamped to [1e-300, 1 - 1e-16] before the log so fully
    saturated cells stay finite.
    """
    if state.shape != data.shape:
        raise ValueError(f"state shape {state.shape} does not match data shape {data.shape}")
    if state.dimension != hp.dimension:
        raise ValueError("state dimension does not match hyperparams")
    m = linear_predictor_matrix(state)
    yea = data.yea_mask()
    nay = data.nay_mask()
    # log P(yea) = log ndtr(m); log P(nay) = log ndtr(-m)
    p_yea = np.clip(special.ndtr(m[yea]), P_FLOOR, P_CEIL)
    p_nay = np.clip(special.ndtr(-m[nay]), P_FLOOR, P_CEIL)
    ll = float(np.sum(np.log(p_yea)) + np.sum(np.log(p_nay)))

    ll += _gaussian_logpdf_sum(state.theta, hp.mu_theta, hp.sigma_theta)
    beta_tilde = np.column_stack([state.alpha, state.beta])
    ll += _gaussian_logpdf_sum(beta_tilde, hp.mu_beta_tilde, hp.sigma_beta_tilde)

    if hp.penalty is Penalty.L0:
        nnz = len(state.gamma)
        if nnz:
            ll -= 0.5 * hp.lam * hp.lam * nnz
    elif hp.penalty is Penalty.L1 and state.gamma:
        ll -= hp.lam * sum(abs(g) for g in state.gamma.values())
    return ll


def _gaussian_logpdf_sum(rows: np.ndarray, mu: np.ndarray, sigma: np.ndarray) -> float:
    """Sum of multivariate normal log densities over the rows of ``rows``."""
    n, k = rows.shape
    chol = np.linalg.cholesky(sigma)
    dev = np.linalg.solve(chol, (rows - mu[None, :]).T)
    quad = float(np.sum(dev * dev))
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return -0.5 * (quad + n * (logdet + k * math.log(2.0 * math.pi)))


def lambda_from_pi(pi: float) -> float:
    """Sparsity hyperparameter implied by a slab proportion ``pi``.

    Valid for 0 < pi < 1/2; strictly decreasing in pi and -> 0 as pi -> 1/2.
    """
    if not (0.0 < pi < 0.5):
        raise ValueError(f"pi must lie in (0, 1/2), got {pi}")
    return math.sqrt(2.0 * math.log((1.0 - pi) / pi))
