"""Generative model for two-way timing exchange with exponential delays.

A sender/receiver pair runs N two-way message rounds. With propagation
delay d and clock offset theta, the per-round time-stamp differences are

    U_k = xi_k + X_k,   V_k = psi_k + Y_k

where xi = d + theta and psi = d - theta are the combined unknowns and
X_k, Y_k are independent exponential network delays. Oscillator
imperfection makes the offset drift, so xi and psi each follow a
Gaussian random walk with increment standard deviation sigma.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateModelError, ParameterError, ShapeError


@dataclass(frozen=True)
class ClockModelParams:
    """Generative parameters for one two-way exchange session.

    Attributes
    ----------
    lambda_xi : float
        Exponential rate of the forward-link delay (1/time).
    lambda_psi : float
        Exponential rate of the reverse-link delay (1/time).
    sigma : float
        Standard deviation of the random-walk increments (time).
    d0 : float
        Initial propagation delay (time), symmetric in both directions.
    theta0 : float
        Initial clock offset of the receiver relative to the sender.
    rounds : int
        Number of two-way message rounds N.
    """

    lambda_xi: float
    lambda_psi: float
    sigma: float
    d0: float
    theta0: float
    rounds: int

    def __post_init__(self):
        if not self.lambda_xi > 0:
            raise ParameterError(f"lambda_xi must be > 0, got {self.lambda_xi}")
        if not self.lambda_psi > 0:
            raise ParameterError(f"lambda_psi must be > 0, got {self.lambda_psi}")
        if not self.sigma >= 0:
            raise ParameterError(f"sigma must be >= 0, got {self.sigma}")
        if not self.d0 >= 0:
            raise ParameterError(f"d0 must be >= 0, got {self.d0}")
        if int(self.rounds) != self.rounds or self.rounds < 1:
            raise ParameterError(f"rounds must be a positive integer, got {self.rounds}")


@dataclass(frozen=True)
class LatentPath:
    """Hidden per-round state: xi_k and psi_k for k = 0..N."""

    xi: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        if self.xi.shape != self.psi.shape or self.xi.ndim != 1 or len(self.xi) < 2:
            raise ShapeError("xi and psi must be equal-length 1-D arrays of length >= 2")

    @property
    def rounds(self):
        return len(self.xi) - 1

    @property
    def theta(self):
        """Per-index clock offset theta_k = (xi_k - psi_k) / 2."""
        return (self.xi - self.psi) / 2.0

    @property
    def d(self):
        """Per-index propagation delay d_k = (xi_k + psi_k) / 2."""
        return (self.xi + self.psi) / 2.0

    @property
    def negative_d_count(self):
        """How many indices drifted to a negative delay (not clamped)."""
        return int(np.count_nonzero(self.d < 0))


@dataclass(frozen=True)
class ObservationSeries:
    """Observed time-stamp differences U_k, V_k for rounds k = 1..N."""

    U: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        if self.U.shape != self.V.shape or self.U.ndim != 1 or len(self.U) < 1:
            raise ShapeError("U and V must be equal-length nonempty 1-D arrays")

    @property
    def rounds(self):
        return len(self.U)


def simulate_paths(params, seed):
    """Sample the latent random-walk paths xi_0..xi_N and psi_0..psi_N.

    Starts at xi_0 = d0 + theta0, psi_0 = d0 - theta0 and adds i.i.d.
    N(0, sigma^2) increments. The xi increments are drawn before the psi
    increments from a single generator, so the draw order is part of the
    reproducibility contract.
    """
    if not isinstance(params, ClockModelParams):
        params = ClockModelParams(**params)
    rng = np.random.default_rng(seed)
    n = params.rounds
    w = rng.normal(0.0, params.sigma, size=n)
    v = rng.normal(0.0, params.sigma, size=n)
    xi0 = params.d0 + params.theta0
    psi0 = params.d0 - params.theta0
    xi = np.empty(n + 1)
    psi = np.empty(n + 1)
    xi[0] = xi0
    psi[0] = psi0
    np.cumsum(w, out=xi[1:])
    np.cumsum(v, out=psi[1:])
    xi[1:] += xi0
    psi[1:] += psi0
    return LatentPath(xi=xi, psi=psi)


def simulate_observations(path, params, seed):
    """Sample U_k = xi_k + X_k and V_k = psi_k + Y_k for k = 1..N.

    The exponential delays are generated by inverse-CDF transform of a
    seeded uniform stream (U-side draws first, then V-side).
    """
    if path.rounds != params.rounds:
        raise ShapeError(
            f"path has {path.rounds} rounds but params.rounds = {params.rounds}"
        )
    rng = np.random.default_rng(seed)
    n = params.rounds
    x = -np.log1p(-rng.random(n)) / params.lambda_xi
    y = -np.log1p(-rng.random(n)) / params.lambda_psi
    return ObservationSeries(U=path.xi[1:] + x, V=path.psi[1:] + y)


def chain_log_posterior(candidate, obs, lam, sigma):
    """Log posterior of one chain (xi given U, or psi given V), up to a constant.

    ``candidate`` holds the N+1 values xi_0..xi_N; ``obs`` the N
    observations. The value is

        sum_k [ -(xi_k - xi_{k-1})^2 / (2 sigma^2) + lam * xi_k ]

    and -inf whenever any xi_k > U_k (a delay would have to be negative).
    The flat prior on xi_0 contributes nothing.
    """
    candidate = np.asarray(candidate, dtype=float)
    obs = np.asarray(obs, dtype=float)
    if sigma <= 0:
        raise DegenerateModelError("chain_log_posterior needs sigma > 0")
    if not lam > 0:
        raise ParameterError(f"lam must be > 0, got {lam}")
    if candidate.ndim != 1 or obs.ndim != 1 or len(candidate) != len(obs) + 1:
        raise ShapeError(
            f"candidate must have len(obs)+1 entries, got {len(candidate)} vs {len(obs)}"
        )
    if np.any(candidate[1:] > obs):
        return -np.inf
    incr = np.diff(candidate)
    return float(-np.dot(incr, incr) / (2.0 * sigma**2) + lam * candidate[1:].sum())


def log_posterior(candidate_xi, U, params):
    """Log posterior of the xi chain under ``params`` (see chain_log_posterior).

    The psi chain uses the identical form with V and lambda_psi.
    """
    return chain_log_posterior(candidate_xi, U, params.lambda_xi, params.sigma)
