"""Closed-form strong equilibrium of the finite-population game.

Every quantity here is an explicit function of the agent parameters: the
drift/volatility aggregates (phi, psi), the constant investment fractions
pi*, the per-agent rates rho, and the consumption-curve constants (beta,
lambda).  In the single-stock case the same equilibrium collapses to a
formula driven by one critical competition level theta_crit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateAggregate, IdentityViolation, NotSingleStock
from .types import Population, detect_single_stock, validate_population

IDENTITY_TOL = 1e-10


@dataclass(frozen=True)
class Aggregates:
    """Population aggregates coupling the agents' investment problems."""

    phi: float
    psi: float

    @property
    def ratio(self) -> float:
        """phi / (1 + psi), the equilibrium average of sigma_k * pi_k."""
        return self.phi / (1.0 + self.psi)


@dataclass(frozen=True)
class EquilibriumProfile:
    """Per-agent equilibrium constants plus the shared aggregates.

    ``pi`` is the constant fraction of wealth invested, ``rho`` the
    per-agent rate entering beta, and (``beta``, ``lam``) parameterize the
    consumption curve c*(t).  ``theta_crit`` is set on the single-stock
    path only.
    """

    pi: np.ndarray
    rho: np.ndarray
    beta: np.ndarray
    lam: np.ndarray
    aggregates: Aggregates
    theta_crit: float | None = None


def gamma_n(p: Population) -> np.ndarray:
    """Exponents gamma_i = 1 / (1 - (1 - theta_i/n)(1 - 1/delta_i)).

    Always positive for valid inputs; equals delta_i when theta_i = 0 and
    equals 1 when delta_i = 1.
    """
    a = p.arrays()
    n = p.n
    return 1.0 / (1.0 - (1.0 - a.theta / n) * (1.0 - 1.0 / a.delta))


def aggregates_n(p: Population) -> Aggregates:
    """Compute (phi, psi) for a finite population."""
    a = p.arrays()
    n = p.n
    denom = a.sigma**2 + a.nu**2 * (1.0 + (a.delta - 1.0) * a.theta / n)
    phi = float(np.mean(a.delta * a.mu * a.sigma / denom))
    psi = float(np.mean(a.theta * (a.delta - 1.0) * a.sigma**2 / denom))
    if 1.0 + psi <= 0.0:
        raise DegenerateAggregate(f"1 + psi = {1.0 + psi!r} <= 0")
    return Aggregates(phi=phi, psi=psi)


def invest_n(p: Population, agg: Aggregates) -> np.ndarray:
    """Constant equilibrium investment fractions pi*.

    Values may be negative (shorting) or exceed one (leverage); the
    strategy space is all of the reals.
    """
    a = p.arrays()
    n = p.n
    denom = a.sigma**2 + a.nu**2 * (1.0 + (a.delta - 1.0) * a.theta / n)
    return (a.delta * a.mu - a.theta * (a.delta - 1.0) * a.sigma * agg.ratio) / denom


def rho_n(p: Population, pi: np.ndarray) -> np.ndarray:
    """Per-agent rates rho_i evaluated at the equilibrium investments.

    Each rho_i aggregates the other agents' investments through leave-one-out
    averages; the squared idiosyncratic term carries a 1/n^2 coefficient so
    that it vanishes at the mean-field rate.  rho_i = 0 whenever delta_i = 1.
    """
    a = p.arrays()
    n = p.n
    pi = np.asarray(pi, dtype=float)

    s_sigma_pi = np.sum(a.sigma * pi)
    s_mu_pi = np.sum(a.mu * pi)
    s_Sigma_pi2 = np.sum(a.Sigma * pi**2)
    s_nu_pi2 = np.sum((a.nu * pi) ** 2)

    hat_sigma_pi = (s_sigma_pi - a.sigma * pi) / n
    hat_mu_pi = (s_mu_pi - a.mu * pi) / n
    hat_Sigma_pi2 = (s_Sigma_pi2 - a.Sigma * pi**2) / n
    sum_nu_pi2 = s_nu_pi2 - (a.nu * pi) ** 2

    one_m = 1.0 - 1.0 / a.delta
    denom = 1.0 - (1.0 - a.theta / n) * one_m
    # denom = 1/gamma_i > 0 for delta > 0, theta in [0,1], n >= 2
    assert np.all(denom > 0.0)

    tilted_mu = a.mu - a.sigma * a.theta * one_m * hat_sigma_pi
    term_a = (1.0 - a.theta / n) * tilted_mu**2 / (2.0 * a.Sigma * denom)
    term_b = 0.5 * (hat_sigma_pi**2 + sum_nu_pi2 / n**2) * a.theta**2 * one_m
    term_c = -a.theta * hat_mu_pi
    term_d = 0.5 * a.theta * hat_Sigma_pi2
    return one_m * (term_a + term_b + term_c + term_d)


def beta_lambda_n(p: Population, rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Consumption constants (beta_i, lambda_i).

    beta_i mixes the population average of delta*rho with the agent's own
    rate; lambda_i is built from the geometric mean of eps_k^delta_k,
    computed in log space to avoid overflow.  beta_i = 0 whenever
    delta_i = 1, and lambda_i > 0 always.
    """
    a = p.arrays()
    rho = np.asarray(rho, dtype=float)
    avg_delta_rho = float(np.mean(a.delta * rho))
    denom = 1.0 + float(np.mean(a.theta * (a.delta - 1.0)))
    assert denom > 0.0
    beta = a.theta * (a.delta - 1.0) * avg_delta_rho / denom - a.delta * rho
    log_geo = float(np.mean(a.delta * np.log(a.eps)))
    lam = np.exp(-a.delta * np.log(a.eps) + log_geo * a.theta * (a.delta - 1.0) / denom)
    return beta, lam


def theta_crit_n(p: Population) -> float:
    """Critical competition weight for a single-stock population."""
    if detect_single_stock(p) is None:
        raise NotSingleStock("theta_crit is defined only when all agents share one stock")
    a = p.arrays()
    return (1.0 + float(np.mean(a.theta * (a.delta - 1.0)))) / float(np.mean(a.delta))


def single_stock_invest_n(p: Population) -> np.ndarray:
    """Corollary form of pi* for a shared stock: (delta - (theta/theta_crit)(delta-1)) mu/sigma^2."""
    market = detect_single_stock(p)
    if market is None:
        raise NotSingleStock("population does not share a single stock")
    a = p.arrays()
    tc = theta_crit_n(p)
    return (a.delta - (a.theta / tc) * (a.delta - 1.0)) * market.mu / market.sigma**2


def single_stock_beta_n(p: Population) -> np.ndarray:
    """Corollary form of beta for a shared stock."""
    market = detect_single_stock(p)
    if market is None:
        raise NotSingleStock("population does not share a single stock")
    a = p.arrays()
    tc = theta_crit_n(p)
    ratio = a.theta / tc
    return (
        market.mu**2
        / (2.0 * market.sigma**2)
        * (1.0 - a.delta)
        * (1.0 - ratio)
        * (a.delta - ratio * (a.delta - 1.0))
    )


def identity_residual(p: Population, pi: np.ndarray, agg: Aggregates) -> float:
    """|mean(sigma_k pi_k) - phi/(1+psi)|, zero in exact arithmetic."""
    a = p.arrays()
    return abs(float(np.mean(a.sigma * pi)) - agg.ratio)


def solve_n(p: Population) -> EquilibriumProfile:
    """Full equilibrium for a finite population.

    Composes the aggregate, investment, rate and consumption-constant
    computations, then asserts the volatility identity
    mean(sigma pi*) = phi/(1+psi) to within ``IDENTITY_TOL``.
    """
    validate_population(p)
    agg = aggregates_n(p)
    pi = invest_n(p, agg)
    rho = rho_n(p, pi)
    beta, lam = beta_lambda_n(p, rho)
    resid = identity_residual(p, pi, agg)
    if resid > IDENTITY_TOL:
        raise IdentityViolation(f"volatility identity residual {resid:.3e}")
    tc = theta_crit_n(p) if detect_single_stock(p) is not None else None
    return EquilibriumProfile(pi=pi, rho=rho, beta=beta, lam=lam,
                              aggregates=agg, theta_crit=tc)
