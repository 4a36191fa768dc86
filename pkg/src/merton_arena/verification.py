"""Independent checks of the closed-form equilibrium.

Three routes confirm the consumption fixed point: a classical RK4
integration of the per-agent value-factor ODE (linearized by the power
substitution), a quadrature evaluation of its closed-form solution, and an
exponential-integral identity that ties the factor back to the equilibrium
consumption itself.  On top of that, a paired common-random-numbers Monte
Carlo scan asserts that no perturbed strategy in a (dpi, a, b) grid beats
the equilibrium, and a replication harness measures how fast the finite
game approaches its mean-field limit.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import NonPositiveSolution, NonReplicableWeights, ProfitableDeviationFound
from .mfg import MfEquilibrium, solve_mf
from .nplayer import EquilibriumProfile, gamma_n, identity_residual, solve_n
from .policy import ConsumptionPolicy
from .simulation import (
    BLOCK_SIZE,
    COMMON_STREAM,
    UtilityEstimate,
    agent_stream,
    block_normals,
    trapezoid_weights,
    worker_count,
)
from .types import Population, TypeDistribution, validate_distribution, validate_population

DEFAULT_ODE_STEPS = 10_000
REPORT_POINTS = 1000

_WEIGHT_INT_TOL = 1e-9


# ---------------------------------------------------------------------------
# Value-factor ODE oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BernoulliInputs:
    """Data of one agent's value-factor equation f' + a f + b f^(1-gamma) = 0.

    ``hat_c_minus`` and ``bar_c_minus`` are the arithmetic and geometric
    (power 1/n over the n-1 others) averages of the other agents'
    consumption, as functions of time.  The coefficients are
    a(t) = rho + theta (1 - 1/delta) hat_c_minus(t) and
    b(t) = (eps^-gamma / gamma) bar_c_minus(t)^(-gamma theta (1 - 1/delta)),
    with b > 0 everywhere.
    """

    gamma: float
    theta: float
    delta: float
    eps: float
    rho: float
    hat_c_minus: Callable
    bar_c_minus: Callable

    def a(self, t):
        return self.rho + self.theta * (1.0 - 1.0 / self.delta) * np.asarray(
            self.hat_c_minus(t), dtype=float
        )

    def b(self, t):
        bar = np.asarray(self.bar_c_minus(t), dtype=float)
        expo = -self.gamma * self.theta * (1.0 - 1.0 / self.delta)
        return math.exp(-self.gamma * math.log(self.eps)) / self.gamma * bar**expo


def bernoulli_oracle(inputs: BernoulliInputs, horizon: float,
                     steps: int = DEFAULT_ODE_STEPS) -> tuple[np.ndarray, np.ndarray]:
    """Solve the value-factor equation backward from f(T) = 1 by RK4.

    Integrates the linearized variable u = f^gamma, for which
    u'/gamma + a u + b = 0, with classical fourth-order Runge-Kutta on a
    uniform grid, then maps back via f = u^(1/gamma).  Returns (times, f)
    with times ascending on [0, T].
    """
    if steps < 2:
        raise ValueError(f"steps must be >= 2, got {steps}")
    gamma = inputs.gamma
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    half_times = np.linspace(0.0, horizon, 2 * steps + 1)
    a = np.asarray(inputs.a(half_times), dtype=float)
    b = np.asarray(inputs.b(half_times), dtype=float)
    if a.ndim == 0:
        a = np.full(2 * steps + 1, float(a))
    if b.ndim == 0:
        b = np.full(2 * steps + 1, float(b))
    if np.any(b < 0.0):
        raise ValueError("coefficient b(t) must be nonnegative")

    al, bl = a.tolist(), b.tolist()
    h = -horizon / steps
    u = [0.0] * (steps + 1)
    u[steps] = 1.0
    g = -gamma
    for j in range(steps, 0, -1):
        uj = u[j]
        a0, b0 = al[2 * j], bl[2 * j]
        am, bm = al[2 * j - 1], bl[2 * j - 1]
        a1, b1 = al[2 * j - 2], bl[2 * j - 2]
        k1 = g * (a0 * uj + b0)
        k2 = g * (am * (uj + 0.5 * h * k1) + bm)
        k3 = g * (am * (uj + 0.5 * h * k2) + bm)
        k4 = g * (a1 * (uj + h * k3) + b1)
        u[j - 1] = uj + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    u_arr = np.array(u)
    if np.any(u_arr <= 0.0):
        raise NonPositiveSolution("linearized value factor hit a nonpositive value")
    return half_times[::2], u_arr ** (1.0 / gamma)


def _reverse_cumulative(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    """int_t^T of a sampled integrand, via cumulative Simpson."""
    forward = cumulative_simpson(values, x=times, initial=0.0)
    return forward[-1] - forward


# ---------------------------------------------------------------------------
# Fixed-point residuals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FixedPointReport:
    """Residual maxima of the consumption fixed point, per population."""

    systeq1_max: float
    systeq2_max: float
    identity_residual: float
    f_gap_ode_closed: np.ndarray
    f_gap_ode_exp: np.ndarray
    f_gap_closed_exp: np.ndarray

    @property
    def max_f_gap(self) -> float:
        return float(max(self.f_gap_ode_closed.max(), self.f_gap_ode_exp.max(),
                         self.f_gap_closed_exp.max()))

    def passes(self, residual_tol: float = 1e-8, gap_tol: float = 1e-8,
               identity_tol: float = 1e-10) -> bool:
        return (self.systeq1_max <= residual_tol
                and self.systeq2_max <= residual_tol
                and self.max_f_gap <= gap_tol
                and self.identity_residual <= identity_tol)

    def as_dict(self) -> dict:
        return {
            "systeq1_max": self.systeq1_max,
            "systeq2_max": self.systeq2_max,
            "identity_residual": self.identity_residual,
            "f_gap_ode_closed": self.f_gap_ode_closed.tolist(),
            "f_gap_ode_exp": self.f_gap_ode_exp.tolist(),
            "f_gap_closed_exp": self.f_gap_closed_exp.tolist(),
        }


def fixed_point_check(p: Population, e: EquilibriumProfile,
                      steps: int = DEFAULT_ODE_STEPS,
                      report_points: int = REPORT_POINTS,
                      consumption_scale: float = 1.0) -> FixedPointReport:
    """Confirm that the closed-form consumption solves the coupled system.

    Builds each agent's leave-one-out consumption averages from the
    closed-form curves, obtains the value factor three independent ways
    (RK4 oracle, quadrature of the closed form, exponential identity), and
    reports the maxima of the best-response residual, the ODE defect of
    the exponential form, and the volatility identity over a subsampled
    grid.  ``consumption_scale`` multiplies every curve and exists so
    detector sensitivity can be demonstrated on non-fixed-point input.
    """
    validate_population(p)
    ar = p.arrays()
    n = p.n
    T = p.horizon
    gammas = gamma_n(p)
    policies = [ConsumptionPolicy(float(b), float(l), T)
                for b, l in zip(e.beta, e.lam)]

    def rate(k):
        return lambda t: consumption_scale * policies[k].rate(t)

    times = np.linspace(0.0, T, steps + 1)
    c_nodes = np.array([rate(k)(times) for k in range(n)])
    log_c = np.log(c_nodes)
    chat_full = c_nodes.mean(axis=0)

    stride = max(1, steps // report_points)
    report_idx = np.unique(np.append(np.arange(0, steps + 1, stride), steps))

    r1_max = 0.0
    r2_max = 0.0
    gap_oc = np.zeros(n)
    gap_oe = np.zeros(n)
    gap_ce = np.zeros(n)
    for i in range(n):
        others = [k for k in range(n) if k != i]

        def hat_minus(t, _o=others):
            return sum(rate(k)(t) for k in _o) / n

        def bar_minus(t, _o=others):
            return np.exp(sum(np.log(rate(k)(t)) for k in _o) / n)

        inputs = BernoulliInputs(
            gamma=float(gammas[i]), theta=float(ar.theta[i]),
            delta=float(ar.delta[i]), eps=float(ar.eps[i]),
            rho=float(e.rho[i]), hat_c_minus=hat_minus, bar_c_minus=bar_minus,
        )
        _, f_ode = bernoulli_oracle(inputs, T, steps)

        a_vals = inputs.a(times)
        b_vals = inputs.b(times)
        gamma = inputs.gamma
        # Integrating-factor solution of the linearized equation:
        # u(t) = e^(gamma A(t)) (1 + int_t^T gamma b(s) e^(-gamma A(s)) ds),
        # A(t) = int_t^T a.  Verified against the ODE by substitution.
        big_a = _reverse_cumulative(a_vals, times)
        weight = np.exp(gamma * big_a)
        tail = _reverse_cumulative(gamma * b_vals / weight, times)
        f_closed = (weight * (1.0 + tail)) ** (1.0 / gamma)

        shrink = e.rho[i] + ar.theta[i] * (1.0 - 1.0 / ar.delta[i]) * chat_full \
            + c_nodes[i] / ar.delta[i]
        f_exp = np.exp(_reverse_cumulative(shrink, times))

        gap_oc[i] = np.max(np.abs(f_ode - f_closed))
        gap_oe[i] = np.max(np.abs(f_ode - f_exp))
        gap_ce[i] = np.max(np.abs(f_closed - f_exp))

        log_bar_minus = (log_c.sum(axis=0) - log_c[i]) / n
        best_response = np.exp(
            -gamma * math.log(ar.eps[i])
            - gamma * ar.theta[i] * (1.0 - 1.0 / ar.delta[i]) * log_bar_minus
            - gamma * np.log(f_ode)
        )
        r1 = np.abs(c_nodes[i] - best_response)[report_idx]
        defect = np.abs(-shrink * f_exp + a_vals * f_exp
                        + b_vals * f_exp ** (1.0 - gamma))[report_idx]
        r1_max = max(r1_max, float(r1.max()))
        r2_max = max(r2_max, float(defect.max()))

    resid = identity_residual(p, e.pi, e.aggregates)
    return FixedPointReport(systeq1_max=r1_max, systeq2_max=r2_max,
                            identity_residual=resid,
                            f_gap_ode_closed=gap_oc, f_gap_ode_exp=gap_oe,
                            f_gap_closed_exp=gap_ce)


# ---------------------------------------------------------------------------
# Paired Monte Carlo best-response scan
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BestResponseCell:
    """One perturbation (dpi, a, b) with its paired difference estimate."""

    dpi: float
    a: float
    b: float
    mean_diff: float
    stderr: float

    def as_dict(self) -> dict:
        return {"dpi": self.dpi, "a": self.a, "b": self.b,
                "mean_diff": self.mean_diff, "stderr": self.stderr}


@dataclass(frozen=True)
class BestResponseReport:
    """Equilibrium estimate plus the grid of paired perturbation results."""

    agent: int
    paths: int
    seed: int
    equilibrium: UtilityEstimate
    cells: tuple[BestResponseCell, ...]

    @property
    def worst(self) -> BestResponseCell:
        return max(self.cells, key=lambda c: c.mean_diff)

    def violations(self) -> list[BestResponseCell]:
        return [c for c in self.cells if c.mean_diff > 3.0 * c.stderr]

    def as_dict(self) -> dict:
        return {
            "agent": self.agent,
            "paths": self.paths,
            "seed": self.seed,
            "equilibrium_mean": self.equilibrium.mean,
            "equilibrium_stderr": self.equilibrium.stderr,
            "worst_diff": self.worst.mean_diff,
            "cells": [c.as_dict() for c in self.cells],
        }


def best_response_test(p: Population, e: EquilibriumProfile, i: int,
                       dpi_grid: Sequence[float], ab_grid: Sequence[float],
                       paths: int, seed: int, grid: int = 1000,
                       block_size: int = BLOCK_SIZE) -> BestResponseReport:
    """Scan deviations of agent i against the equilibrium with paired CRN.

    Every other agent plays the closed-form equilibrium; agent i plays
    (pi* + dpi, c*(t) e^(a + b t)) for each cell of dpi_grid x ab_grid^2.
    Both the perturbed and the equilibrium objective are evaluated on the
    same Brownian increments, path by path, so the (0, 0, 0) cell differs
    by exactly zero.  Raises ProfitableDeviationFound if any cell's mean
    paired difference exceeds +3 standard errors.
    """
    validate_population(p)
    ar = p.arrays()
    n, T = p.n, p.horizon
    times = np.linspace(0.0, T, grid + 1)
    dt = np.diff(times)
    w = trapezoid_weights(times)

    policies = [ConsumptionPolicy(float(b), float(l), T)
                for b, l in zip(e.beta, e.lam)]
    c_eq = np.array([pol.rate(times) for pol in policies])
    log_c_eq = np.log(c_eq)
    pi = np.asarray(e.pi, dtype=float)

    def cum_int(values):
        """Trapezoid cumulative integral of node values along the grid."""
        out = np.zeros(len(values))
        np.cumsum(0.5 * (values[:-1] + values[1:]) * dt, out=out[1:])
        return out

    # Deterministic node values of each agent's equilibrium log wealth.
    drift = pi * ar.mu - 0.5 * pi**2 * ar.Sigma
    det = (np.log(ar.x0)[:, None] + drift[:, None] * times[None, :]
           - np.array([cum_int(c_eq[k]) for k in range(n)]))

    theta, delta, eps = float(ar.theta[i]), float(ar.delta[i]), float(ar.eps[i])
    own = 1.0 - theta / n
    k_pow = 1.0 - 1.0 / delta
    others = [k for k in range(n) if k != i]
    row_others = (log_c_eq[others] + det[others]).sum(axis=0)
    row_others_term = det[others, -1].sum()
    # Path-dependent weights of the other agents' noise inside the averages.
    w_nu = pi[others] * ar.nu[others]
    w_sig = float(np.sum(pi[others] * ar.sigma[others]))

    cells = [(float(dp), float(a), float(b))
             for dp in dpi_grid for a in ab_grid for b in ab_grid]
    ref = (0.0, 0.0, 0.0)
    groups = sorted({c[0] for c in cells} | {ref[0]})
    groups.remove(0.0)
    groups.insert(0, 0.0)  # reference group first so J_eq exists

    def cell_rows(dp, a, b):
        """Deterministic pieces of a cell: weights/constants per grid node."""
        c_cell = c_eq[i] * np.exp(a + b * times)
        log_c_cell = log_c_eq[i] + (a + b * times)
        pi_cell = pi[i] + dp
        det_cell = (math.log(ar.x0[i])
                    + (pi_cell * ar.mu[i] - 0.5 * pi_cell**2 * ar.Sigma[i]) * times
                    - cum_int(c_cell))
        row_run = own * (log_c_cell + det_cell) - (theta / n) * row_others
        row_term = own * det_cell[-1] - (theta / n) * row_others_term
        return row_run, row_term

    rows = {cell: cell_rows(*cell) for cell in set(cells) | {ref}}
    if delta != 1.0:
        w_cells = {c: w * np.exp(k_pow * rows[c][0]) / k_pow for c in rows}
        coef_cells = {c: eps * math.exp(k_pow * rows[c][1]) / k_pow for c in rows}
    group_cells = {g: [c for c in cells if c[0] == g] for g in groups}

    sqrt_dt = np.sqrt(dt)
    n_cells = len(cells)
    cell_index = {c: j for j, c in enumerate(cells)}

    def cum_noise(seed_, stream, start, count):
        dZ = sqrt_dt * block_normals(seed_, stream, start, count, grid)
        out = np.zeros((count, grid + 1))
        np.cumsum(dZ, axis=1, out=out[:, 1:])
        return out

    def block_task(start):
        count = min(block_size, paths - start)
        cum_b = cum_noise(seed, COMMON_STREAM, start, count)
        # Agent i's own (unit-investment) noise and the others' aggregate.
        noise_raw = ar.sigma[i] * cum_b
        if ar.nu[i] != 0.0:
            noise_raw = noise_raw + ar.nu[i] * cum_noise(seed, agent_stream(i),
                                                         start, count)
        s_path = w_sig * cum_b
        for idx, k in enumerate(others):
            if w_nu[idx] != 0.0:
                s_path = s_path + w_nu[idx] * cum_noise(seed, agent_stream(k),
                                                        start, count)
        base = -(theta / n) * s_path

        def cell_values(exp_path, cell):
            if delta != 1.0:
                return exp_path @ w_cells[cell] + coef_cells[cell] * exp_path[:, -1]
            row_run, row_term = rows[cell]
            const = float(row_run @ w) + eps * row_term
            return exp_path @ w + eps * exp_path[:, -1] + const

        sums = np.zeros(n_cells)
        sqsums = np.zeros(n_cells)
        eq_sum = eq_sqsum = 0.0
        j_eq = None
        for g in groups:
            path = own * (pi[i] + g) * noise_raw + base
            exp_path = np.exp(k_pow * path) if delta != 1.0 else path
            if g == 0.0:
                j_eq = cell_values(exp_path, ref)
                eq_sum = float(j_eq.sum())
                eq_sqsum = float((j_eq * j_eq).sum())
            for cell in group_cells.get(g, ()):
                diff = cell_values(exp_path, cell) - j_eq
                j = cell_index[cell]
                sums[j] += diff.sum()
                sqsums[j] += (diff * diff).sum()
        return count, sums, sqsums, eq_sum, eq_sqsum

    starts = list(range(0, paths, block_size))
    workers = worker_count()
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(block_task, starts))
    else:
        results = [block_task(s) for s in starts]

    total = 0
    sums = np.zeros(n_cells)
    sqsums = np.zeros(n_cells)
    eq_sum = eq_sqsum = 0.0
    for count, s, sq, es, esq in results:
        total += count
        sums += s
        sqsums += sq
        eq_sum += es
        eq_sqsum += esq

    def mean_stderr(s, sq):
        mean = s / total
        var = max((sq - total * mean * mean) / (total - 1), 0.0) if total > 1 else 0.0
        return mean, math.sqrt(var / total)

    eq_mean, eq_se = mean_stderr(eq_sum, eq_sqsum)
    out_cells = []
    for cell in cells:
        j = cell_index[cell]
        mean, se = mean_stderr(sums[j], sqsums[j])
        out_cells.append(BestResponseCell(dpi=cell[0], a=cell[1], b=cell[2],
                                          mean_diff=mean, stderr=se))
    report = BestResponseReport(
        agent=i, paths=total, seed=seed,
        equilibrium=UtilityEstimate(mean=eq_mean, stderr=eq_se, paths=total),
        cells=tuple(out_cells),
    )
    for cell in report.violations():
        raise ProfitableDeviationFound((cell.dpi, cell.a, cell.b),
                                       cell.mean_diff, cell.stderr, report)
    return report


# ---------------------------------------------------------------------------
# Mean-field convergence by exact replication
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceRow:
    """Worst-case gaps between the n-agent game and its mean-field limit."""

    n: int
    pi_gap: float
    beta_gap: float
    lambda_gap: float

    def as_dict(self) -> dict:
        return {"n": self.n, "pi_gap": self.pi_gap, "beta_gap": self.beta_gap,
                "lambda_gap": self.lambda_gap}


def replicate(d: TypeDistribution, n: int) -> Population:
    """An n-agent population realizing the distribution's weights exactly."""
    counts = []
    for w, _ in d.atoms:
        c = w * n
        c_int = round(c)
        if abs(c - c_int) > _WEIGHT_INT_TOL or c_int < 1:
            raise NonReplicableWeights(
                f"weight {w} cannot be realized with {n} agents"
            )
        counts.append(c_int)
    if sum(counts) != n:
        raise NonReplicableWeights(f"weights do not partition {n} agents")
    agents = []
    for (w, atom), c in zip(d.atoms, counts):
        agents.extend([atom] * c)
    return Population(horizon=d.horizon, agents=tuple(agents))


def mfg_convergence(d: TypeDistribution, ns: Sequence[int],
                    mf: MfEquilibrium | None = None) -> list[ConvergenceRow]:
    """Gap table |x^(n) - x^MF| for x in (pi, beta, lambda) over a list of n.

    Each n must replicate the distribution weights exactly; agents are
    matched to their atoms when measuring gaps.
    """
    validate_distribution(d)
    if mf is None:
        mf = solve_mf(d)
    rows = []
    for n in ns:
        pop = replicate(d, n)
        e = solve_n(pop)
        expanded_idx = []
        for j, (wgt, _) in enumerate(d.atoms):
            expanded_idx.extend([j] * round(wgt * n))
        idx = np.asarray(expanded_idx)
        rows.append(ConvergenceRow(
            n=n,
            pi_gap=float(np.max(np.abs(e.pi - mf.pi[idx]))),
            beta_gap=float(np.max(np.abs(e.beta - mf.beta[idx]))),
            lambda_gap=float(np.max(np.abs(e.lam - mf.lam[idx]))),
        ))
    return rows
