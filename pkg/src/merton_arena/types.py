"""Agent parameter containers, populations, type distributions, validation.

An agent is described by the vector (x0, delta, theta, eps, mu, nu, sigma):
initial wealth, risk tolerance, competition weight, terminal-wealth weight,
drift, idiosyncratic volatility, and common volatility.  A finite game is a
`Population` (ordered agents plus a horizon); its continuum counterpart is a
`TypeDistribution` (weighted atoms).  All containers are immutable and all
operations here are pure functions.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from types import SimpleNamespace

import numpy as np

from .errors import (
    DegenerateVolatility,
    InvalidWeights,
    NonPositiveParameter,
    ThetaOutOfRange,
    TooFewAgents,
    ValidationError,
)

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class AgentType:
    """One agent's parameter vector."""

    x0: float
    delta: float
    theta: float
    eps: float
    mu: float
    nu: float
    sigma: float

    @property
    def Sigma(self) -> float:
        """Total instantaneous variance sigma^2 + nu^2."""
        return self.sigma * self.sigma + self.nu * self.nu

    def check(self, index: int | None = None) -> None:
        """Raise a ValidationError naming the first violated field."""
        for field in ("x0", "delta", "eps", "mu"):
            if not getattr(self, field) > 0:
                raise NonPositiveParameter(field, index)
        if not 0.0 <= self.theta <= 1.0:
            raise ThetaOutOfRange(index)
        for field in ("nu", "sigma"):
            if getattr(self, field) < 0:
                raise NonPositiveParameter(field, index)
        if self.sigma + self.nu <= 0:
            raise DegenerateVolatility(index)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class Population:
    """A finite n-agent game: common horizon plus an ordered agent list."""

    horizon: float
    agents: tuple[AgentType, ...]

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))

    @property
    def n(self) -> int:
        return len(self.agents)

    def arrays(self) -> SimpleNamespace:
        """Per-field numpy views of the agent parameters."""
        out = SimpleNamespace()
        for name in ("x0", "delta", "theta", "eps", "mu", "nu", "sigma"):
            setattr(out, name, np.array([getattr(a, name) for a in self.agents]))
        out.Sigma = out.sigma**2 + out.nu**2
        return out

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "agents": [a.to_dict() for a in self.agents]}


@dataclass(frozen=True)
class TypeDistribution:
    """Weighted atoms on the type space; weights sum to one."""

    horizon: float
    atoms: tuple[tuple[float, AgentType], ...]

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple((float(w), a) for w, a in self.atoms))

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.atoms])

    @property
    def types(self) -> tuple[AgentType, ...]:
        return tuple(a for _, a in self.atoms)

    def arrays(self) -> SimpleNamespace:
        out = SimpleNamespace()
        for name in ("x0", "delta", "theta", "eps", "mu", "nu", "sigma"):
            setattr(out, name, np.array([getattr(a, name) for _, a in self.atoms]))
        out.Sigma = out.sigma**2 + out.nu**2
        out.w = self.weights
        return out

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "atoms": [{"weight": w, **a.to_dict()} for w, a in self.atoms],
        }


@dataclass(frozen=True)
class SingleStockMarket:
    """Shared (mu, sigma) when every agent trades the same stock (nu = 0)."""

    mu: float
    sigma: float


def validate_population(p: Population) -> None:
    """Check every agent invariant plus n >= 2 and T > 0.

    Raises the subclass of ValidationError naming the first violation;
    returns None when the population is valid.
    """
    if p.n < 2:
        raise TooFewAgents(p.n)
    if not p.horizon > 0:
        raise NonPositiveParameter("horizon")
    for i, agent in enumerate(p.agents):
        agent.check(i)


def validate_distribution(d: TypeDistribution) -> None:
    """Check atom validity, positive weights and unit total weight."""
    if not d.horizon > 0:
        raise NonPositiveParameter("horizon")
    if len(d.atoms) == 0:
        raise InvalidWeights("distribution has no atoms")
    for i, (w, atom) in enumerate(d.atoms):
        if not w > 0:
            raise InvalidWeights(f"atom {i} has nonpositive weight {w}")
        atom.check(i)
    total = math.fsum(w for w, _ in d.atoms)
    if abs(total - 1.0) > _WEIGHT_TOL:
        raise InvalidWeights(f"weights sum to {total!r}, expected 1")


def detect_single_stock(p: Population | TypeDistribution) -> SingleStockMarket | None:
    """Return the shared market when all agents have nu=0 and identical (mu, sigma).

    Equality is exact (bitwise): the single-stock formulas are algebraic
    identities, not approximations, so callers opting in must supply exactly
    matching parameters.
    """
    agents = p.agents if isinstance(p, Population) else p.types
    first = agents[0]
    for a in agents:
        if a.nu != 0.0 or a.mu != first.mu or a.sigma != first.sigma:
            return None
    return SingleStockMarket(first.mu, first.sigma)


# ---------------------------------------------------------------------------
# JSON config schema (consumed by the CLI)
#
#   population:   {"horizon": T, "agents": [{"x0":, "delta":, "theta":,
#                  "eps":, "mu":, "nu":, "sigma":}, ...]}
#   distribution: {"horizon": T, "atoms": [{"weight":, "x0":, ...}, ...]}
# ---------------------------------------------------------------------------

_AGENT_FIELDS = ("x0", "delta", "theta", "eps", "mu", "nu", "sigma")


def _agent_from_dict(entry: dict, index: int) -> AgentType:
    missing = [k for k in _AGENT_FIELDS if k not in entry]
    if missing:
        raise ValidationError(f"agent entry {index} is missing fields {missing}")
    return AgentType(**{k: float(entry[k]) for k in _AGENT_FIELDS})


def population_from_dict(cfg: dict) -> Population:
    agents = tuple(_agent_from_dict(e, i) for i, e in enumerate(cfg["agents"]))
    return Population(horizon=float(cfg["horizon"]), agents=agents)


def distribution_from_dict(cfg: dict) -> TypeDistribution:
    atoms = tuple(
        (float(e["weight"]), _agent_from_dict(e, i))
        for i, e in enumerate(cfg["atoms"])
    )
    return TypeDistribution(horizon=float(cfg["horizon"]), atoms=atoms)


def load_config(path: str) -> Population | TypeDistribution:
    """Parse a JSON config file into a Population or TypeDistribution."""
    with open(path, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    if "agents" in cfg:
        return population_from_dict(cfg)
    if "atoms" in cfg:
        return distribution_from_dict(cfg)
    raise ValidationError("config must contain an 'agents' or 'atoms' list")
