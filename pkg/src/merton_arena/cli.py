"""Command-line front end.

Subcommands: ``solve-n`` (per-agent equilibrium CSV), ``curves``
(consumption curves over a delta list), ``regime`` (consumption-regime
grid), ``sweep`` (mid-horizon consumption over a (delta, theta) grid),
``simulate`` (path summaries), ``verify`` (fixed-point, best-response and
convergence report as JSON).

Output files are CSV with 17-significant-digit floats and ``#`` comment
lines echoing the config and scalar outputs, so they round-trip losslessly.
Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import mfg, nplayer, policy, simulation, verification
from .errors import MertonArenaError, NumericalError, ValidationError
from .types import (
    AgentType,
    Population,
    TypeDistribution,
    detect_single_stock,
    load_config,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

_DEFAULT_DPI = (-0.5, -0.1, 0.0, 0.1, 0.5)
_DEFAULT_AB = (-0.2, -0.05, 0.0, 0.05, 0.2)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _parse_range(text: str) -> np.ndarray:
    """Parse 'a:b:k' into k evenly spaced values from a to b."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"range must look like a:b:k, got {text!r}")
    a, b, k = float(parts[0]), float(parts[1]), int(parts[2])
    if k < 1:
        raise ValidationError(f"range must contain at least one point, got {text!r}")
    return np.linspace(a, b, k)


@dataclasses.dataclass
class RunConfig:
    """Parsed command-line options shared by the subcommands."""

    command: str
    config: str
    out: str
    grid: int
    paths: int
    seed: int
    time_grid: int
    deltas: np.ndarray | None
    thetas: np.ndarray | None

    def validate(self) -> None:
        if self.grid < 2:
            raise ValidationError(f"--grid must be >= 2, got {self.grid}")
        if self.paths < 1:
            raise ValidationError(f"--paths must be >= 1, got {self.paths}")
        if self.time_grid < 2:
            raise ValidationError(f"--time-grid must be >= 2, got {self.time_grid}")


def _write_csv(path: str, comments: list[str], header: list[str],
               rows: list[list]) -> None:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(x if isinstance(x, str) else _fmt(x) for x in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _config_echo(obj) -> str:
    return "config: " + json.dumps(obj.to_dict(), sort_keys=True)


def _require_population(obj) -> Population:
    if not isinstance(obj, Population):
        raise ValidationError("this command needs a population config ('agents' list)")
    return obj


def _require_distribution(obj) -> TypeDistribution:
    if not isinstance(obj, TypeDistribution):
        raise ValidationError("this command needs a distribution config ('atoms' list)")
    return obj


def _representative(d: TypeDistribution, overrides: dict | None) -> AgentType:
    """First atom's type, with optional config-level field overrides."""
    base = d.types[0]
    if overrides:
        known = {f.name for f in dataclasses.fields(AgentType)}
        bad = set(overrides) - known
        if bad:
            raise ValidationError(f"unknown representative fields: {sorted(bad)}")
        base = dataclasses.replace(base, **{k: float(v) for k, v in overrides.items()})
    return base


def _load(path: str) -> tuple[Population | TypeDistribution, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return load_config(path), raw


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_solve_n(rc: RunConfig) -> int:
    obj, _ = _load(rc.config)
    p = _require_population(obj)
    e = nplayer.solve_n(p)
    comments = [
        "merton-arena solve-n",
        _config_echo(p),
        f"phi = {_fmt(e.aggregates.phi)}",
        f"psi = {_fmt(e.aggregates.psi)}",
    ]
    if e.theta_crit is not None:
        comments.append(f"theta_crit = {_fmt(e.theta_crit)}")
    rows = [[str(i), e.pi[i], e.rho[i], e.beta[i], e.lam[i]] for i in range(p.n)]
    _write_csv(rc.out, comments, ["agent", "pi_star", "rho", "beta", "lambda"], rows)
    return EXIT_OK


def parse_solve_csv(path: str) -> dict:
    """Re-parse a solve-n CSV into scalars and per-agent arrays."""
    scalars: dict = {}
    table: list[list[float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    name, _, value = body.partition("=")
                    scalars[name.strip()] = float(value)
                continue
            if not line or line.startswith("agent"):
                continue
            table.append([float(v) for v in line.split(",")])
    arr = np.asarray(table)
    return {
        **scalars,
        "pi": arr[:, 1],
        "rho": arr[:, 2],
        "beta": arr[:, 3],
        "lambda": arr[:, 4],
    }


def cmd_curves(rc: RunConfig) -> int:
    obj, raw = _load(rc.config)
    d = _require_distribution(obj)
    rep = _representative(d, raw.get("representative"))
    deltas = rc.deltas if rc.deltas is not None else np.array([0.5, 1.0, 2.0, 3.0, 5.0])
    agg = mfg.aggregates_mf(d)
    times = np.linspace(0.0, d.horizon, rc.time_grid)
    comments = ["merton-arena curves", _config_echo(d)]
    if detect_single_stock(d) is not None:
        comments.append(f"theta_crit = {_fmt(mfg.theta_crit_mf(d))}")
    columns = []
    for dv in deltas:
        t = dataclasses.replace(rep, delta=float(dv))
        beta = mfg.beta_mf(t, agg)
        lam = mfg.lambda_mf(t, agg)
        comments.append(f"delta = {_fmt(dv)} : beta = {_fmt(beta)}, lambda = {_fmt(lam)}")
        columns.append(policy.ConsumptionPolicy(beta, lam, d.horizon).rate(times))
    header = ["t"] + [f"c(delta={_fmt(dv)})" for dv in deltas]
    rows = [[times[j]] + [col[j] for col in columns] for j in range(len(times))]
    _write_csv(rc.out, comments, header, rows)
    return EXIT_OK


def _single_stock_grid(rc: RunConfig, d: TypeDistribution, raw: dict):
    market = detect_single_stock(d)
    if market is None:
        raise ValidationError("regime/sweep need a single-stock distribution")
    rep = _representative(d, raw.get("representative"))
    tc = mfg.theta_crit_mf(d)
    agg = mfg.aggregates_mf(d)
    deltas = rc.deltas if rc.deltas is not None else np.linspace(0.05, 6.0, 120)
    thetas = rc.thetas if rc.thetas is not None else np.linspace(0.0, 1.0, 21)
    return market, rep, tc, agg, deltas, thetas


def cmd_regime(rc: RunConfig) -> int:
    obj, raw = _load(rc.config)
    d = _require_distribution(obj)
    market, rep, tc, agg, deltas, thetas = _single_stock_grid(rc, d, raw)
    comments = ["merton-arena regime", _config_echo(d), f"theta_crit = {_fmt(tc)}"]
    rows = []
    for th in thetas:
        for dv in deltas:
            t = dataclasses.replace(rep, delta=float(dv), theta=float(th))
            deff = mfg.delta_eff(t, tc)
            beta = market.mu**2 / (2.0 * market.sigma**2) * deff * (1.0 - deff)
            lam = mfg.lambda_mf(t, agg)
            regime = policy.classify_regime(beta, lam)
            rows.append([dv, th, regime.value, beta, deff])
    _write_csv(rc.out, comments, ["delta", "theta", "regime", "beta", "delta_eff"], rows)
    return EXIT_OK


def cmd_sweep(rc: RunConfig) -> int:
    obj, raw = _load(rc.config)
    d = _require_distribution(obj)
    market, rep, tc, agg, deltas, thetas = _single_stock_grid(rc, d, raw)
    comments = ["merton-arena sweep", _config_echo(d), f"theta_crit = {_fmt(tc)}"]
    half = 0.5 * d.horizon
    rows = []
    for th in thetas:
        for dv in deltas:
            t = dataclasses.replace(rep, delta=float(dv), theta=float(th))
            deff = mfg.delta_eff(t, tc)
            beta = market.mu**2 / (2.0 * market.sigma**2) * deff * (1.0 - deff)
            lam = mfg.lambda_mf(t, agg)
            c_mid = policy.ConsumptionPolicy(beta, lam, d.horizon).rate(half)
            rows.append([dv, th, beta, lam, c_mid])
    _write_csv(rc.out, comments, ["delta", "theta", "beta", "lambda", "c_mid"], rows)
    return EXIT_OK


def _strategy_from_config(p: Population, raw: dict) -> simulation.StrategyProfile:
    override = raw.get("strategy")
    if override is None:
        return simulation.equilibrium_strategy(p, nplayer.solve_n(p))
    pi = override.get("pi")
    c = override.get("c")
    if pi is None or c is None:
        raise ValidationError("strategy override needs 'pi' and 'c' lists")
    if len(pi) != p.n or len(c) != p.n:
        raise ValidationError("strategy override length must match the agent count")
    return simulation.constant_strategy(pi, c)


def cmd_simulate(rc: RunConfig) -> int:
    obj, raw = _load(rc.config)
    p = _require_population(obj)
    s = _strategy_from_config(p, raw)
    keep = np.unique(np.round(np.linspace(0, rc.grid, rc.time_grid)).astype(int))
    times = np.linspace(0.0, p.horizon, rc.grid + 1)

    kept = []
    for _, log_wealth, _, _ in simulation.iter_path_blocks(
            p, s, rc.grid, rc.paths, rc.seed):
        kept.append(log_wealth[:, :, keep])
    data = np.concatenate(kept, axis=0)

    comments = [
        "merton-arena simulate",
        _config_echo(p),
        f"paths = {rc.paths}",
        f"grid = {rc.grid}",
        f"seed = {rc.seed}",
    ]
    header = ["t"]
    for k in range(p.n):
        header += [f"agent{k}_mean", f"agent{k}_p05", f"agent{k}_p50", f"agent{k}_p95"]
    rows = []
    for j, idx in enumerate(keep):
        row = [times[idx]]
        for k in range(p.n):
            col = data[:, k, j]
            row += [col.mean(), np.percentile(col, 5), np.percentile(col, 50),
                    np.percentile(col, 95)]
        rows.append(row)
    _write_csv(rc.out, comments, header, rows)
    return EXIT_OK


def cmd_verify(rc: RunConfig) -> int:
    obj, _ = _load(rc.config)
    p = _require_population(obj)
    e = nplayer.solve_n(p)

    fp = verification.fixed_point_check(p, e)
    fp_pass = fp.passes()

    br_reports = []
    br_pass = True
    for i in range(p.n):
        try:
            report = verification.best_response_test(
                p, e, i, _DEFAULT_DPI, _DEFAULT_AB, rc.paths, rc.seed, grid=rc.grid)
        except verification.ProfitableDeviationFound as exc:
            report = exc.report
            br_pass = False
        br_reports.append(report.as_dict())

    weights = [1.0 / p.n] * p.n
    dist = TypeDistribution(
        horizon=p.horizon, atoms=tuple(zip(weights, p.agents)))
    ns = [p.n * k for k in (1, 2, 4, 8)]
    conv = verification.mfg_convergence(dist, ns)
    conv_pass = (conv[-1].pi_gap <= conv[0].pi_gap + 1e-12
                 and conv[-1].beta_gap <= conv[0].beta_gap + 1e-12)

    passed = fp_pass and br_pass and conv_pass
    payload = {
        "population": p.to_dict(),
        "paths": rc.paths,
        "grid": rc.grid,
        "seed": rc.seed,
        "fixed_point": {**fp.as_dict(), "passed": fp_pass},
        "best_response": {"reports": br_reports, "passed": br_pass},
        "mfg_convergence": {"rows": [r.as_dict() for r in conv], "passed": conv_pass},
        "passed": passed,
    }
    with open(rc.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK if passed else EXIT_NUMERICAL


_COMMANDS = {
    "solve-n": cmd_solve_n,
    "curves": cmd_curves,
    "regime": cmd_regime,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="merton-arena",
        description="Equilibria of the competitive investment/consumption game",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON population/distribution")
        sp.add_argument("--out", required=True, help="output CSV/JSON path")
        sp.add_argument("--grid", type=int, default=simulation.DEFAULT_GRID,
                        help="simulation grid steps")
        sp.add_argument("--paths", type=int, default=simulation.DEFAULT_PATHS,
                        help="Monte Carlo paths")
        sp.add_argument("--seed", type=int, default=0, help="master seed")
        sp.add_argument("--time-grid", type=int, default=101,
                        help="time samples for curves/summaries")
        sp.add_argument("--delta-range", default=None, metavar="a:b:k",
                        help="risk-tolerance sweep range")
        sp.add_argument("--theta-range", default=None, metavar="a:b:k",
                        help="competition-weight sweep range")
        sp.add_argument("--deltas", default=None,
                        help="explicit comma-separated delta list (overrides --delta-range)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        deltas = None
        if args.deltas is not None:
            deltas = np.array([float(v) for v in args.deltas.split(",")])
        elif args.delta_range is not None:
            deltas = _parse_range(args.delta_range)
        thetas = _parse_range(args.theta_range) if args.theta_range else None
        rc = RunConfig(
            command=args.command, config=args.config, out=args.out,
            grid=args.grid, paths=args.paths, seed=args.seed,
            time_grid=args.time_grid, deltas=deltas, thetas=thetas,
        )
        rc.validate()
        return _COMMANDS[args.command](rc)
    except (ValidationError, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"merton-arena: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"merton-arena: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except MertonArenaError as exc:
        print(f"merton-arena: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
