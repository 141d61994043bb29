"""Command-line surface: config handling, batch sweeps, and serialization.

Every run writes ``results.json`` plus a per-command CSV into the output
directory.  Numeric payloads are a pure function of the echoed config (the
seed is always explicit); wall-clock duration lives in a separate metadata
block so payloads stay byte-identical across reruns and job counts.

Exit codes: 0 success, 2 config error, 3 budget error, 4 flagged-sample
threshold exceeded.
"""

from __future__ import annotations

import csv
import functools
import json
import sys as _sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from . import __version__
from .chains import multiplicity_profile
from .errors import BudgetError, ConfigError, FlaggedSampleError
from .estimator import convergence_scan, default_tau, estimate_overlap_mc
from .ifs import IfsSystem, ProbabilityVector, system_from_spec, validate_system
from .pressure import hd_bound_bernoulli_convolution, hd_bound_biased

SCHEMA_VERSION = 1


def derive_seed(seed: int, index: int) -> int:
    """Per-entry seed for sweep position ``index`` (splitmix64 of the index)."""
    z = (index + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    z ^= z >> 31
    return (seed ^ z) & 0x7FFFFFFFFFFFFFFF


def _fmt(v):
    """Shortest round-trip decimal for floats; everything else verbatim."""
    if isinstance(v, float):
        return repr(v)
    return v


def _load_config(path):
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"cannot parse config {path}: {e}") from e


def _merged(config_path, **flags) -> dict:
    cfg = dict(_load_config(config_path)) if config_path else {}
    for k, v in flags.items():
        if v is not None:
            cfg[k] = v
    return cfg


def _system_from_cfg(cfg) -> IfsSystem:
    if "lambda" in cfg:
        lam = float(cfg["lambda"])
        if not 0.0 < lam < 1.0:
            raise ConfigError(f"lambda must be in (0, 1), got {lam}")
        return IfsSystem.bernoulli_convolution(lam)
    if "system" in cfg:
        return system_from_spec(cfg["system"])
    raise ConfigError("no system given: use --lambda or a 'system' config entry")


def _lambda_from_cfg(cfg) -> float:
    if "lambda" in cfg:
        return float(cfg["lambda"])
    sysspec = cfg.get("system", {})
    if "bernoulli_convolution" in sysspec:
        return float(sysspec["bernoulli_convolution"]["lambda"])
    raise ConfigError("this command needs a Bernoulli-convolution lambda")


def _p_from_cfg(cfg, k: int) -> ProbabilityVector:
    if "p" in cfg:
        probs = cfg["p"]
        if isinstance(probs, str):
            probs = [float(v) for v in probs.split(",")]
        try:
            return ProbabilityVector(probs)
        except ValueError as e:
            raise ConfigError(f"bad probability vector: {e}") from e
    return ProbabilityVector.uniform(k)


def _n_values(cfg, n: int) -> list[int]:
    if "n_values" in cfg:
        vals = cfg["n_values"]
        if isinstance(vals, str):
            vals = [int(v) for v in vals.split(",")]
        return list(vals)
    return sorted({max(2, n // 4), max(3, n // 2), max(4, (3 * n) // 4), n})


def _resolve_tau(cfg, p: ProbabilityVector):
    if "tau" in cfg and cfg["tau"] is not None:
        return float(cfg["tau"])
    return None if p.is_uniform else "auto"


def _grid_from_cfg(cfg) -> list[float]:
    grid = cfg.get("lambda_grid")
    if grid is None:
        grid = "0.55:0.95:0.05"
    if isinstance(grid, str):
        try:
            start, stop, step = (float(v) for v in grid.split(":"))
        except ValueError as e:
            raise ConfigError(f"bad lambda grid '{grid}' (want start:stop:step)") from e
        vals, i = [], 0
        while (v := round(start + i * step, 10)) <= stop + 1e-12:
            vals.append(v)
            i += 1
        grid = vals
    grid = [float(v) for v in grid]
    if any(not 0.5 < v < 1.0 for v in grid):
        raise ConfigError("lambda grid must stay inside (1/2, 1)")
    return grid


def _write_record(out_dir: Path, command: str, cfg: dict, results: dict,
                  header, rows, duration: float):
    out_dir.mkdir(parents=True, exist_ok=True)
    record = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": cfg,
        "results": results,
        "metadata": {"tool_version": __version__, "duration_s": duration},
    }
    json_path = out_dir / "results.json"
    with open(json_path, "w") as f:
        json.dump(record, f, indent=2, default=_fmt)
        f.write("\n")
    csv_path = out_dir / f"{command.replace('-', '_')}.csv"
    with open(csv_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return json_path, csv_path


def _cli_errors(f):
    @functools.wraps(f)
    def wrapped(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except ConfigError as e:
            click.echo(f"config error: {e}", err=True)
            _sys.exit(2)
        except BudgetError as e:
            click.echo(f"budget error: {e} "
                       "(hint: lower n, or raise OVERLAP_IFS_BUDGET)", err=True)
            _sys.exit(3)
        except FlaggedSampleError as e:
            click.echo(f"flagged-sample error: {e}", err=True)
            _sys.exit(4)
    return wrapped


def _common(f):
    for opt in reversed([
        click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                     help="JSON run configuration; flags override its fields."),
        click.option("--lambda", "lam", type=float, default=None,
                     help="Bernoulli-convolution contraction ratio."),
        click.option("--p", "p_text", type=str, default=None,
                     help="Comma-separated probability vector."),
        click.option("--n", type=int, default=None, help="Chain depth."),
        click.option("--samples", type=int, default=None, help="Monte Carlo sample count."),
        click.option("--tau", type=float, default=None, help="Log-probability window."),
        click.option("--seed", type=int, default=None, help="RNG seed (default 0)."),
        click.option("--quad-depth", type=int, default=None, help="Quadrature depth."),
        click.option("--jobs", type=int, default=None, help="Parallel sweep workers."),
        click.option("--out", "out_dir", type=click.Path(), default=None,
                     help="Output directory (default ./out)."),
        click.option("--figures", is_flag=True, default=False,
                     help="Also render matplotlib figures next to the CSV."),
    ]):
        f = opt(f)
    return f


def _gather(config_path, lam, p_text, n, samples, tau, seed, quad_depth, jobs, out_dir):
    cfg = _merged(config_path, **{
        "lambda": lam, "p": p_text, "n": n, "samples": samples, "tau": tau,
        "seed": seed, "quad_depth": quad_depth, "jobs": jobs, "out": out_dir,
    })
    cfg.setdefault("seed", 0)
    return cfg


@click.group()
@click.version_option(__version__)
def main():
    """Overlap numbers and dimension bounds for IFS with overlaps."""


@main.command("estimate-overlap")
@_common
@_cli_errors
def cmd_estimate_overlap(figures, **flags):
    """Estimate the overlap number over a grid of chain depths."""
    cfg = _gather(**flags)
    system = _system_from_cfg(cfg)
    p = _p_from_cfg(cfg, system.alphabet_size)
    n = int(cfg.get("n", 16))
    N = int(cfg.get("samples", 10_000))
    seed = int(cfg["seed"])
    tau = _resolve_tau(cfg, p)
    n_values = _n_values(cfg, n)
    t0 = time.perf_counter()
    report = convergence_scan(system, p, n_values, N, seed=seed, tau=tau)
    results = {
        "estimates": [e.to_dict() for e in report.estimates],
        "trend_slope": report.trend_slope,
        "headline": report.headline.to_dict(),
    }
    if not p.is_uniform and tau == "auto":
        # window sensitivity at half and double the default CLT scale
        sens = {}
        for mult, label in ((0.5, "tau_half"), (2.0, "tau_double")):
            est = estimate_overlap_mc(system, p, n, N, tau=mult * default_tau(n), seed=seed)
            sens[label] = est.to_dict()
        results["tau_sensitivity"] = sens
    rows = [(e.n, e.a_n, e.o_hat, e.ci_lo, e.ci_hi, e.lower_variant, e.upper_variant)
            for e in report.estimates]
    echo = {**cfg, "p": list(p.probs), "n_values": n_values, "samples": N}
    out = Path(cfg.get("out") or "out")
    jp, cp = _write_record(out, "estimate-overlap", echo, results,
                           ["n", "a_n", "o_hat", "ci_lo", "ci_hi", "lower", "upper"],
                           rows, time.perf_counter() - t0)
    if figures:
        from .figures import render_convergence
        render_convergence(report, out / "estimate_overlap.png")
    click.echo(f"headline o_hat = {report.headline.o_hat!r} at n = {report.headline.n}")
    click.echo(f"wrote {jp} and {cp}")


def _clamp_o(o: float) -> float:
    return min(2.0, max(1.0, o))


@main.command("hd-bound")
@_common
@_cli_errors
def cmd_hd_bound(figures, **flags):
    """Dimension upper bound from the estimated overlap number."""
    cfg = _gather(**flags)
    lam = _lambda_from_cfg(cfg)
    system = _system_from_cfg(cfg)
    p = _p_from_cfg(cfg, system.alphabet_size)
    n = int(cfg.get("n", 16))
    N = int(cfg.get("samples", 10_000))
    seed = int(cfg["seed"])
    tau = _resolve_tau(cfg, p)
    n_values = _n_values(cfg, n)
    t0 = time.perf_counter()
    report = convergence_scan(system, p, n_values, N, seed=seed, tau=tau)
    head = report.headline
    bound_fn = hd_bound_bernoulli_convolution if p.is_uniform else hd_bound_biased
    bound = bound_fn(lam, _clamp_o(head.o_hat))
    # the bound is decreasing in o, so the CI maps to [bound(ci_hi), bound(ci_lo)]
    hd_lo = bound_fn(lam, _clamp_o(head.ci_hi)).t_zero
    hd_hi = bound_fn(lam, _clamp_o(head.ci_lo)).t_zero
    results = {
        "headline": head.to_dict(),
        "hd_bound_raw": bound.t_zero,
        "hd_bound_clamped": bound.effective_bound,
        "hd_interval": [hd_lo, hd_hi],
    }
    rows = [(lam, head.o_hat, head.ci_lo, head.ci_hi,
             bound.t_zero, bound.effective_bound, hd_lo, hd_hi)]
    echo = {**cfg, "lambda": lam, "p": list(p.probs), "n_values": n_values, "samples": N}
    out = Path(cfg.get("out") or "out")
    jp, cp = _write_record(out, "hd-bound", echo, results,
                           ["lambda", "o_hat", "ci_lo", "ci_hi",
                            "hd_bound_raw", "hd_bound_clamped", "hd_lo", "hd_hi"],
                           rows, time.perf_counter() - t0)
    if figures:
        from .figures import render_convergence
        render_convergence(report, out / "hd_bound.png")
    click.echo(f"dimension bound {bound.effective_bound!r} (raw {bound.t_zero!r})")
    click.echo(f"wrote {jp} and {cp}")


def _sweep_entry(args):
    lam, probs, n, N, tau, seed = args
    system = IfsSystem.bernoulli_convolution(lam)
    p = ProbabilityVector(probs)
    t = default_tau(n) if tau == "auto" else tau
    est = estimate_overlap_mc(system, p, n, N, tau=t, seed=seed)
    bound_fn = hd_bound_bernoulli_convolution if p.is_uniform else hd_bound_biased
    bound = bound_fn(lam, _clamp_o(est.o_hat))
    return {
        "lambda": lam, "seed": seed,
        "o_hat": est.o_hat, "o_upper_variant": est.upper_variant,
        "a_n": est.a_n, "std_err": est.std_err, "flagged": est.flagged,
        "hd_bound_raw": bound.t_zero, "hd_bound_clamped": bound.effective_bound,
    }


@main.command("sweep-lambda")
@_common
@click.option("--lambda-grid", "grid_text", type=str, default=None,
              help="Grid as start:stop:step, inside (1/2, 1).")
@_cli_errors
def cmd_sweep_lambda(figures, grid_text, **flags):
    """Overlap estimates and dimension bounds across a lambda grid."""
    cfg = _gather(**flags)
    if grid_text is not None:
        cfg["lambda_grid"] = grid_text
    grid = _grid_from_cfg(cfg)
    p = _p_from_cfg(cfg, 2)
    n = int(cfg.get("n", 16))
    N = int(cfg.get("samples", 10_000))
    seed = int(cfg["seed"])
    tau = _resolve_tau(cfg, p)
    jobs = int(cfg.get("jobs", 1))
    tasks = [(lam, list(p.probs), n, N, tau, derive_seed(seed, i))
             for i, lam in enumerate(grid)]
    t0 = time.perf_counter()
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_sweep_entry, tasks))
    else:
        rows = [_sweep_entry(t) for t in tasks]
    rows.sort(key=lambda r: r["lambda"])
    echo = {**cfg, "lambda_grid": grid, "p": list(p.probs), "n": n, "samples": N}
    out = Path(cfg.get("out") or "out")
    jp, cp = _write_record(
        out, "sweep-lambda", echo, {"rows": rows},
        ["lambda", "o_hat", "o_upper_variant", "hd_bound_raw", "hd_bound_clamped"],
        [(r["lambda"], r["o_hat"], r["o_upper_variant"],
          r["hd_bound_raw"], r["hd_bound_clamped"]) for r in rows],
        time.perf_counter() - t0)
    if figures and rows:
        from .figures import render_sweep
        render_sweep(rows, out / "sweep_lambda.png")
    click.echo(f"wrote {jp} and {cp}")


@main.command("beta-profile")
@_common
@_cli_errors
def cmd_beta_profile(figures, **flags):
    """Exact chain-multiplicity step function at depth n."""
    cfg = _gather(**flags)
    system = _system_from_cfg(cfg)
    n = int(cfg.get("n", 6))
    t0 = time.perf_counter()
    profile = multiplicity_profile(system, n)
    rows = list(profile.rows())
    results = {"n": n, "max_count": profile.max_count, "segments": len(rows)}
    out = Path(cfg.get("out") or "out")
    jp, cp = _write_record(out, "beta-profile", {**cfg, "n": n}, results,
                           ["breakpoint_lo", "breakpoint_hi", "count"], rows,
                           time.perf_counter() - t0)
    if figures:
        from .figures import render_profile
        render_profile(profile, out / "beta_profile.png")
    click.echo(f"wrote {jp} and {cp}")


@main.command("validate")
@_common
@_cli_errors
def cmd_validate(figures, **flags):
    """Check system invariants and report first-level overlaps."""
    cfg = _gather(**flags)
    system = _system_from_cfg(cfg)
    t0 = time.perf_counter()
    report = validate_system(system)
    results = {
        "contraction_ok": report.contraction_ok,
        "hull_invariant_ok": report.hull_invariant_ok,
        "hull_covered": report.hull_covered,
        "overlapping": report.overlapping,
        "overlap_pairs": [list(p) for p in report.overlap_pairs],
        "hull": [system.hull.lo, system.hull.hi],
    }
    click.echo(json.dumps(results, default=_fmt, indent=2))
    out = Path(cfg.get("out") or "out")
    rows = [(i, m.ratio, m.offset) for i, m in enumerate(system.maps)]
    _write_record(out, "validate", cfg, results,
                  ["map_index", "ratio", "offset"], rows, time.perf_counter() - t0)


if __name__ == "__main__":
    main()
