"""Command-line surface: run one experiment, run sweeps, dump references."""

from __future__ import annotations

import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import click
import numpy as np

from . import net as nets
from .config import ConfigError, load_config
from .loss import ErrorKind
from .problems import get_problem, problem_names
from .trainer import (
    TrainConfig,
    TrainingError,
    init_flat_params,
    split_flat_params,
    train,
)

OUT_DIR_ENV = "PINNVAR_OUT_DIR"


def _out_dir(cfg_out, flag_out):
    return flag_out or os.environ.get(OUT_DIR_ENV) or cfg_out


def _save_networks(problem, result, out_dir):
    for name, network in zip(problem.field_names, result.networks):
        nets.save_checkpoint(
            network, os.path.join(out_dir, f"checkpoint_{name}.json"))


@click.group()
def main():
    """Variance-regularized PINN training engine."""


@main.command("run")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None)
def cmd_run(config_path, seed, out_dir):
    """Train one configuration and write its run record and checkpoints."""
    try:
        exp = load_config(config_path)
    except ConfigError as err:
        raise click.ClickException(f"config error in {config_path}: {err}")
    cfg = exp.base
    if seed is not None:
        cfg.seed = seed
    problem = get_problem(cfg.problem)
    dest = _out_dir(exp.out_dir, out_dir)
    run_id = f"{cfg.problem}_a{cfg.alpha:g}_s{cfg.seed}"
    run_dir = os.path.join(dest, run_id)
    try:
        result = train(problem, cfg)
    except TrainingError as err:
        raise click.ClickException(f"training aborted: {err}")
    result.record.save(run_dir, run_id)
    _save_networks(problem, result, run_dir)
    final = result.final_eval
    for f in problem.field_names:
        click.echo(f"{run_id} {f}: L2={final.l2[f]:.3e} Linf={final.linf[f]:.3e}")
    click.echo(f"wrote {run_dir}")


def _sweep_cell(args):
    """One sweep run; module-level so it can cross a process boundary."""
    problem_name, cfg_kwargs, label, seed, dest = args
    problem = get_problem(problem_name)
    cfg = TrainConfig(problem=problem_name, seed=seed, **cfg_kwargs)
    init = init_flat_params(problem, seed)
    run_id = f"{problem_name}_{label}_s{seed}"
    run_dir = os.path.join(dest, run_id)
    row = {"label": label, "seed": seed}
    try:
        result = train(problem, cfg, initial_params=init)
        result.record.save(run_dir, run_id)
        _save_networks(problem, result, run_dir)
        for f in problem.field_names:
            row[f"{f}_l2"] = result.final_eval.l2[f]
            row[f"{f}_linf"] = result.final_eval.linf[f]
        row["wall_seconds"] = result.record.rows[-1][-1]
    except Exception as err:
        row["error"] = f"{type(err).__name__}: {err}"
    return row


@main.command("sweep")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Sweep cells to run in parallel.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None)
def cmd_sweep(config_path, jobs, out_dir):
    """Run the alpha / loss-variant comparison described by a config.

    Each seed draws one Xavier initialization, checkpoints it, and reuses it
    for every alpha value and variant of that seed.
    """
    try:
        exp = load_config(config_path)
    except ConfigError as err:
        raise click.ClickException(f"config error in {config_path}: {err}")
    if not exp.alphas and not exp.variants:
        raise click.ClickException(
            "sweep needs a nonempty 'alphas' or 'variants' list")
    seeds = exp.seeds or [exp.base.seed]
    problem = get_problem(exp.base.problem)
    dest = _out_dir(exp.out_dir, out_dir)
    os.makedirs(dest, exist_ok=True)

    overrides = exp.overrides()
    cells = []
    for seed in seeds:
        # checkpoint the shared initialization once per seed
        init = init_flat_params(problem, seed)
        layer_sets = split_flat_params(problem, init, as_vars=False)
        for fname, dims, layers in zip(problem.field_names,
                                       problem.field_dims, layer_sets):
            network = nets.DenseNetwork(
                list(dims), [w for w, _ in layers], [b for _, b in layers],
                seed=seed)
            nets.save_checkpoint(network, os.path.join(
                dest, f"init_s{seed}_{fname}.json"))
        for alpha in exp.alphas:
            cells.append((problem.name, {**overrides, "alpha": alpha},
                          f"alpha{alpha:g}", seed, dest))
        for v in exp.variants:
            if v == "variance":
                continue
            kw = dict(overrides)
            if v == "mse":
                kw["alpha"] = 1.0
            elif v == "huber":
                kw["alpha"] = 1.0
                kw["error_kind"] = ErrorKind("huber", 1.0)
            elif v == "gpinn":
                kw["alpha"] = 1.0
                kw["gpinn_weight"] = 1.0
            cells.append((problem.name, kw, v, seed, dest))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(c) for c in cells]

    fields = ["label", "seed"]
    for f in problem.field_names:
        fields += [f"{f}_l2", f"{f}_linf"]
    fields += ["wall_seconds", "error"]
    with open(os.path.join(dest, "comparison.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for row in rows:
            w.writerow({k: row.get(k, "") for k in fields})
    failures = [r for r in rows if "error" in r]
    for r in failures:
        click.echo(f"FAILED {r['label']} seed {r['seed']}: {r['error']}", err=True)
    click.echo(f"wrote {os.path.join(dest, 'comparison.csv')} "
               f"({len(rows) - len(failures)}/{len(rows)} runs ok)")


def _parse_grid(spec, dim):
    if spec is None:
        return None
    parts = [int(p) for p in str(spec).lower().split("x")]
    if len(parts) != dim:
        raise click.ClickException(
            f"--grid must have {dim} part(s) for this problem, e.g. "
            + ("1001" if dim == 1 else "256x101"))
    return parts


@main.command("dump-reference")
@click.argument("problem_name", type=click.Choice(problem_names()))
@click.option("--grid", default=None,
              help="Grid resolution, e.g. 1001 or 256x101.")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Output CSV file (1-field problems) or directory.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None)
def cmd_dump_reference(problem_name, grid, out_path, out_dir):
    """Write reference field values on an evaluation grid as CSV."""
    problem = get_problem(problem_name)
    shape = _parse_grid(grid, problem.domain.dim)
    pts = problem.eval_grid(*shape) if shape else problem.eval_grid()
    fields = dict(problem.reference_fields(pts))
    if hasattr(problem, "body_force_fields"):
        fields.update(problem.body_force_fields(pts))
    coord_names = {
        "interval": ["x"], "rectangle": ["x", "y"], "space_time": ["x", "t"],
    }[problem.domain.kind]
    cols = problem.grid_columns(pts)

    dest = out_path or _out_dir("reference", out_dir)
    if len(fields) == 1:
        (name, values), = fields.items()
        path = dest if dest.endswith(".csv") else os.path.join(
            dest, f"{problem_name}_{name}.csv")
        targets = [(name, values, path)]
    else:
        targets = [(name, values,
                    os.path.join(dest, f"{problem_name}_{name}.csv"))
                   for name, values in fields.items()]
    for name, values, path in targets:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(coord_names + ["field_name", "value"])
            for i in range(len(values)):
                w.writerow([repr(float(c[i])) for c in cols]
                           + [name, repr(float(values[i]))])
        click.echo(f"wrote {path} ({len(values)} rows)")


if __name__ == "__main__":
    sys.exit(main())
