"""Command-line interface: gen, solve, audit, and bench subcommands.

Exit codes: 0 on success, 2 when a run completes but a guarantee-void
flag was raised (or an audit fails), 1 on any error.  All randomness is
seeded through the --seed flags; nothing reads the environment.
"""

from __future__ import annotations

import dataclasses
import json
import sys

import click

from conedp.eja import AlgebraDescriptor
from conedp.mechanisms import PrivacyBudget, Sensitivity
from conedp.harness.audit import privacy_audit
from conedp.harness.generators import generate_covering_sdp, generate_feasible_scp
from conedp.harness.instances import load_instance, save_instance
from conedp.harness.runner import (
    SOLVER_NAMES,
    run_experiment,
    write_records,
)
from conedp.solvers import SolverConfig

# Usage errors exit 1 like any other error; 2 is reserved for
# guarantee-void completions.
click.UsageError.exit_code = 1


@click.group()
def main():
    """Private symmetric-cone-program toolkit."""


@main.command()
@click.option("--kind", type=click.Choice(["covering-sdp", "feasible-scp"]), required=True)
@click.option("--alg", default=None, help="Algebra spec like r2+s3+q4 (feasible-scp).")
@click.option("--r", "rank", type=int, default=None, help="Matrix size (covering-sdp).")
@click.option("--m", type=int, required=True, help="Number of constraints.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--margin", type=float, default=0.05, show_default=True)
@click.option("--analytic", is_flag=True, help="Emit the all-equal covering instance.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def gen(kind, alg, rank, m, seed, margin, analytic, out):
    """Generate an instance file."""
    if kind == "covering-sdp":
        if rank is None:
            raise click.UsageError("covering-sdp needs --r")
        instance, metadata = generate_covering_sdp(rank, m, seed, analytic=analytic)
    else:
        if alg is None:
            raise click.UsageError("feasible-scp needs --alg")
        descriptor = AlgebraDescriptor.from_spec(alg)
        instance, metadata = generate_feasible_scp(descriptor, m, margin, seed)
    save_instance(out, instance, metadata)
    click.echo(f"wrote {out} ({metadata['generator']}, m={m})")


@main.command()
@click.option("--instance", "instance_path", type=click.Path(exists=True), required=True)
@click.option("--solver", type=click.Choice(SOLVER_NAMES), required=True)
@click.option("--eps", type=float, default=1.0, show_default=True)
@click.option("--delta", type=float, default=1e-5, show_default=True)
@click.option("--alpha", type=float, default=0.1, show_default=True)
@click.option("--beta", type=float, default=0.05, show_default=True)
@click.option("--s", "density", type=int, default=1, show_default=True)
@click.option("--dinf", type=float, default=0.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--opt", type=float, default=None, help="Trace budget for covering-hs.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None)
def solve(instance_path, solver, eps, delta, alpha, beta, density, dinf, seed, opt, csv_path):
    """Run one solver on one instance with one seed."""
    instance, metadata = load_instance(instance_path)
    if solver == "covering-hs" and opt is None:
        opt = metadata.get("planted_opt")
        if opt is None:
            raise click.UsageError("covering-hs needs --opt or planted_opt metadata")
    config = SolverConfig(
        alpha=alpha,
        beta=beta,
        budget=PrivacyBudget(eps, delta),
        density=density,
        sensitivity=Sensitivity(dinf, "linf"),
        seed=seed,
    )
    records = run_experiment(instance, solver, config, [seed], opt=opt)
    record = records[0]
    if csv_path:
        write_records(csv_path, records, include_wall=False, append=True)
    click.echo(
        f"{solver}: T={record.iterations} max_violation={record.max_violation:.6g} "
        f"violated={record.num_violated} flags={list(record.guarantee_flags)}"
    )
    if record.guarantee_flags:
        sys.exit(2)


@main.command()
@click.option("--mech", type=click.Choice(["exponential", "dual-oracle", "gaussian"]), required=True)
@click.option("--eps", type=float, default=1.0, show_default=True)
@click.option("--delta", type=float, default=1e-5, show_default=True)
@click.option("--trials", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--negative-control", is_flag=True, help="Mis-calibrate on purpose.")
def audit(mech, eps, delta, trials, seed, negative_control):
    """Audit a mechanism against its declared privacy level."""
    report = privacy_audit(
        mech, eps, trials, seed, delta=delta, negative_control=negative_control
    )
    click.echo(json.dumps(dataclasses.asdict(report), indent=1, default=float))
    if not report.passed:
        sys.exit(2)


@main.command()
@click.option("--instance", "instance_path", type=click.Path(exists=True), required=True)
@click.option("--solver", type=click.Choice(SOLVER_NAMES), required=True)
@click.option("--eps-grid", default="0.5,1,2,4", show_default=True)
@click.option("--seeds", type=int, default=5, show_default=True)
@click.option("--delta", type=float, default=1e-5, show_default=True)
@click.option("--alpha", type=float, default=0.1, show_default=True)
@click.option("--beta", type=float, default=0.05, show_default=True)
@click.option("--s", "density", type=int, default=1, show_default=True)
@click.option("--dinf", type=float, default=0.0, show_default=True)
@click.option("--opt", type=float, default=None)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), required=True)
def bench(instance_path, solver, eps_grid, seeds, delta, alpha, beta, density, dinf, opt, csv_path):
    """Sweep epsilon values and seeds, appending timed rows to a CSV."""
    instance, metadata = load_instance(instance_path)
    if solver == "covering-hs" and opt is None:
        opt = metadata.get("planted_opt")
    any_flags = False
    for eps in (float(tok) for tok in eps_grid.split(",")):
        config = SolverConfig(
            alpha=alpha,
            beta=beta,
            budget=PrivacyBudget(eps, delta),
            density=density,
            sensitivity=Sensitivity(dinf, "linf"),
        )
        records = run_experiment(instance, solver, config, range(seeds), opt=opt)
        write_records(csv_path, records, include_wall=True, append=True)
        any_flags = any_flags or any(r.guarantee_flags for r in records)
        click.echo(f"eps={eps}: wrote {len(records)} rows")
    if any_flags:
        sys.exit(2)


if __name__ == "__main__":
    main()
