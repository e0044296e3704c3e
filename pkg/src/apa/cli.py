"""Command-line entry points for the pipeline stages and the service.

Exit codes: 0 success, 1 usage error, 2 runtime error. Log verbosity is
controlled by the APA_LOG_LEVEL environment variable (default INFO).
"""

from __future__ import annotations

import dataclasses
import logging
import os
import sys

import click
import numpy as np

from . import environment as env_mod
from . import evaluation, neural, online, pipeline, profiles, urn
from .config import derive_seed, load_config, save_config, default_config


def _setup_logging() -> None:
    level = os.environ.get("APA_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format="%(levelname)s %(name)s: %(message)s")


@click.group()
def cli() -> None:
    """Preference aggregation experiments and the live annotation service."""
    _setup_logging()


@cli.command("init-config")
@click.option("--out", default="config.json", show_default=True)
@click.option("--seed", default=0, show_default=True)
def init_config(out: str, seed: int) -> None:
    """Write a default experiment config."""
    save_config(default_config(master_seed=seed), out)
    click.echo(f"wrote {out}")


@cli.command("gen-env")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", default=None, help="Environment JSON path (default: <output_dir>/environment.json)")
def gen_env(config_path: str, out: str | None) -> None:
    """Generate the planar environment and persist it as JSON."""
    cfg = load_config(config_path)
    from .config import stage_rng

    seed = derive_seed(cfg.master_seed, "environment")
    env = env_mod.gen_environment(cfg.environment, stage_rng(cfg.master_seed, "environment"), seed)
    out = out or os.path.join(cfg.output_dir, "environment.json")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    env_mod.save_environment(env, out)
    click.echo(f"wrote {out}")


@cli.command("run-urn")
@click.option("--profile", type=click.Choice(["rps", "unanimous"]), default="rps", show_default=True)
@click.option("--env", "env_path", type=click.Path(exists=True), default=None, help="Use an atom of a persisted environment instead of a built-in profile")
@click.option("--atom", type=int, default=0, show_default=True)
@click.option("--n-balls", default=100, show_default=True)
@click.option("--mutation-rate", default=0.01, show_default=True)
@click.option("--steps", default=200_000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default="urn_trajectory.csv", show_default=True)
def run_urn(profile, env_path, atom, n_balls, mutation_rate, steps, seed, out) -> None:
    """Run the tabular urn process and write the step-indexed counts CSV."""
    rng = np.random.default_rng(seed)
    if env_path:
        env = env_mod.load_environment(env_path)
        users = env.atom_train_users(atom)
        if not users:
            raise click.UsageError(f"atom {atom} has no training users")
        oracle = env.oracle
        n_alt = env.n_alternatives

        def user_sampler(r):
            return users[int(r.integers(0, len(users)))]

    elif profile == "rps":
        voters, oracle = profiles.cyclic_three_profile()
        user_sampler = profiles.uniform_user_sampler(voters)
        n_alt = 3
    else:
        voters, oracle = profiles.unanimous_profile(3)
        user_sampler = profiles.uniform_user_sampler(voters)
        n_alt = 3
    cfg = urn.UrnConfig(n_alternatives=n_alt, n_balls=n_balls, mutation_rate=mutation_rate)
    traj = urn.urn_run(cfg, steps, oracle, user_sampler, rng)
    urn.trajectory_to_csv(traj, out)
    avg = urn.time_average(traj, burn_in=min(steps - 1, steps // 10))
    click.echo(f"wrote {out}; time average {np.array2string(avg, precision=4)}")


@cli.command("run-apa")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--env", "env_path", required=True, type=click.Path(exists=True))
def run_apa(config_path: str, env_path: str) -> None:
    """Train the neural urn online; writes the model and transcript."""
    cfg = load_config(config_path)
    env = env_mod.load_environment(env_path)
    apa_cfg = cfg.apa_config(env)
    params, transcript = online.apa_train(apa_cfg, env)
    os.makedirs(cfg.output_dir, exist_ok=True)
    model_path = os.path.join(cfg.output_dir, "model_urn.txt")
    transcript_path = os.path.join(cfg.output_dir, "transcript.csv")
    neural.save_params(params, model_path)
    online.transcript_to_csv(transcript, transcript_path, atom_of=env.atom_of_embedding)
    click.echo(f"wrote {model_path} and {transcript_path}")


@cli.command("distill")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--env", "env_path", required=True, type=click.Path(exists=True))
@click.option("--transcript", "transcript_path", required=True, type=click.Path(exists=True))
def distill_cmd(config_path: str, env_path: str, transcript_path: str) -> None:
    """Distill a persisted transcript into a softmax policy network."""
    cfg = load_config(config_path)
    env = env_mod.load_environment(env_path)
    transcript = online.transcript_from_csv(transcript_path, env.atom_embedding)
    distill_cfg = dataclasses.replace(cfg.distill, seed=derive_seed(cfg.master_seed, "distill"))
    params = online.distill(transcript, distill_cfg)
    out = os.path.join(cfg.output_dir, "model_distilled.txt")
    os.makedirs(cfg.output_dir, exist_ok=True)
    neural.save_params(params, out)
    click.echo(f"wrote {out}")


@cli.command("eval")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--env", "env_path", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
def eval_cmd(config_path: str, env_path: str, model_path: str) -> None:
    """Evaluate a persisted policy model against the exact baselines."""
    cfg = load_config(config_path)
    env = env_mod.load_environment(env_path)
    params = neural.load_params(model_path)
    opponents = {
        "adaptive_maximal_lottery": evaluation.adaptive_maximal_lottery_policy(env),
        "adaptive_borda": evaluation.adaptive_borda_policy(env),
        "global_borda": evaluation.global_borda_policy(env),
    }
    rows = evaluation.table_report(
        env,
        online.policy_of(params),
        opponents,
        cfg.evaluation.n_rounds,
        derive_seed(cfg.master_seed, "eval"),
    )
    os.makedirs(cfg.output_dir, exist_ok=True)
    evaluation.report_to_csv(rows, os.path.join(cfg.output_dir, "report.csv"))
    text = evaluation.format_report(rows)
    with open(os.path.join(cfg.output_dir, "report.txt"), "w") as fh:
        fh.write(text + "\n")
    click.echo(text)


@cli.command("report")
@click.option("--report", "report_path", required=True, type=click.Path(exists=True))
def report_cmd(report_path: str) -> None:
    """Pretty-print a persisted win-rate report CSV."""
    rows = evaluation.load_report_csv(report_path)
    click.echo(evaluation.format_report(rows))


@cli.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def run_cmd(config_path: str) -> None:
    """Run the full pipeline: gen-env, run-apa, distill, curve, eval."""
    cfg = load_config(config_path)
    outdir = pipeline.run_experiment(cfg)
    click.echo(f"artifacts in {outdir}")


@cli.command("serve")
@click.option("--env", "env_path", type=click.Path(exists=True), default=None)
@click.option("--n-alternatives", default=3, show_default=True)
@click.option("--embedding-dim", default=4, show_default=True)
@click.option("--learning-rate", default=0.05, show_default=True)
@click.option("--mutation-rate", default=0.0, show_default=True)
@click.option("--urn-scale", default=100.0, show_default=True)
@click.option("--transcript-dir", default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(env_path, n_alternatives, embedding_dim, learning_rate, mutation_rate, urn_scale, transcript_dir, host, port) -> None:
    """Start the live annotation HTTP service."""
    import uvicorn

    from .service import ServiceConfig, create_app

    app = create_app(
        ServiceConfig(
            environment_path=env_path,
            n_alternatives=n_alternatives,
            embedding_dim=embedding_dim,
            learning_rate=learning_rate,
            mutation_rate=mutation_rate,
            urn_scale=urn_scale,
            transcript_dir=transcript_dir,
        )
    )
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main() -> int:
    try:
        cli.main(standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime failures exit 2
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
