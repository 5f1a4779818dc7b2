"""Batch experiment runner.

    python -m seafield {train,evaluate,ablate,reconstruct,synthesize} [--config PATH]
        [--seed INT] [--out DIR] [--jobs INT]

Exit status is 0 on success, 1 on runtime failure and 2 on configuration errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, _int_list, _str_list
from .data import save_dataset, synthesize_seasonal
from .evaluation import (MetricsReport, ablation_run, ablation_table, evaluate,
                         reconstruction_experiment, write_rows)
from .models import build_model
from .training import CHECKPOINT_FORMAT, load_checkpoint, predict, save_checkpoint, train

log = logging.getLogger("seafield")


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def prepare_out(out: Path, config: ExperimentConfig, seed: int | None = None) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(config.dumps(), encoding="utf-8")
    (out / "FORMAT").write_text(CHECKPOINT_FORMAT + "\n", encoding="utf-8")
    seeds = [seed] if seed is not None else config.seeds
    (out / "seed").write_text(",".join(map(str, seeds)) + "\n", encoding="utf-8")
    return out


def cmd_train(config: ExperimentConfig, out: Path, seed: int) -> int:
    dataset, (tr, va, te), stats = config.prepare()
    kind = config["model.kind"]
    hparams = config.model_hparams(dataset, tr.in_channels)
    model = build_model(kind, dataset.num_nodes, seed=seed, **hparams)
    result = train(model, tr, va, stats, config.train_config(seed))

    prepare_out(out, config, seed)
    spec = {"kind": kind, "num_nodes": dataset.num_nodes, "seed": seed, **hparams}
    save_checkpoint(out / "checkpoint.pt", model, spec, stats, result.iterations,
                    config.values, result.optimizer_state)
    write_rows(out / "history.csv", result.history, ["epoch", "train_loss", "val_mae", "horizon"])
    metrics = evaluate(model, te, stats, _int_list(config["eval.horizons"]),
                       _str_list(config["eval.metrics"]))
    MetricsReport.from_runs({kind: [metrics]}).to_csv(out / "metrics.csv")

    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot([h["epoch"] for h in result.history], [h["val_mae"] for h in result.history],
            marker="o", label=kind)
    ax.set_xlabel("epoch")
    ax.set_ylabel("validation MAE")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "val_curve.png", dpi=100)
    plt.close(fig)
    log.info("best epoch %d, validation MAE %.4f", result.best_epoch, result.best_val_mae)
    return 0


def cmd_evaluate(config: ExperimentConfig, out: Path, checkpoints) -> int:
    if not checkpoints:
        raise ConfigError("evaluate needs at least one --checkpoint")
    dataset, (_, _, te), _ = config.prepare()
    runs = {}
    models = []
    for path in checkpoints:
        model, stats, payload = load_checkpoint(path)
        name = payload["model_spec"]["kind"]
        runs.setdefault(name, []).append(
            evaluate(model, te, stats, _int_list(config["eval.horizons"]),
                     _str_list(config["eval.metrics"])))
        models.append((name, model, stats))
    prepare_out(out, config)
    MetricsReport.from_runs(runs).to_csv(out / "metrics.csv")

    plt = _plt()
    horizon = te.horizon
    for node in _int_list(config["eval.plot_nodes"]):
        if not 0 <= node < dataset.num_nodes:
            raise ConfigError(f"eval.plot_nodes: node {node} out of range")
        fig, ax = plt.subplots(figsize=(8, 3.5))
        truth_drawn = False
        for name, model, stats in models:
            pred, target, mask = predict(model, te, stats)
            if not truth_drawn:
                y = np.where(mask[:, -1, node], target[:, -1, node], np.nan)
                ax.plot(y, color="k", lw=1, label="ground truth")
                truth_drawn = True
            ax.plot(pred[:, -1, node], lw=1, label=name)
        ax.set_title(f"node {node}, {horizon}-step horizon")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / f"prediction_node{node}.png", dpi=100)
        plt.close(fig)
    return 0


def _ablation_job(args):
    config_text, variant, seed = args
    config = ExperimentConfig.parse(config_text)
    dataset, (tr, va, _), stats = config.prepare()
    base = config.model_hparams(dataset, tr.in_channels)
    return ablation_run(tr, va, stats, base, variant, seed, config.train_config(seed),
                        config["ablate.kind"], _str_list(config["eval.metrics"]))


def cmd_ablate(config: ExperimentConfig, out: Path, jobs: int = 1) -> int:
    variants = _str_list(config["ablate.variants"])
    jobs_args = [(config.dumps(), v, s) for v in variants for s in config.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            scores = list(pool.map(_ablation_job, jobs_args))
    else:
        scores = [_ablation_job(a) for a in jobs_args]
    prepare_out(out, config)
    raw = {}
    for (_, variant, seed), score in zip(jobs_args, scores):
        raw.setdefault(variant, []).append(score)
        job_dir = out / "jobs" / f"{variant}_seed{seed}"
        job_dir.mkdir(parents=True, exist_ok=True)
        write_rows(job_dir / "scores.csv", [{"metric": k, "value": v} for k, v in score.items()],
                   ["metric", "value"])
    rows = ablation_table(raw, _str_list(config["eval.metrics"]))
    write_rows(out / "ablation.csv", rows, ["variant", "metric", "mean", "std", "n"])
    return 0


def cmd_reconstruct(config: ExperimentConfig, out: Path) -> int:
    dataset, _, _ = config.prepare()
    n_train = int(np.floor(config["data.train_fraction"] * dataset.num_steps + 1e-9))
    train_part = dataset.slice(0, n_train)
    rows, runs = reconstruction_experiment(
        train_part, _int_list(config["reconstruct.nodes"]),
        _str_list(config["reconstruct.kinds"]), config.seeds,
        config["reconstruct.iterations"], config["reconstruct.learning_rate"],
        config["cnf.sigma"])
    prepare_out(out, config)
    write_rows(out / "reconstruction.csv", rows, ["node", "kind", "mean", "std", "n"])

    plt = _plt()
    first_seed = config.seeds[0]
    for node in _int_list(config["reconstruct.nodes"]):
        chosen = [r for r in runs if r.node == node and r.seed == first_seed]
        fig, axes = plt.subplots(len(chosen), 1, figsize=(8, 2.2 * len(chosen)), sharex=True,
                                 squeeze=False)
        for ax, run in zip(axes[:, 0], chosen):
            span = slice(0, min(len(run.target), 7 * 1440 // dataset.granularity))
            ax.plot(run.target[span], color="k", lw=0.8, label="ground truth")
            ax.plot(run.fitted[span], lw=0.8, label=run.kind)
            ax.set_ylabel(f"MAE {run.final_mae:.3f}")
            ax.legend(loc="upper right")
        fig.tight_layout()
        fig.savefig(out / f"reconstruction_node{node}.png", dpi=100)
        plt.close(fig)
    return 0


def cmd_synthesize(config: ExperimentConfig, out: Path, seed: int | None = None) -> int:
    ds = synthesize_seasonal(config["data.synthetic.nodes"], config["data.synthetic.days"],
                             config["data.synthetic.granularity"],
                             config["data.synthetic.noise_std"],
                             config["data.synthetic.seed"] if seed is None else seed)
    save_dataset(ds, out)
    (out / "FORMAT").write_text(CHECKPOINT_FORMAT + "\n", encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seafield", description=__doc__.splitlines()[0])
    parser.add_argument("command",
                        choices=["train", "evaluate", "ablate", "reconstruct", "synthesize"])
    parser.add_argument("--config", type=Path, help="key=value configuration file")
    parser.add_argument("--seed", type=int, help="overrides the config seed list")
    parser.add_argument("--out", type=Path, help="output directory (default output.dir)")
    parser.add_argument("--jobs", type=int, default=1, help="parallel ablation jobs")
    parser.add_argument("--checkpoint", type=Path, action="append", default=[],
                        help="checkpoint to evaluate (repeatable)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        config = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
        if args.seed is not None:
            config = config.with_overrides(seeds=str(args.seed))
        out = args.out or Path(config["output.dir"])
        if args.command == "train":
            return cmd_train(config, out, config.seeds[0])
        if args.command == "evaluate":
            return cmd_evaluate(config, out, args.checkpoint)
        if args.command == "ablate":
            return cmd_ablate(config, out, args.jobs)
        if args.command == "reconstruct":
            return cmd_reconstruct(config, out)
        return cmd_synthesize(config, out, args.seed)
    except ConfigError as exc:
        print(f"seafield: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - one-line diagnostic, nonzero exit
        print(f"seafield: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
