"""Command-line front end.

Exit codes: 0 success, 1 validation error (bad arguments or config, reported
before any computation), 2 runtime abort (e.g. a detector starving a class).
Diagnostics go to stderr; machine-readable output goes to files under --out
or to stdout.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import harness
from .dataio import (
    dataset_from_csv,
    dataset_to_csv,
    fmt_float,
    knowledge_from_json,
    knowledge_to_json,
    scores_to_csv,
    stable_json,
)
from .detectors import DetectorArtifacts, DistState, run_detector
from .harness import ClassCollapseError, ConfigError
from .metrics import mean_std, selection_metrics
from .model import augmented_confidences, per_sample_gradients
from .synth import apply_noise, generate_clusters
from .transition import estimate_dual_t, knowledge_from_transition, transition_to_json


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{message}\n{self.format_usage()}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="labelsift", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=False):
        p.add_argument("--config", required=True, help="experiment config JSON")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the seed list with one seed")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="dotted config override, e.g. detector.fl_ratio=0.9")
        if data:
            p.add_argument("--data", required=True, help="directory with dataset.csv (and knowledge.json)")

    common(sub.add_parser("synth", help="write a noisy dataset and its knowledge"))
    run_p = sub.add_parser("run", help="full experiment: synth, warm-up, detect/train loop, reports")
    common(run_p)
    run_p.add_argument("--dump-selection", action="store_true", help="write per-epoch selection CSVs")
    run_p.add_argument("--jobs", type=int, default=1, help="accepted for symmetry; runs are sequential")
    common(sub.add_parser("select", help="run the configured detector once on an existing dataset"), data=True)
    common(sub.add_parser("estimate-t", help="estimate the noise transition matrix from a dataset"), data=True)
    sweep_p = sub.add_parser("sweep", help="knowledge-quality sweep over (missing, noisy) fractions")
    common(sweep_p)
    sweep_p.add_argument("--grid", action="append", default=[], metavar="AXIS=V1,V2,...",
                         help="axis values, e.g. mk=0,0.5,1 or nk=0,0.25")
    sweep_p.add_argument("--jobs", type=int, default=1, help="worker threads for sweep cells")
    report_p = sub.add_parser("report", help="render a human-readable summary of a run directory")
    report_p.add_argument("run_dir", help="directory written by run or sweep")
    return parser


def _load_config(args) -> harness.ExperimentConfig:
    path = Path(args.config)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    doc = harness.apply_overrides(doc, list(args.overrides or []))
    cfg = harness.config_from_dict(doc)
    if args.seed is not None:
        cfg = replace(cfg, seeds=(args.seed,))
    if getattr(args, "dump_selection", False):
        cfg = replace(cfg, dump_selection=True)
    return cfg


def _cmd_synth(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(stable_json(harness.config_to_dict(cfg)))
    for seed in cfg.seeds:
        spec = replace(cfg.cluster, seed=harness.derive_seed(seed, "data"))
        clean = generate_clusters(spec)
        noisy, knowledge = apply_noise(clean, cfg.noise, harness.derive_seed(seed, "noise"))
        seed_dir = out / f"seed_{seed}"
        seed_dir.mkdir(parents=True, exist_ok=True)
        (seed_dir / "dataset.csv").write_text(dataset_to_csv(noisy))
        (seed_dir / "knowledge.json").write_text(knowledge_to_json(knowledge) + "\n")
    return 0


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    if cfg.paired_baseline:
        harness.run_paired(cfg, args.out)
    else:
        harness.run_experiment(cfg, args.out)
    return 0


def _load_data_dir(args):
    data = Path(args.data)
    ds_path = data / "dataset.csv"
    if not ds_path.is_file():
        raise ConfigError(f"no dataset.csv under {data}")
    return data, dataset_from_csv(ds_path.read_text())


def _cmd_select(args) -> int:
    cfg = _load_config(args)
    data, ds = _load_data_dir(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg.seeds[0]
    knowledge = None
    if cfg.detector.knowledge_enabled and (data / "knowledge.json").is_file():
        knowledge = knowledge_from_json((data / "knowledge.json").read_text())
    model, bank = harness.warm_model_and_bank(ds, cfg.training, seed)
    view = ds.detector_view()
    artifacts = DetectorArtifacts(
        gradients_fn=lambda idx, c: per_sample_gradients(model, view.features[idx], c),
        bank=bank,
        latest_probs=bank.latest_probs,
        dist_state=DistState.initial(len(view)),
        features=view.features,
    )
    if cfg.detector.method == "disc":
        artifacts.conf_weak, artifacts.conf_strong = augmented_confidences(
            model, view.features, cfg.training.augmentation,
            harness.derive_seed(seed, "augment", cfg.training.warmup_epochs),
        )
    scores = run_detector(cfg.detector, view, artifacts, knowledge)
    (out / "selection.csv").write_text(scores_to_csv(scores))
    report = selection_metrics(scores, ds)
    (out / "metrics.json").write_text(stable_json({"seed": seed, **report.to_dict()}))
    return 0


def _cmd_estimate_t(args) -> int:
    cfg = _load_config(args)
    _, ds = _load_data_dir(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg.seeds[0]
    model, bank = harness.warm_model_and_bank(ds, cfg.training, seed)
    estimate = estimate_dual_t(ds.detector_view(), bank.latest_probs)
    knowledge = knowledge_from_transition(estimate.t, cfg.training.dualt_threshold)
    (out / "transition.json").write_text(transition_to_json(estimate.t) + "\n")
    (out / "knowledge.json").write_text(knowledge_to_json(knowledge) + "\n")
    for flag in estimate.flags:
        print(flag, file=sys.stderr)
    return 0


def _parse_grid(tokens: list[str]) -> list[tuple[float, float]]:
    axes = {"mk": [0.0], "nk": [0.0]}
    for token in tokens:
        if "=" not in token:
            raise ConfigError(f"grid token {token!r} must look like mk=0,0.5,1")
        axis, raw = token.split("=", 1)
        if axis not in axes:
            raise ConfigError(f"unknown grid axis {axis!r}; use mk or nk")
        try:
            axes[axis] = [float(v) for v in raw.split(",") if v != ""]
        except ValueError as exc:
            raise ConfigError(f"grid values in {token!r} must be numbers") from exc
    return [(mk, nk) for mk in axes["mk"] for nk in axes["nk"]]


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    if not cfg.detector.knowledge_enabled:
        cfg = replace(cfg, detector=replace(cfg.detector, knowledge_enabled=True))
    if cfg.knowledge_mode.mode == "none":
        cfg = replace(cfg, knowledge_mode=harness.KnowledgeMode("ground_truth"))
    grid = _parse_grid(list(args.grid))
    harness.sweep_knowledge_quality(cfg, grid, args.out, jobs=max(1, args.jobs))
    return 0


def _seed_metrics(run_dir: Path) -> list[dict]:
    docs = []
    for path in sorted(run_dir.glob("seed_*/metrics.json")):
        docs.append(json.loads(path.read_text()))
    return docs


def _arm_summary(arm_dir: Path) -> dict:
    summary = json.loads((arm_dir / "summary.json").read_text())
    finals = [d["per_epoch"][-1] for d in _seed_metrics(arm_dir) if d.get("per_epoch")]
    out = {
        "acc_mean": summary["accuracy_mean"],
        "acc_std": summary["accuracy_std"],
    }
    if finals:
        out["precision"], _ = mean_std([f["precision"] for f in finals])
        out["recall"], _ = mean_std([f["recall"] for f in finals])
    return out


def _cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    if not run_dir.is_dir():
        raise ConfigError(f"run directory not found: {run_dir}")

    if (run_dir / "absorption.json").is_file():
        absorption = json.loads((run_dir / "absorption.json").read_text())
        base = _arm_summary(run_dir / "base")
        plus = _arm_summary(run_dir / "plus_k")
        print(f"{'method':<10}{'base acc':>12}{'+k acc':>12}{'absorption':>12}"
              f"{'precision':>12}{'recall':>10}")
        print(
            f"{absorption['detector']:<10}"
            f"{base['acc_mean']:>12.4f}{plus['acc_mean']:>12.4f}"
            f"{absorption['absorption_mean']:>12.4f}"
            f"{plus.get('precision', float('nan')):>12.4f}{plus.get('recall', float('nan')):>10.4f}"
        )
        return 0

    if (run_dir / "sweep.json").is_file():
        table = json.loads((run_dir / "sweep.json").read_text())
        print(f"{'cell':<16}{'missing':>9}{'noisy':>8}{'accuracy':>12}{'std':>10}")
        for row in table:
            mf = "-" if row["missing_frac"] is None else f"{row['missing_frac']:g}"
            nf = "-" if row["noisy_frac"] is None else f"{row['noisy_frac']:g}"
            print(f"{row['cell']:<16}{mf:>9}{nf:>8}{row['accuracy_mean']:>12.4f}"
                  f"{row['accuracy_std']:>10.4f}")
        return 0

    if (run_dir / "summary.json").is_file():
        cfg_doc = json.loads((run_dir / "config.json").read_text())
        arm = _arm_summary(run_dir)
        print(f"{'method':<10}{'accuracy':>12}{'std':>10}{'precision':>12}{'recall':>10}")
        print(
            f"{cfg_doc['detector']['method']:<10}"
            f"{arm['acc_mean']:>12.4f}{arm['acc_std']:>10.4f}"
            f"{arm.get('precision', float('nan')):>12.4f}{arm.get('recall', float('nan')):>10.4f}"
        )
        return 0

    missing = [name for name in ("absorption.json", "sweep.json", "summary.json", "metrics.json")
               if not (run_dir / name).is_file()]
    raise ConfigError(f"run directory {run_dir} has no renderable artifacts; missing: {missing}")


_COMMANDS = {
    "synth": _cmd_synth,
    "run": _cmd_run,
    "select": _cmd_select,
    "estimate-t": _cmd_estimate_t,
    "sweep": _cmd_sweep,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ClassCollapseError as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure after validation
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def console_main() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    console_main()
