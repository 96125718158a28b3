"""End-to-end experiment orchestration.

A run is: synthesize clustered data, inject noise, resolve knowledge, warm up
the classifier unfiltered, then per epoch refresh artifacts -> detect -> train
on the selected samples, and finally evaluate on a clean held-out split. Every
random draw comes from a named sub-stream of the single root seed (data,
noise, train shuffles, augmentation, perturbation), so toggling knowledge
changes nothing upstream of detection and identical configs produce
byte-identical output files.
"""
from __future__ import annotations

import copy
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import LabeledDataset, NoiseKnowledge
from .dataio import (
    dataset_to_csv,
    fmt_float,
    knowledge_to_json,
    scores_to_csv,
    stable_json,
)
from .detectors import DetectorArtifacts, DetectorConfig, DistState, run_detector
from .metrics import SelectionReport, accuracy, confusion_matrix, mean_std, selection_metrics
from .model import (
    AugmentationPolicy,
    PredictionBank,
    augmented_confidences,
    init_model,
    per_sample_gradients,
    predict_proba,
    record_epoch,
    save_model,
    train_epoch,
)
from .synth import (
    AsymmetricNoisePlan,
    ClusterSpec,
    DominantNoisePlan,
    NoisePlan,
    apply_noise,
    generate_clusters,
    perturb_knowledge,
)
from .transition import estimate_dual_t, knowledge_from_transition, transition_to_json

CONFIG_VERSION = 1
_COLLAPSE_LIMIT = 3

_STREAM_IDS = {"data": 1, "noise": 2, "train": 3, "augment": 4, "perturb": 5}


class ConfigError(ValueError):
    """Invalid or unknown configuration content; reported before any work."""


class ClassCollapseError(RuntimeError):
    """A detector starved some class of samples for several epochs running."""

    def __init__(self, message: str, run_dir: Path | None = None):
        super().__init__(message)
        self.run_dir = run_dir


def derive_seed(root_seed: int, stream: str, *extra: int) -> int:
    """Deterministic child seed for a named stream of the root seed."""
    ss = np.random.SeedSequence([int(root_seed), _STREAM_IDS[stream], *map(int, extra)])
    return int(ss.generate_state(1)[0])


@dataclass(frozen=True)
class KnowledgeMode:
    mode: str  # none | ground_truth | perturbed | from_dual_t
    missing_frac: float = 0.0
    noisy_frac: float = 0.0

    def __post_init__(self):
        if self.mode not in ("none", "ground_truth", "perturbed", "from_dual_t"):
            raise ConfigError(f"unknown knowledge mode {self.mode!r}")


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 15
    warmup_epochs: int = 5
    learning_rate: float = 0.2
    batch_size: int = 128
    bank_window: int = 3
    soft_weighting: bool = False
    test_samples_per_class: int = 200
    augmentation: AugmentationPolicy = field(default_factory=AugmentationPolicy)
    dualt_threshold: float = 0.05

    def __post_init__(self):
        if not self.warmup_epochs < self.epochs:
            raise ConfigError("warmup_epochs must be smaller than epochs")
        if self.warmup_epochs < 0 or self.batch_size < 1:
            raise ConfigError("invalid training configuration")


@dataclass(frozen=True)
class ExperimentConfig:
    cluster: ClusterSpec
    noise: NoisePlan
    detector: DetectorConfig
    knowledge_mode: KnowledgeMode = KnowledgeMode("none")
    training: TrainingConfig = field(default_factory=TrainingConfig)
    seeds: tuple[int, ...] = (0,)
    paired_baseline: bool = False
    dump_selection: bool = False

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.cluster.num_classes != self.noise.num_classes:
            raise ConfigError("cluster and noise plan disagree on the class count")


# --------------------------------------------------------------------------
# config (de)serialization: strict keys, stable echo


def _check_keys(doc: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {unknown}")


def config_to_dict(cfg: ExperimentConfig) -> dict:
    noise: dict = {"kind": cfg.noise.kind, "noise_ratio": cfg.noise.noise_ratio,
                   "num_classes": cfg.noise.num_classes}
    if isinstance(cfg.noise, DominantNoisePlan):
        noise["dominant"] = list(cfg.noise.dominant)
        noise["recessive"] = list(cfg.noise.recessive)
    else:
        noise["pairs"] = [list(p) for p in cfg.noise.pairs]
    det = cfg.detector
    aug = cfg.training.augmentation
    return {
        "version": CONFIG_VERSION,
        "cluster": {
            "num_classes": cfg.cluster.num_classes,
            "dim": cfg.cluster.dim,
            "samples_per_class": cfg.cluster.samples_per_class,
            "separation": cfg.cluster.separation,
            "confusable_pairs": [list(p) for p in cfg.cluster.confusable_pairs],
        },
        "noise": noise,
        "detector": {
            "method": det.method,
            "fl_ratio": det.fl_ratio,
            "gmm_iters": det.gmm_iters,
            "gmm_tol": det.gmm_tol,
            "jsd_cutoff": (
                {"mode": "fixed", "value": det.jsd_cutoff_value}
                if det.jsd_cutoff_mode == "fixed"
                else {"mode": "class_mean"}
            ),
            "dist_lambda": det.dist_lambda,
            "knowledge_enabled": det.knowledge_enabled,
            "crust_gamma": det.crust_gamma,
        },
        "knowledge_mode": (
            {"mode": cfg.knowledge_mode.mode}
            if cfg.knowledge_mode.mode != "perturbed"
            else {
                "mode": "perturbed",
                "missing_frac": cfg.knowledge_mode.missing_frac,
                "noisy_frac": cfg.knowledge_mode.noisy_frac,
            }
        ),
        "training": {
            "epochs": cfg.training.epochs,
            "warmup_epochs": cfg.training.warmup_epochs,
            "learning_rate": cfg.training.learning_rate,
            "batch_size": cfg.training.batch_size,
            "bank_window": cfg.training.bank_window,
            "soft_weighting": cfg.training.soft_weighting,
            "test_samples_per_class": cfg.training.test_samples_per_class,
            "augmentation": {
                "weak_sigma": aug.weak_sigma,
                "strong_sigma": aug.strong_sigma,
                "strong_dropout": aug.strong_dropout,
            },
            "dualt_threshold": cfg.training.dualt_threshold,
        },
        "seeds": list(cfg.seeds),
        "paired_baseline": cfg.paired_baseline,
        "dump_selection": cfg.dump_selection,
    }


def config_from_dict(doc: dict) -> ExperimentConfig:
    _check_keys(doc, {"version", "cluster", "noise", "detector", "knowledge_mode",
                      "training", "seeds", "paired_baseline", "dump_selection"}, "config")
    if doc.get("version") != CONFIG_VERSION:
        raise ConfigError(f"config version must be {CONFIG_VERSION}")
    for section in ("cluster", "noise", "detector"):
        if section not in doc:
            raise ConfigError(f"config is missing the {section!r} section")

    c = doc["cluster"]
    _check_keys(c, {"num_classes", "dim", "samples_per_class", "separation",
                    "confusable_pairs"}, "cluster")
    try:
        cluster = ClusterSpec(
            num_classes=int(c["num_classes"]),
            dim=int(c["dim"]),
            samples_per_class=int(c["samples_per_class"]),
            separation=float(c["separation"]),
            confusable_pairs=tuple(tuple(p) for p in c.get("confusable_pairs", [])),
        )

        nz = doc["noise"]
        kind = nz.get("kind")
        if kind == "dominant":
            _check_keys(nz, {"kind", "noise_ratio", "num_classes", "dominant", "recessive"}, "noise")
            noise: NoisePlan = DominantNoisePlan(
                noise_ratio=float(nz["noise_ratio"]),
                num_classes=int(nz["num_classes"]),
                dominant=tuple(nz.get("dominant", ())),
                recessive=tuple(nz.get("recessive", ())),
            )
        elif kind == "asymmetric":
            _check_keys(nz, {"kind", "noise_ratio", "num_classes", "pairs"}, "noise")
            noise = AsymmetricNoisePlan(
                noise_ratio=float(nz["noise_ratio"]),
                num_classes=int(nz["num_classes"]),
                pairs=tuple(tuple(p) for p in nz["pairs"]),
            )
        else:
            raise ConfigError(f"unknown noise kind {kind!r}")

        dt = doc["detector"]
        _check_keys(dt, {"method", "fl_ratio", "gmm_iters", "gmm_tol", "jsd_cutoff",
                         "dist_lambda", "knowledge_enabled", "crust_gamma"}, "detector")
        cutoff = dt.get("jsd_cutoff", {"mode": "class_mean"})
        _check_keys(cutoff, {"mode", "value"}, "detector.jsd_cutoff")
        detector = DetectorConfig(
            method=dt["method"],
            fl_ratio=float(dt.get("fl_ratio", 0.5)),
            gmm_iters=int(dt.get("gmm_iters", 100)),
            gmm_tol=float(dt.get("gmm_tol", 1e-6)),
            jsd_cutoff_mode=cutoff.get("mode", "class_mean"),
            jsd_cutoff_value=(None if cutoff.get("value") is None else float(cutoff["value"])),
            dist_lambda=float(dt.get("dist_lambda", 0.9)),
            knowledge_enabled=bool(dt.get("knowledge_enabled", False)),
            crust_gamma=(None if dt.get("crust_gamma") is None else int(dt["crust_gamma"])),
        )

        km = doc.get("knowledge_mode", {"mode": "none"})
        _check_keys(km, {"mode", "missing_frac", "noisy_frac"}, "knowledge_mode")
        knowledge_mode = KnowledgeMode(
            km.get("mode", "none"),
            float(km.get("missing_frac", 0.0)),
            float(km.get("noisy_frac", 0.0)),
        )

        tr = doc.get("training", {})
        _check_keys(tr, {"epochs", "warmup_epochs", "learning_rate", "batch_size",
                         "bank_window", "soft_weighting", "test_samples_per_class",
                         "augmentation", "dualt_threshold"}, "training")
        aug = tr.get("augmentation", {})
        _check_keys(aug, {"weak_sigma", "strong_sigma", "strong_dropout"}, "training.augmentation")
        defaults = TrainingConfig.__dataclass_fields__
        policy = AugmentationPolicy(
            weak_sigma=float(aug.get("weak_sigma", 0.1)),
            strong_sigma=float(aug.get("strong_sigma", 0.5)),
            strong_dropout=float(aug.get("strong_dropout", 0.25)),
        )
        training = TrainingConfig(
            epochs=int(tr.get("epochs", defaults["epochs"].default)),
            warmup_epochs=int(tr.get("warmup_epochs", defaults["warmup_epochs"].default)),
            learning_rate=float(tr.get("learning_rate", defaults["learning_rate"].default)),
            batch_size=int(tr.get("batch_size", defaults["batch_size"].default)),
            bank_window=int(tr.get("bank_window", defaults["bank_window"].default)),
            soft_weighting=bool(tr.get("soft_weighting", False)),
            test_samples_per_class=int(tr.get("test_samples_per_class", 200)),
            augmentation=policy,
            dualt_threshold=float(tr.get("dualt_threshold", 0.05)),
        )

        return ExperimentConfig(
            cluster=cluster,
            noise=noise,
            detector=detector,
            knowledge_mode=knowledge_mode,
            training=training,
            seeds=tuple(int(s) for s in doc.get("seeds", [0])),
            paired_baseline=bool(doc.get("paired_baseline", False)),
            dump_selection=bool(doc.get("dump_selection", False)),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply dotted key=value pairs onto a parsed config document.

    Values parse as JSON when possible (so lists and numbers work), falling
    back to the raw string. The strict section parsers reject typos afterward.
    """
    doc = copy.deepcopy(doc)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                raise ConfigError(f"override path {key!r} does not name a config section")
            node = node[part]
        node[parts[-1]] = value
    return doc


# --------------------------------------------------------------------------
# single-seed pipeline


@dataclass
class SeedResult:
    seed: int
    run_dir: Path
    final_accuracy: float
    per_epoch: list[tuple[int, SelectionReport]]
    flags: list[str]

    @property
    def final_selection(self) -> SelectionReport:
        return self.per_epoch[-1][1]


@dataclass
class ExperimentResult:
    out_dir: Path
    seeds: list[SeedResult]

    def accuracies(self) -> list[float]:
        return [s.final_accuracy for s in self.seeds]


def _resolve_knowledge(cfg: ExperimentConfig, gt: NoiseKnowledge, seed: int) -> NoiseKnowledge | None:
    mode = cfg.knowledge_mode
    if mode.mode == "none":
        return NoiseKnowledge.empty(cfg.cluster.num_classes)
    if mode.mode == "ground_truth":
        return gt
    if mode.mode == "perturbed":
        return perturb_knowledge(
            gt, mode.missing_frac, mode.noisy_frac, derive_seed(seed, "perturb")
        )
    return None  # from_dual_t: resolved after warm-up


def run_single_seed(cfg: ExperimentConfig, seed: int, run_dir: Path) -> SeedResult:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    log: list[str] = []
    tr = cfg.training

    spec = replace(cfg.cluster, seed=derive_seed(seed, "data"))
    clean_ds = generate_clusters(spec)
    test_ds = generate_clusters(spec, split="test", samples_per_class=tr.test_samples_per_class)
    noisy_ds, gt_knowledge = apply_noise(clean_ds, cfg.noise, derive_seed(seed, "noise"))
    (run_dir / "dataset.csv").write_text(dataset_to_csv(noisy_ds))
    log.append(f"dataset: n={len(noisy_ds)} k={noisy_ds.num_classes} d={noisy_ds.dim}")

    knowledge = _resolve_knowledge(cfg, gt_knowledge, seed)
    view = noisy_ds.detector_view()
    n = len(view)
    model = init_model(view.num_classes, noisy_ds.dim, tr.learning_rate)
    bank = PredictionBank(tr.bank_window)
    dist_state = DistState.initial(n)
    warmup_losses = []
    ones = np.ones(n)
    for epoch in range(tr.warmup_epochs):
        loss = train_epoch(model, view.features, view.noisy_labels, ones,
                           derive_seed(seed, "train", epoch), tr.batch_size)
        record_epoch(bank, model, view.features)
        warmup_losses.append(loss)
        log.append(f"warmup epoch {epoch}: loss={fmt_float(loss)}")

    run_flags: list[str] = []
    if cfg.knowledge_mode.mode == "from_dual_t":
        estimate = estimate_dual_t(view, bank.latest_probs)
        knowledge = knowledge_from_transition(estimate.t, tr.dualt_threshold)
        (run_dir / "transition.json").write_text(transition_to_json(estimate.t) + "\n")
        run_flags.extend(estimate.flags)
        log.append(f"dual-t knowledge: {len(knowledge.sources)} classes with sources")
    (run_dir / "knowledge.json").write_text(knowledge_to_json(knowledge) + "\n")

    def gradients_fn(indices, target_class):
        return per_sample_gradients(model, view.features[indices], target_class)

    per_epoch: list[tuple[int, SelectionReport]] = []
    epoch_rows: list[dict] = []
    class_sizes = np.bincount(view.noisy_labels, minlength=view.num_classes)
    zero_streak = np.zeros(view.num_classes, dtype=int)
    for epoch in range(tr.warmup_epochs, tr.epochs):
        artifacts = DetectorArtifacts(
            gradients_fn=gradients_fn,
            bank=bank,
            latest_probs=bank.latest_probs,
            dist_state=dist_state,
            features=view.features,
        )
        if cfg.detector.method == "disc":
            artifacts.conf_weak, artifacts.conf_strong = augmented_confidences(
                model, view.features, tr.augmentation, derive_seed(seed, "augment", epoch)
            )
        scores = run_detector(cfg.detector, view, artifacts, knowledge)
        dist_state = artifacts.dist_state
        report = selection_metrics(scores, noisy_ds)
        per_epoch.append((epoch, report))
        if cfg.dump_selection:
            (run_dir / f"selection_{epoch:03d}.csv").write_text(scores_to_csv(scores))

        selected_per_class = np.array(
            [report.per_class[c].selected_count for c in range(view.num_classes)]
        )
        zero_streak = np.where((selected_per_class == 0) & (class_sizes > 0), zero_streak + 1, 0)
        collapsed = np.flatnonzero(zero_streak >= _COLLAPSE_LIMIT)
        if len(collapsed):
            diag = (
                f"class collapse at epoch {epoch}: classes {collapsed.tolist()} selected "
                f"zero samples for {_COLLAPSE_LIMIT} consecutive epochs"
            )
            log.append(diag)
            (run_dir / "log.txt").write_text("\n".join(log) + "\n")
            (run_dir / "metrics.json").write_text(stable_json({
                "version": CONFIG_VERSION, "seed": seed, "aborted": True,
                "diagnostic": diag, "per_epoch": epoch_rows,
            }))
            raise ClassCollapseError(diag, run_dir)

        mask = scores.prob_clean if tr.soft_weighting else scores.selected.astype(np.float64)
        if mask.sum() > 0:
            loss = train_epoch(model, view.features, view.noisy_labels, mask,
                               derive_seed(seed, "train", epoch), tr.batch_size)
        else:
            loss = float("nan")
            log.append(f"epoch {epoch}: empty selection, training skipped")
        record_epoch(bank, model, view.features)
        epoch_rows.append({
            "epoch": epoch,
            "loss": None if np.isnan(loss) else loss,
            **report.to_dict(),
        })
        log.append(
            f"epoch {epoch}: selected={report.selected_count} precision={fmt_float(report.precision)} "
            f"recall={fmt_float(report.recall)}"
        )

    final_acc = accuracy(model, test_ds)
    confusion = confusion_matrix(model, test_ds)
    run_flags.extend(confusion.flags)
    log.append(f"final test accuracy: {fmt_float(final_acc)}")

    k = view.num_classes
    conf_lines = ["true\\pred," + ",".join(str(j) for j in range(k))]
    for i in range(k):
        conf_lines.append(str(i) + "," + ",".join(str(v) for v in confusion.counts[i]))
    (run_dir / "confusion.csv").write_text("\n".join(conf_lines) + "\n")
    save_model(model, run_dir / "model.bin")
    (run_dir / "metrics.json").write_text(stable_json({
        "version": CONFIG_VERSION,
        "seed": seed,
        "aborted": False,
        "final_accuracy": final_acc,
        "warmup_losses": warmup_losses,
        "per_epoch": epoch_rows,
        "confusion_percent": confusion.percent,
        "flags": run_flags,
    }))
    (run_dir / "log.txt").write_text("\n".join(log) + "\n")
    return SeedResult(seed, run_dir, final_acc, per_epoch, run_flags)


def run_experiment(cfg: ExperimentConfig, out_dir) -> ExperimentResult:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(stable_json(config_to_dict(cfg)))
    results = [run_single_seed(cfg, s, out_dir / f"seed_{s}") for s in cfg.seeds]
    accs = [r.final_accuracy for r in results]
    mean, std = mean_std(accs)
    (out_dir / "summary.json").write_text(stable_json({
        "accuracy_by_seed": {str(r.seed): r.final_accuracy for r in results},
        "accuracy_mean": mean,
        "accuracy_std": std,
    }))
    return ExperimentResult(out_dir, results)


@dataclass
class PairedResult:
    base: ExperimentResult
    plus_k: ExperimentResult
    absorption_by_seed: dict[int, float]


def run_paired(cfg: ExperimentConfig, out_dir) -> PairedResult:
    """Run the configured +k experiment next to its base twin and report the
    per-seed accuracy gap. Both arms share every upstream stream, so warm-up
    states are identical and the gap isolates the knowledge effect."""
    if cfg.knowledge_mode.mode == "none":
        raise ConfigError("paired run needs a knowledge mode other than 'none'")
    out_dir = Path(out_dir)
    base_cfg = replace(
        cfg,
        knowledge_mode=KnowledgeMode("none"),
        detector=replace(cfg.detector, knowledge_enabled=False),
        paired_baseline=False,
    )
    plus_cfg = replace(
        cfg,
        detector=replace(cfg.detector, knowledge_enabled=True),
        paired_baseline=False,
    )
    base = run_experiment(base_cfg, out_dir / "base")
    plus = run_experiment(plus_cfg, out_dir / "plus_k")
    gaps = {
        b.seed: p.final_accuracy - b.final_accuracy
        for b, p in zip(base.seeds, plus.seeds)
    }
    base_mean, base_std = mean_std(base.accuracies())
    plus_mean, plus_std = mean_std(plus.accuracies())
    (out_dir / "absorption.json").write_text(stable_json({
        "detector": cfg.detector.method,
        "noise": config_to_dict(cfg)["noise"],
        "seeds": list(cfg.seeds),
        "acc_base_mean": base_mean, "acc_base_std": base_std,
        "acc_plus_k_mean": plus_mean, "acc_plus_k_std": plus_std,
        "absorption_mean": plus_mean - base_mean,
        "absorption_by_seed": {str(s): g for s, g in gaps.items()},
    }))
    return PairedResult(base, plus, gaps)


def sweep_knowledge_quality(
    cfg: ExperimentConfig, grid: list[tuple[float, float]], out_dir, jobs: int = 1
) -> list[dict]:
    """One run per (missing, noisy) cell plus a no-knowledge anchor and a
    full-knowledge anchor. Returns (and writes) the accuracy table ordered by
    grid cell, independent of worker scheduling."""
    if not cfg.detector.knowledge_enabled:
        raise ConfigError("sweep needs a knowledge-enabled detector configuration")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    cells: list[tuple[str, ExperimentConfig, Path]] = [(
        "none",
        replace(cfg, knowledge_mode=KnowledgeMode("none"),
                detector=replace(cfg.detector, knowledge_enabled=False)),
        out_dir / "cell_none",
    )]
    seen = set()
    for mk, nk in [(0.0, 0.0)] + sorted(set((float(a), float(b)) for a, b in grid)):
        if (mk, nk) in seen:
            continue
        seen.add((mk, nk))
        cells.append((
            f"mk{mk:g}_nk{nk:g}",
            replace(cfg, knowledge_mode=KnowledgeMode("perturbed", mk, nk)),
            out_dir / f"cell_mk{mk:g}_nk{nk:g}",
        ))

    def job(entry):
        label, cell_cfg, cell_dir = entry
        return label, run_experiment(cell_cfg, cell_dir)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = dict(pool.map(job, cells))
    else:
        outcomes = dict(job(entry) for entry in cells)

    table = []
    for label, cell_cfg, _ in cells:
        result = outcomes[label]
        mean, std = mean_std(result.accuracies())
        table.append({
            "cell": label,
            "missing_frac": cell_cfg.knowledge_mode.missing_frac if label != "none" else None,
            "noisy_frac": cell_cfg.knowledge_mode.noisy_frac if label != "none" else None,
            "accuracy_by_seed": {str(r.seed): r.final_accuracy for r in result.seeds},
            "accuracy_mean": mean,
            "accuracy_std": std,
        })
    (out_dir / "sweep.json").write_text(stable_json(table))
    lines = ["cell,missing_frac,noisy_frac,accuracy_mean,accuracy_std"]
    for row in table:
        mf = "" if row["missing_frac"] is None else fmt_float(row["missing_frac"])
        nf = "" if row["noisy_frac"] is None else fmt_float(row["noisy_frac"])
        lines.append(
            f"{row['cell']},{mf},{nf},{fmt_float(row['accuracy_mean'])},{fmt_float(row['accuracy_std'])}"
        )
    (out_dir / "sweep.csv").write_text("\n".join(lines) + "\n")
    return table


def warm_model_and_bank(ds: LabeledDataset, training: TrainingConfig, seed: int):
    """Warm-up training used by the standalone select/estimate commands."""
    view = ds.detector_view()
    model = init_model(view.num_classes, ds.dim, training.learning_rate)
    bank = PredictionBank(training.bank_window)
    ones = np.ones(len(view))
    for epoch in range(training.warmup_epochs):
        train_epoch(model, view.features, view.noisy_labels, ones,
                    derive_seed(seed, "train", epoch), training.batch_size)
        record_epoch(bank, model, view.features)
    if bank.latest_probs is None:
        record_epoch(bank, model, view.features)
    return model, bank


def predict_latest(model, ds: LabeledDataset) -> np.ndarray:
    return predict_proba(model, ds.features)
