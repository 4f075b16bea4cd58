"""Experiment configuration, the training loop and run records.

A run writes, under its output directory::

    config.json     the resolved configuration
    run.csv         RunRecord rows ``iteration,split,metric,value``
    timing.csv      wall-clock seconds per evaluation (kept apart so that
                    run.csv is byte-reproducible)
    final.ckpt      parameters after the last iteration
    best.ckpt       parameters at the best validation score
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .datasets import generate, load_samples, perturb
from .datasets.samples import LabeledSample, spawn_seeds
from .estimator import ESTIMATORS, TASK_ESTIMATORS, SpectralFeaturizer, load_estimator
from .exceptions import ConfigError, ShapeMismatch
from .metrics import graph_class_metrics, node_binary_metrics, regression_metrics

SPLITS = ("train", "val", "test")
RUN_HEADER = ("iteration", "split", "metric", "value")
# metric used to pick the best checkpoint, and whether larger is better
SELECTION = {"node-binary": ("accuracy", True), "graph-class": ("accuracy", True),
             "graph-regress": ("mae", False)}
LABEL_KIND = {"node-binary": "node", "graph-class": "class", "graph-regress": "target"}
OPTIMIZER_KEYS = ("learning_rate", "beta1", "beta2", "epsilon")


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one training run.

    ``dataset`` is either ``{"path": "file.jsonl"}`` or a generator spec
    ``{"family", "n", "count", "seed", "holes", "params"}``; an optional
    ``"perturb": {"kind", "amount"}`` is applied to every sample and
    ``"edge_dropout"`` removes that fraction of spatial edges after the
    spectral basis has been computed.  ``split`` is ``"hash"`` (80/10/10 by
    a seed-stable hash of the sample index) or ``"none"`` (all samples
    train).  Relative paths resolve against ``base_dir``.
    """

    task: str = "node-binary"
    dataset: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    optimizer: dict = field(default_factory=dict)
    batch_size: int = 32
    iterations: int = 1000
    eval_every: int = 50
    eval_splits: List[str] = field(default_factory=lambda: ["val", "test"])
    split: str = "hash"
    seed: int = 0
    name: str = "run"
    out_dir: str = "run"
    base_dir: str = "."

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.task not in TASK_ESTIMATORS:
            raise ConfigError(f"task must be one of {sorted(TASK_ESTIMATORS)}")
        if self.batch_size < 1 or self.iterations < 0 or self.eval_every < 1:
            raise ConfigError("batch_size and eval_every must be positive, iterations >= 0")
        if self.split not in ("hash", "none"):
            raise ConfigError("split must be 'hash' or 'none'")
        bad = [s for s in self.eval_splits if s not in SPLITS]
        if bad:
            raise ConfigError(f"unknown eval splits {bad}")
        unknown = set(self.optimizer) - set(OPTIMIZER_KEYS)
        if unknown:
            raise ConfigError(f"unknown optimizer settings {sorted(unknown)}")
        if "path" in self.dataset:
            if not os.path.exists(self.resolve(self.dataset["path"])):
                raise ConfigError(f"dataset file {self.dataset['path']!r} does not exist")
        elif "family" not in self.dataset:
            raise ConfigError("dataset needs either 'path' or 'family'")
        elif int(self.dataset.get("count", 0)) < 1:
            raise ConfigError("dataset count must be positive")

    def resolve(self, path: str) -> str:
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)

    @property
    def output_dir(self) -> str:
        return self.resolve(self.out_dir)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict, base_dir: str = ".") -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__ if f != "base_dir"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**d, base_dir=base_dir)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh), base_dir=os.path.dirname(os.path.abspath(path)))


# data ---------------------------------------------------------------------------

def split_of(index: int, seed: int) -> str:
    """80/10/10 assignment from a hash of ``(seed, index)``."""
    h = int.from_bytes(hashlib.sha256(f"{seed}:{index}".encode()).digest()[:8], "little") % 10
    return "train" if h < 8 else ("val" if h == 8 else "test")


def load_dataset(cfg: ExperimentConfig) -> List[LabeledSample]:
    spec = cfg.dataset
    if "path" in spec:
        samples = load_samples(cfg.resolve(spec["path"]))
    else:
        samples = list(generate(spec["family"], int(spec["n"]), int(spec["count"]),
                                int(spec.get("seed", cfg.seed)), spec.get("task", "shortest-path"),
                                int(spec.get("holes", 0)), **spec.get("params", {})))
    if spec.get("perturb"):
        p = spec["perturb"]
        seeds = spawn_seeds(int(p.get("seed", cfg.seed)), len(samples))
        samples = [perturb(s, p["kind"], p["amount"], np.random.default_rng(c))
                   for s, c in zip(samples, seeds)]
    want = LABEL_KIND[cfg.task]
    for s in samples:
        if s.kind != want:
            raise ShapeMismatch(f"task {cfg.task} needs {want!r} labels, dataset has {s.kind!r}")
    return samples


def split_samples(samples, cfg: ExperimentConfig) -> Dict[str, list]:
    parts = {s: [] for s in SPLITS}
    for i, s in enumerate(samples):
        parts["train" if cfg.split == "none" else split_of(i, cfg.seed)].append(s)
    return parts


def _labels(samples):
    return [s.label for s in samples]


# records ------------------------------------------------------------------------

def _fmt(value: float) -> str:
    return repr(float(value))


class RunRecord:
    """Evaluation rows of one run; iterations are non-decreasing."""

    def __init__(self):
        self.rows = []
        self.seconds = []

    def add(self, iteration: int, split: str, metrics: dict):
        if self.rows and iteration < self.rows[-1][0]:
            raise ValueError("iterations must not decrease")
        for name in sorted(metrics):
            self.rows.append((int(iteration), split, name, float(metrics[name])))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RUN_HEADER)
        for it, split, name, value in self.rows:
            w.writerow((it, split, name, _fmt(value)))
        return buf.getvalue()

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())

    def last(self, split: str, metric: str) -> Optional[float]:
        for it, s, name, value in reversed(self.rows):
            if s == split and name == metric:
                return value
        return None

    @staticmethod
    def read(path) -> List[tuple]:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader))
            if header != RUN_HEADER:
                raise ValueError(f"{path}: not a run record (header {header})")
            return [(int(r[0]), r[1], r[2], float(r[3])) for r in reader]


# training -----------------------------------------------------------------------

def score(est, task: str, X, y) -> dict:
    """Task metrics of a fitted estimator on samples ``X`` with labels ``y``."""
    if len(X) == 0:
        return {}
    if task == "node-binary":
        logits = est.decision_function(X)
        return node_binary_metrics(np.concatenate([np.asarray(v).reshape(-1) for v in y]),
                                   np.concatenate(logits))
    if task == "graph-class":
        codes = np.searchsorted(est.classes_, np.asarray(y))
        return graph_class_metrics(codes, est.decision_function(X))
    return regression_metrics(np.asarray(y, dtype=np.float64), est.predict(X))


def make_estimator(cfg: ExperimentConfig):
    params = dict(cfg.model)
    params.update(cfg.optimizer)
    params.update(batch_size=cfg.batch_size, max_iter=cfg.iterations, random_state=cfg.seed)
    return TASK_ESTIMATORS[cfg.task](**params)


def featurize(est, samples, cfg: ExperimentConfig) -> list:
    graphs = [s.graph for s in samples]
    if not graphs:
        return []
    fz = SpectralFeaturizer(est.k, est.threshold, est.eigensolver,
                            edge_dropout=float(cfg.dataset.get("edge_dropout", 0.0)),
                            random_state=cfg.seed)
    return fz.transform(graphs)


def train(cfg: ExperimentConfig, verbose: bool = False) -> RunRecord:
    """Train per ``cfg``; write run.csv, timing.csv and checkpoints.

    Evaluation happens at iteration 0, every ``eval_every`` iterations and
    after the last one.  Train rows carry the mean minibatch loss since the
    previous evaluation.
    """
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.json"), "w", encoding="utf-8") as fh:
        fh.write(cfg.to_json())

    est = make_estimator(cfg)
    parts = split_samples(load_dataset(cfg), cfg)
    if not parts["train"]:
        raise ConfigError("training split is empty")
    X = {s: featurize(est, parts[s], cfg) for s in SPLITS}
    y = {s: _labels(parts[s]) for s in SPLITS}
    metric, larger = SELECTION[cfg.task]
    select = "val" if parts["val"] and "val" in cfg.eval_splits else cfg.eval_splits[0] if cfg.eval_splits else None

    record = RunRecord()
    state = {"losses": [], "best": None, "t0": time.perf_counter()}
    best_path = os.path.join(out, "best.ckpt")

    def evaluate_now(e, it):
        if state["losses"]:
            record.add(it, "train", {"loss": float(np.mean(state["losses"]))})
            state["losses"] = []
        for split in cfg.eval_splits:
            m = score(e, cfg.task, X[split], y[split])
            if m:
                record.add(it, split, m)
            if split == select and m:
                value = m[metric]
                best = state["best"]
                if best is None or (value > best if larger else value < best):
                    state["best"] = value
                    e.save(best_path, iteration=it, selection={"split": split, "metric": metric,
                                                               "value": value})
        record.seconds.append((it, time.perf_counter() - state["t0"]))
        if verbose:
            print(f"[{cfg.name}] it={it} " + " ".join(
                f"{s}/{n}={v:.4f}" for i, s, n, v in record.rows if i == it), flush=True)

    def callback(e, it, loss):
        if loss is not None:
            state["losses"].append(loss)
        if it == 0 or it % cfg.eval_every == 0 or it == cfg.iterations:
            evaluate_now(e, it)

    est.fit(X["train"], y["train"], callback=callback)
    est.save(os.path.join(out, "final.ckpt"), iteration=cfg.iterations)
    if state["best"] is None:
        est.save(best_path, iteration=cfg.iterations)
    record.write(os.path.join(out, "run.csv"))
    with open(os.path.join(out, "timing.csv"), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("iteration", "seconds"))
        for it, sec in record.seconds:
            w.writerow((it, f"{sec:.3f}"))
    est.record_ = record
    return record


def evaluate(checkpoint, samples, edge_dropout: float = 0.0, seed: int = 0) -> dict:
    """Metrics of a saved estimator on labelled samples (or a JSON-lines path)."""
    if isinstance(samples, (str, os.PathLike)):
        samples = load_samples(samples)
    est, header = load_estimator(checkpoint)
    task = est._task
    want = LABEL_KIND[task]
    if any(s.kind != want for s in samples):
        raise ShapeMismatch(f"checkpoint is a {task} model; samples must carry {want!r} labels")
    widths = {s.graph.widths for s in samples}
    if widths and widths != {tuple(header["n_features_in"])}:
        raise ShapeMismatch(f"dataset widths {sorted(widths)} do not match model {header['n_features_in']}")
    fz = SpectralFeaturizer(est.k, est.threshold, est.eigensolver, edge_dropout=edge_dropout,
                            random_state=seed)
    return score(est, task, fz.transform([s.graph for s in samples]), _labels(samples))


def evaluate_split(cfg: ExperimentConfig, checkpoint, split: str = "test") -> dict:
    """Re-derive a split of a configured run and score ``checkpoint`` on it."""
    est, _ = load_estimator(checkpoint)
    parts = split_samples(load_dataset(cfg), cfg)
    return score(est, cfg.task, featurize(est, parts[split], cfg), _labels(parts[split]))


# curves -------------------------------------------------------------------------

def merge_curves(runs: Dict[str, str]) -> str:
    """Merge run.csv files into one CSV keyed by variant name."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("variant",) + RUN_HEADER)
    for name in sorted(runs):
        for it, split, metric, value in RunRecord.read(runs[name]):
            w.writerow((name, it, split, metric, _fmt(value)))
    return buf.getvalue()


__all__ = [
    "ExperimentConfig", "RunRecord", "evaluate", "evaluate_split", "featurize", "load_dataset", "make_estimator",
    "merge_curves", "score", "split_of", "split_samples", "train",
]
