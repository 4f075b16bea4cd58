"""Labelled samples, seeding and JSON-lines persistence."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Union

import numpy as np

from ..graph import Graph, dumps_record, graph_from_record, graph_to_record, read_jsonl

LABEL_KINDS = ("class", "node", "target")


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator; accepts an int, a SeedSequence or a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_seeds(seed: int, count: int) -> list:
    """Independent child seeds, one per sample, stable in ``seed``."""
    return np.random.SeedSequence(seed).spawn(count)


@dataclass(eq=False)
class LabeledSample:
    """A graph with its supervision target.

    ``kind`` is ``"class"`` (graph class id), ``"node"`` (one binary label per
    vertex) or ``"target"`` (graph-level regression vector).
    """

    graph: Graph
    label: Union[int, np.ndarray, None] = None
    kind: Optional[str] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind is not None and self.kind not in LABEL_KINDS:
            raise ValueError(f"label kind must be one of {LABEL_KINDS}")
        if self.kind == "node":
            self.label = np.asarray(self.label, dtype=np.int64).reshape(-1)
            if self.label.shape[0] != self.graph.n_nodes:
                raise ValueError("per-node labels must have one entry per vertex")
        elif self.kind == "target":
            self.label = np.asarray(self.label, dtype=np.float64).reshape(-1)
        elif self.kind == "class":
            self.label = int(self.label)

    def to_record(self) -> dict:
        labels = None
        if self.kind is not None:
            value = self.label.tolist() if isinstance(self.label, np.ndarray) else self.label
            labels = {self.kind: value}
        return graph_to_record(self.graph, labels, self.meta or None)

    @classmethod
    def from_record(cls, rec: dict) -> "LabeledSample":
        g = graph_from_record(rec)
        labels = rec.get("labels") or {}
        kind = next((k for k in LABEL_KINDS if k in labels), None)
        return cls(g, labels.get(kind), kind, dict(rec.get("meta") or {}))

    def with_graph(self, graph: Graph, label=None, **meta) -> "LabeledSample":
        new_meta = dict(self.meta)
        new_meta.update(meta)
        return LabeledSample(graph, self.label if label is None else label, self.kind, new_meta)


def save_samples(path, samples: Iterable[LabeledSample], manifest: Optional[dict] = None) -> int:
    """Write samples as JSON lines, plus ``<path>.manifest.json`` if given."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(dumps_record(s.to_record()))
            fh.write("\n")
            count += 1
    if manifest is not None:
        manifest = dict(manifest)
        manifest["count"] = count
        with open(manifest_path(path), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return count


def load_samples(path) -> List[LabeledSample]:
    return [LabeledSample.from_record(rec) for rec in read_jsonl(path)]


def manifest_path(path) -> str:
    return os.fspath(path) + ".manifest.json"


def load_manifest(path) -> Optional[dict]:
    mp = manifest_path(path)
    if not os.path.exists(mp):
        return None
    with open(mp, encoding="utf-8") as fh:
        return json.load(fh)
