"""scikit-learn style estimators wrapping :class:`~spectral_gn.model.SpectralGN`.

Inputs are lists of :class:`~spectral_gn.graph.Graph` (or samples carrying a
``.graph``).  :class:`SpectralFeaturizer` precomputes spectral graphs so they
can be reused across repeated evaluations.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from .autodiff import bce_with_logits, mse, softmax_cross_entropy
from .exceptions import NaNLoss, ShapeMismatch
from .datasets.perturb import edge_dropout
from .metrics import accuracy
from .model import SpectralGN, SpectralGNConfig, make_batch, spectral_inputs
from .nn import AdamState, adam_step, load_checkpoint, save_checkpoint
from .validation import (SpectralSample, check_graph_targets, check_graphs, check_node_labels,
                         graph_widths)


class SpectralFeaturizer(TransformerMixin, BaseEstimator):
    """Attach Laplacian spectral graphs to input graphs.

    Parameters
    ----------
    k : int
        Number of smallest eigenpairs; 0 attaches nothing.
    threshold : bool
        Use ``concat[max(U,0), max(-U,0)]`` (2k spectral vertices).
    eigensolver : {"jacobi", "lapack", "auto"}
    edge_dropout : float
        Fraction of undirected edges removed from the spatial graph *after*
        the basis is computed, so the spectral pathway still sees the
        original topology.
    random_state : int
        Seeds the edge dropout.
    """

    def __init__(self, k=4, threshold=False, eigensolver="jacobi", edge_dropout=0.0, random_state=0):
        self.k = k
        self.threshold = threshold
        self.eigensolver = eigensolver
        self.edge_dropout = edge_dropout
        self.random_state = random_state

    def fit(self, X, y=None):
        self.n_features_in_ = graph_widths(check_graphs(X))
        return self

    def transform(self, X):
        X = check_graphs(X)
        seeds = np.random.SeedSequence(self.random_state).spawn(len(X)) if self.edge_dropout else None
        graphs = [x.graph if isinstance(x, SpectralSample) else x for x in X]
        spectral = spectral_inputs(graphs, self.k, self.threshold, self.eigensolver)
        out = []
        for i, g in enumerate(graphs):
            if self.edge_dropout:
                g = edge_dropout(g, self.edge_dropout, np.random.default_rng(seeds[i]))
            out.append(SpectralSample(g, spectral[i]))
        return out


class _SpectralGNBase(BaseEstimator):
    _task = None

    def __init__(self, k=4, threshold=False, n_steps=3, spatial_block="gn", spectral_block="gn",
                 latent_size=64, hidden_size=64, n_hidden=2, aggregation="sum", spectral_global=True,
                 share_weights=False, eigensolver="jacobi", learning_rate=1e-3, beta1=0.9, beta2=0.999,
                 epsilon=1e-8, batch_size=32, max_iter=1000, random_state=0):
        self.k = k
        self.threshold = threshold
        self.n_steps = n_steps
        self.spatial_block = spatial_block
        self.spectral_block = spectral_block
        self.latent_size = latent_size
        self.hidden_size = hidden_size
        self.n_hidden = n_hidden
        self.aggregation = aggregation
        self.spectral_global = spectral_global
        self.share_weights = share_weights
        self.eigensolver = eigensolver
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.batch_size = batch_size
        self.max_iter = max_iter
        self.random_state = random_state

    # -- data ------------------------------------------------------------
    def _model_config(self, n_outputs) -> SpectralGNConfig:
        return SpectralGNConfig(
            k=self.k, threshold=self.threshold, n_steps=self.n_steps, spatial_block=self.spatial_block,
            spectral_block=self.spectral_block, latent_size=self.latent_size, hidden_size=self.hidden_size,
            n_hidden=self.n_hidden, aggregation=self.aggregation, spectral_global=self.spectral_global,
            share_weights=self.share_weights, task=self._task, n_outputs=n_outputs,
            eigensolver=self.eigensolver)

    def featurizer(self) -> SpectralFeaturizer:
        return SpectralFeaturizer(self.k, self.threshold, self.eigensolver)

    def _featurize(self, X) -> list:
        """Graphs -> SpectralSamples, reusing precomputed spectral inputs."""
        X = check_graphs(X)
        c = 2 * self.k if self.threshold else self.k
        raw = [i for i, x in enumerate(X) if not isinstance(x, SpectralSample)]
        fresh = spectral_inputs([X[i] for i in raw], self.k, self.threshold, self.eigensolver)
        out = list(X)
        for i, spectral in zip(raw, fresh):
            out[i] = SpectralSample(X[i], spectral)
        for x in out:
            got = 0 if x.spectral is None else x.spectral.n_vertices
            if got != c:
                raise ShapeMismatch(f"spectral sample has {got} spectral vertices, model expects {c}")
        return out

    def _batch(self, samples):
        return make_batch([s.graph for s in samples], [s.spectral for s in samples] if self.k else None)

    # -- training ----------------------------------------------------------
    def _loss(self, out, targets):
        raise NotImplementedError

    def _targets(self, idx):
        raise NotImplementedError

    def _init_model(self, widths, n_outputs):
        self.config_ = self._model_config(n_outputs)
        self.model_ = SpectralGN(self.config_, widths, seed=self.random_state)
        self.optimizer_ = AdamState(self.learning_rate, self.beta1, self.beta2, self.epsilon)
        self.n_features_in_ = tuple(widths)
        self.n_iter_ = 0
        self.loss_curve_ = []

    def _fit_samples(self, samples, callback=None):
        n = len(samples)
        rng = np.random.default_rng(self.random_state)
        order, pos = rng.permutation(n), 0
        if callback is not None:
            callback(self, 0, None)
        for it in range(1, self.max_iter + 1):
            if pos + self.batch_size > n and pos > 0:
                order, pos = rng.permutation(n), 0
            idx = order[pos:pos + self.batch_size]
            pos += len(idx)
            loss = self.train_step([samples[i] for i in idx], self._targets(idx))
            if callback is not None:
                callback(self, it, loss)
        return self

    def train_step(self, samples, targets) -> float:
        """One Adam update on a minibatch; returns the loss before the update."""
        params = self.model_.params
        params.zero_grad()
        out = self.model_(self._batch(samples))
        loss = self._loss(out, targets)
        value = float(loss.data[0, 0])
        if not np.isfinite(value):
            raise NaNLoss(f"non-finite loss {value} at iteration {self.n_iter_ + 1}")
        loss.backward()
        adam_step(self.optimizer_, params, params.grads())
        self.n_iter_ += 1
        self.loss_curve_.append(value)
        return value

    def _raw_outputs(self, X, batch_size=64) -> list:
        if not hasattr(self, "model_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet")
        samples = self._featurize(X)
        outs = []
        for lo in range(0, len(samples), batch_size):
            chunk = samples[lo:lo + batch_size]
            outs.append((chunk, self.model_(self._batch(chunk)).data))
        return outs

    # -- persistence ---------------------------------------------------------
    def save(self, path, **extra):
        header = {"estimator": type(self).__name__,
                  "estimator_params": self.get_params(), "n_features_in": list(self.n_features_in_),
                  "n_outputs": self.config_.n_outputs, "model_config": self.config_.to_dict(),
                  "n_iter": self.n_iter_}
        header.update(self._extra_state())
        header.update(extra)
        save_checkpoint(path, self.model_.params.arrays(), header)

    def _extra_state(self) -> dict:
        return {}

    def _restore_state(self, header):
        pass


class SpectralGNClassifier(ClassifierMixin, _SpectralGNBase):
    """Graph-level classifier; the loss is applied to the decoded global."""

    _task = "graph-class"

    def fit(self, X, y, callback=None):
        samples = self._featurize(X)
        y = check_graph_targets(samples, y, dtype=None)
        self.classes_, self._y = np.unique(y, return_inverse=True)
        self._init_model(graph_widths(samples), len(self.classes_))
        return self._fit_samples(samples, callback)

    def _targets(self, idx):
        return self._y[idx]

    def _loss(self, out, targets):
        return softmax_cross_entropy(out, targets)

    def decision_function(self, X):
        return np.concatenate([o for _, o in self._raw_outputs(X)], axis=0)

    def predict_proba(self, X):
        z = self.decision_function(X)
        z = np.exp(z - z.max(axis=1, keepdims=True))
        return z / z.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.classes_[self.decision_function(X).argmax(axis=1)]

    def _extra_state(self):
        return {"classes": self.classes_.tolist()}

    def _restore_state(self, header):
        self.classes_ = np.asarray(header["classes"])


class SpectralGNNodeClassifier(_SpectralGNBase):
    """Binary vertex classifier (e.g. "is this vertex on a shortest path?").

    ``y`` is a list of 0/1 vectors, one per graph.  With
    ``class_weight="balanced"`` positives are weighted by #neg/#pos in each
    minibatch.
    """

    _task = "node-binary"

    def __init__(self, k=4, threshold=False, n_steps=3, spatial_block="gn", spectral_block="gn",
                 latent_size=64, hidden_size=64, n_hidden=2, aggregation="sum", spectral_global=True,
                 share_weights=False, eigensolver="jacobi", learning_rate=1e-3, beta1=0.9, beta2=0.999,
                 epsilon=1e-8, batch_size=32, max_iter=1000, random_state=0, class_weight="balanced"):
        super().__init__(k, threshold, n_steps, spatial_block, spectral_block, latent_size, hidden_size,
                         n_hidden, aggregation, spectral_global, share_weights, eigensolver, learning_rate,
                         beta1, beta2, epsilon, batch_size, max_iter, random_state)
        self.class_weight = class_weight

    def fit(self, X, y, callback=None):
        samples = self._featurize(X)
        self._y = check_node_labels(samples, y)
        self._init_model(graph_widths(samples), 1)
        return self._fit_samples(samples, callback)

    def _targets(self, idx):
        return np.concatenate([self._y[i] for i in idx])

    def _loss(self, out, targets):
        return bce_with_logits(out, targets, positive_weight(targets, self.class_weight))

    def decision_function(self, X):
        """Per-graph arrays of vertex logits."""
        out = []
        for chunk, logits in self._raw_outputs(X):
            bounds = np.cumsum([0] + [s.graph.n_nodes for s in chunk])
            out.extend(logits[lo:hi, 0] for lo, hi in zip(bounds[:-1], bounds[1:]))
        return out

    def predict(self, X):
        return [(z > 0).astype(np.int64) for z in self.decision_function(X)]

    def score(self, X, y):
        """Vertex accuracy pooled over all graphs."""
        pred = np.concatenate(self.predict(X))
        return accuracy(np.concatenate([np.asarray(v).reshape(-1) for v in y]), pred)


def positive_weight(targets, class_weight="balanced") -> float:
    """#neg/#pos for balanced weighting (1 if either class is absent)."""
    if class_weight is None:
        return 1.0
    targets = np.asarray(targets).reshape(-1)
    n_pos = int(targets.sum())
    n_neg = targets.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return 1.0
    return n_neg / n_pos


class SpectralGNRegressor(RegressorMixin, _SpectralGNBase):
    """Graph-level regression with a mean-squared-error loss."""

    _task = "graph-regress"

    def fit(self, X, y, callback=None):
        samples = self._featurize(X)
        y = check_graph_targets(samples, y)
        self._ndim = y.ndim
        self._y = y.reshape(len(samples), -1)
        self._init_model(graph_widths(samples), self._y.shape[1])
        return self._fit_samples(samples, callback)

    def _targets(self, idx):
        return self._y[idx]

    def _loss(self, out, targets):
        return mse(out, targets)

    def predict(self, X):
        out = np.concatenate([o for _, o in self._raw_outputs(X)], axis=0)
        return out[:, 0] if getattr(self, "_ndim", 2) == 1 else out

    def _extra_state(self):
        return {"target_ndim": self._ndim}

    def _restore_state(self, header):
        self._ndim = header["target_ndim"]


ESTIMATORS = {cls.__name__: cls for cls in (SpectralGNClassifier, SpectralGNNodeClassifier, SpectralGNRegressor)}
TASK_ESTIMATORS = {cls._task: cls for cls in ESTIMATORS.values()}


def load_estimator(path):
    """Rebuild a fitted estimator from :meth:`_SpectralGNBase.save` output."""
    arrays, header = load_checkpoint(path)
    cls = ESTIMATORS[header["estimator"]]
    est = cls(**header["estimator_params"])
    est._init_model(tuple(header["n_features_in"]), header["n_outputs"])
    est.model_.params.load_arrays(arrays)
    est.n_iter_ = header.get("n_iter", 0)
    est._restore_state(header)
    return est, header
