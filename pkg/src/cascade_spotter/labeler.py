"""Supervised user labeling with gradient-boosted trees.

The booster is second-order boosting on logistic loss: each round fits a
depth-limited regression tree to gradients g = p - y and hessians
h = p (1 - p), leaf weights are -G / (H + lambda), and a split is kept only
if its gain

    1/2 [G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)] - gamma

is strictly positive.  Features are quantile-binned once per fit (256 bins)
so split search works on bin histograms; non-finite values are routed to a
per-split default direction learned from the gain.  Predictions are
sigmoid(base_score + learning_rate * sum of tree outputs); leaves store raw
Newton weights and the learning rate is applied at accumulation time.

Models serialize to JSON with Python's repr-based float formatting, which
round-trips binary64 exactly, so save -> load -> predict is bit-identical.
Feature alignment is by column name: predict with permuted columns gives
identical output, and missing or extra names raise SchemaMismatchError.

Everything here is deterministic given the seed.  Hyperparameter search
draws candidates from SEARCH_SPACE and scores them by stratified 5-fold
cross-validated AUC.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.metrics import roc_auc_score
from sklearn.model_selection import StratifiedKFold
from sklearn.utils.validation import check_array, check_is_fitted

from cascade_spotter.ingest import UserRecord

log = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1

SEARCH_SPACE = {
    "learning_rate": (0.05, 0.1, 0.3),
    "max_depth": (3, 4, 6),
    "n_rounds": (50, 100, 200),
    "subsample": (0.8, 1.0),
    "colsample": (0.5, 0.8, 1.0),
}


class SchemaMismatchError(ValueError):
    """Feature names at predict time do not match the model's schema."""


@dataclass(frozen=True)
class TreeNode:
    """Split node or leaf; leaves have feature == -1 and carry weight."""

    feature: int = -1
    threshold: float = 0.0
    left: int = -1
    right: int = -1
    default_left: bool = True
    weight: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


def _tree_margin(nodes: Sequence[TreeNode], X: np.ndarray, out: np.ndarray,
                 node_id: int, rows: np.ndarray) -> None:
    if rows.size == 0:
        return
    node = nodes[node_id]
    if node.is_leaf:
        out[rows] += node.weight
        return
    x = X[rows, node.feature]
    finite = np.isfinite(x)
    go_left = np.where(finite, x <= node.threshold, node.default_left)
    _tree_margin(nodes, X, out, node.left, rows[go_left])
    _tree_margin(nodes, X, out, node.right, rows[~go_left])


@dataclass(frozen=True)
class TreeEnsembleModel:
    """Immutable trained ensemble plus the feature schema it expects."""

    feature_names: tuple[str, ...]
    base_score: float = 0.0
    learning_rate: float = 0.1
    trees: tuple[tuple[TreeNode, ...], ...] = ()
    metadata: dict = field(default_factory=dict)
    version: int = MODEL_FORMAT_VERSION

    def margin(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        acc = np.zeros(len(X))
        rows = np.arange(len(X))
        for nodes in self.trees:
            _tree_margin(nodes, X, acc, 0, rows)
        return self.base_score + self.learning_rate * acc

    def predict(self, X: np.ndarray, feature_names: Optional[Sequence[str]] = None) -> np.ndarray:
        """Probabilities in [0, 1]; columns realigned by name if given."""
        if feature_names is not None:
            X = align_features(X, feature_names, self.feature_names)
        return expit(self.margin(X))

    def to_json(self) -> str:
        doc = {
            "version": self.version,
            "schema": list(self.feature_names),
            "base_score": self.base_score,
            "learning_rate": self.learning_rate,
            "trees": [
                {"nodes": [_node_to_json(n) for n in nodes]} for nodes in self.trees
            ],
            "metadata": self.metadata,
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "TreeEnsembleModel":
        doc = json.loads(text)
        version = doc.get("version", MODEL_FORMAT_VERSION)
        if version != MODEL_FORMAT_VERSION:
            raise ValueError(
                f"unsupported model format version {version!r} "
                f"(this build reads version {MODEL_FORMAT_VERSION})"
            )
        trees = tuple(
            tuple(_node_from_json(n) for n in t["nodes"]) for t in doc["trees"]
        )
        return cls(
            feature_names=tuple(doc["schema"]),
            base_score=doc["base_score"],
            learning_rate=doc["learning_rate"],
            trees=trees,
            metadata=doc.get("metadata", {}),
            version=version,
        )

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TreeEnsembleModel":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _node_to_json(n: TreeNode) -> dict:
    if n.is_leaf:
        return {"weight": n.weight}
    return {
        "feature": n.feature,
        "threshold": n.threshold,
        "left": n.left,
        "right": n.right,
        "default_left": n.default_left,
    }


def _node_from_json(d: dict) -> TreeNode:
    if "weight" in d:
        return TreeNode(weight=d["weight"])
    return TreeNode(
        feature=d["feature"],
        threshold=d["threshold"],
        left=d["left"],
        right=d["right"],
        default_left=d["default_left"],
    )


def align_features(X: np.ndarray, names: Sequence[str], wanted: Sequence[str]) -> np.ndarray:
    """Reorder columns of X (labeled `names`) into `wanted` order."""
    names = tuple(names)
    wanted = tuple(wanted)
    if names == wanted:
        return np.asarray(X, dtype=np.float64)
    index = {n: i for i, n in enumerate(names)}
    missing = [n for n in wanted if n not in index]
    extra = [n for n in names if n not in set(wanted)]
    if missing or extra:
        raise SchemaMismatchError(
            f"feature schema mismatch: missing {missing!r}, unexpected {extra!r}"
        )
    X = np.asarray(X, dtype=np.float64)
    return X[:, [index[n] for n in wanted]]


# ---------------------------------------------------------------------------
# histogram construction and split search

_MISSING_BIN_OFFSET = 1  # one extra bin per feature collects non-finite rows


@dataclass(frozen=True)
class _Binned:
    codes: np.ndarray       # (n, d) int32, missing rows get n_edges[j]
    edges: tuple[np.ndarray, ...]
    n_bins: int             # histogram width including the missing bin


def _bin_features(X: np.ndarray, max_bins: int) -> _Binned:
    n, d = X.shape
    codes = np.zeros((n, d), dtype=np.int32)
    edges: list[np.ndarray] = []
    widest = 1
    for j in range(d):
        col = X[:, j]
        finite = np.isfinite(col)
        uniq = np.unique(col[finite])
        if uniq.size <= 1:
            e = np.empty(0)
        elif uniq.size <= max_bins:
            e = (uniq[:-1] + uniq[1:]) / 2.0
        else:
            fracs = np.arange(1, max_bins) / max_bins
            e = np.unique(np.quantile(col[finite], fracs))
        edges.append(e)
        widest = max(widest, e.size + 1)
        codes[finite, j] = np.searchsorted(e, col[finite], side="left")
        codes[~finite, j] = e.size  # parked past the last real bin; see below
    # missing rows share the bin width so one bincount covers everything;
    # recode missing to the common trash bin
    for j in range(d):
        col = X[:, j]
        codes[~np.isfinite(col), j] = widest
    return _Binned(codes=codes, edges=tuple(edges), n_bins=widest + _MISSING_BIN_OFFSET)


@dataclass(frozen=True)
class _BoostConfig:
    learning_rate: float = 0.1
    max_depth: int = 3
    n_rounds: int = 100
    subsample: float = 1.0
    colsample: float = 1.0
    reg_lambda: float = 1.0
    gamma: float = 0.0
    max_bins: int = 256

    def as_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "max_depth": self.max_depth,
            "n_rounds": self.n_rounds,
            "subsample": self.subsample,
            "colsample": self.colsample,
            "reg_lambda": self.reg_lambda,
            "gamma": self.gamma,
        }


def _fit_tree(binned: _Binned, g: np.ndarray, h: np.ndarray, sampled: np.ndarray,
              cols: np.ndarray, cfg: _BoostConfig) -> tuple[tuple[TreeNode, ...], np.ndarray]:
    """Grow one tree level-wise over binned features.

    Split statistics come from sampled rows only; every row is routed so
    the returned vector already holds the tree's output on all rows.
    Histograms for a whole level are built with a single bincount keyed by
    (frontier slot, column, bin).
    """
    nb = binned.n_bins
    c = cols.size
    sub = binned.codes[:, cols]
    n = sub.shape[0]
    lam = cfg.reg_lambda
    miss_code = nb - 1
    n_edges = np.array([binned.edges[j].size for j in cols], dtype=np.int64)
    bin_invalid = np.arange(nb - 1)[None, :] >= n_edges[:, None]  # (c, nb-1)

    nodes: list[Optional[TreeNode]] = [None]
    frontier = [0]                       # node ids, indexed by frontier slot
    row_node = np.zeros(n, dtype=np.int64)   # frontier slot per row, -1 when settled
    out = np.zeros(n)

    for depth in range(cfg.max_depth + 1):
        F = len(frontier)
        if F == 0:
            break
        idx = np.flatnonzero((row_node >= 0) & sampled)
        key = ((row_node[idx, None] * c + np.arange(c)[None, :]) * nb + sub[idx]).ravel()
        size = F * c * nb
        hg = np.bincount(key, weights=np.repeat(g[idx], c), minlength=size).reshape(F, c, nb)
        hh = np.bincount(key, weights=np.repeat(h[idx], c), minlength=size).reshape(F, c, nb)
        hn = np.bincount(key, minlength=size).reshape(F, c, nb).astype(np.float64)

        Gf = hg[:, 0, :].sum(axis=1)   # per-node totals; every column sees all rows
        Hf = hh[:, 0, :].sum(axis=1)
        Nf = hn[:, 0, :].sum(axis=1)

        if depth < cfg.max_depth:
            gm, hm, nm = hg[:, :, -1], hh[:, :, -1], hn[:, :, -1]
            GL = hg[:, :, :-1].cumsum(axis=2)
            HL = hh[:, :, :-1].cumsum(axis=2)
            NL = hn[:, :, :-1].cumsum(axis=2)
            parent = (Gf * Gf / (Hf + lam))[:, None, None]

            def side_gain(gl, hl, nl):
                gr = Gf[:, None, None] - gl
                hr = Hf[:, None, None] - hl
                nr = Nf[:, None, None] - nl
                gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent) - cfg.gamma
                gain[(nl < 1) | (nr < 1)] = -np.inf
                return gain

            # missing rows follow the default direction; score both choices
            stacked = np.stack([
                side_gain(GL + gm[:, :, None], HL + hm[:, :, None], NL + nm[:, :, None]),
                side_gain(GL, HL, NL),
            ], axis=-1)  # (F, c, nb-1, 2)
            stacked[np.broadcast_to(bin_invalid[None, :, :, None], stacked.shape)] = -np.inf
            flat = stacked.reshape(F, -1)
            best = flat.argmax(axis=1)
            best_gain = flat[np.arange(F), best]
            can_split = (best_gain > 0.0) & (Nf >= 2)
        else:
            can_split = np.zeros(F, dtype=bool)

        split_ci = np.zeros(F, dtype=np.int64)
        split_b = np.zeros(F, dtype=np.int64)
        split_dl = np.zeros(F, dtype=bool)
        child_slot = np.full(F, -1, dtype=np.int64)
        leaf_w = -Gf / (Hf + lam)
        next_frontier: list[int] = []
        for f in range(F):
            nid = frontier[f]
            if not can_split[f]:
                nodes[nid] = TreeNode(weight=float(leaf_w[f]))
                continue
            ci, b, which = np.unravel_index(best[f], (c, nb - 1, 2))
            j = int(cols[ci])
            left_id, right_id = len(nodes), len(nodes) + 1
            nodes.extend([None, None])
            nodes[nid] = TreeNode(
                feature=j,
                threshold=float(binned.edges[j][b]),
                left=left_id,
                right=right_id,
                default_left=bool(which == 0),
            )
            split_ci[f], split_b[f], split_dl[f] = ci, b, which == 0
            child_slot[f] = len(next_frontier)
            next_frontier.extend([left_id, right_id])

        # route every active row: settle leaves, descend splits
        act = np.flatnonzero(row_node >= 0)
        slot = row_node[act]
        leafed = child_slot[slot] < 0
        out[act[leafed]] = leaf_w[slot[leafed]]
        desc = act[~leafed]
        dslot = slot[~leafed]
        code = sub[desc, split_ci[dslot]]
        go_left = np.where(code == miss_code, split_dl[dslot], code <= split_b[dslot])
        row_node[act[leafed]] = -1
        row_node[desc] = child_slot[dslot] + np.where(go_left, 0, 1)
        frontier = next_frontier

    return tuple(nodes), out  # type: ignore[arg-type]


def _boost(X: np.ndarray, y: np.ndarray, cfg: _BoostConfig, rng: np.random.Generator,
           base_score: float = 0.0,
           warm_margin: Optional[np.ndarray] = None,
           n_rounds: Optional[int] = None) -> list[tuple[TreeNode, ...]]:
    n, d = X.shape
    binned = _bin_features(X, cfg.max_bins)
    margin = np.full(n, base_score) if warm_margin is None else warm_margin.copy()
    trees: list[tuple[TreeNode, ...]] = []
    rounds = cfg.n_rounds if n_rounds is None else n_rounds
    for _ in range(rounds):
        p = expit(margin)
        g = p - y
        h = p * (1.0 - p)
        sampled = np.ones(n, dtype=bool)
        if cfg.subsample < 1.0:
            k = max(1, int(round(cfg.subsample * n)))
            sampled = np.zeros(n, dtype=bool)
            sampled[rng.permutation(n)[:k]] = True
        cols = np.arange(d)
        if cfg.colsample < 1.0:
            k = max(1, int(round(cfg.colsample * d)))
            cols = np.sort(rng.permutation(d)[:k])
        nodes, output = _fit_tree(binned, g, h, sampled, cols, cfg)
        trees.append(nodes)
        margin += cfg.learning_rate * output
    return trees


class BoostedTreesClassifier(BaseEstimator, ClassifierMixin):
    """sklearn-style wrapper around one boosting configuration.

    fit/predict_proba operate on plain arrays; the fitted ensemble is
    exposed as `model_` for serialization and fine-tuning.
    """

    def __init__(
        self,
        n_rounds: int = 100,
        learning_rate: float = 0.1,
        max_depth: int = 3,
        subsample: float = 1.0,
        colsample: float = 1.0,
        reg_lambda: float = 1.0,
        gamma: float = 0.0,
        max_bins: int = 256,
        base_score: float = 0.0,
        random_state: int = 0,
    ):
        self.n_rounds = n_rounds
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.subsample = subsample
        self.colsample = colsample
        self.reg_lambda = reg_lambda
        self.gamma = gamma
        self.max_bins = max_bins
        self.base_score = base_score
        self.random_state = random_state

    def _config(self) -> _BoostConfig:
        return _BoostConfig(
            learning_rate=self.learning_rate,
            max_depth=self.max_depth,
            n_rounds=self.n_rounds,
            subsample=self.subsample,
            colsample=self.colsample,
            reg_lambda=self.reg_lambda,
            gamma=self.gamma,
            max_bins=self.max_bins,
        )

    def fit(self, X, y, feature_names: Optional[Sequence[str]] = None):
        X = check_array(X, ensure_all_finite=False)
        y = np.asarray(y, dtype=np.float64)
        if len(y) != len(X):
            raise ValueError("X and y length mismatch")
        rng = np.random.default_rng(self.random_state)
        trees = _boost(X, y, self._config(), rng, base_score=self.base_score)
        names = tuple(feature_names) if feature_names is not None \
            else tuple(f"f{i}" for i in range(X.shape[1]))
        self.classes_ = np.array([0, 1])
        self.model_ = TreeEnsembleModel(
            feature_names=names,
            base_score=self.base_score,
            learning_rate=self.learning_rate,
            trees=tuple(trees),
            metadata={"hyperparameters": self._config().as_dict()},
        )
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        X = check_array(X, ensure_all_finite=False)
        p = self.model_.predict(X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)


def _threshold_labels(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if np.any(~np.isfinite(y)) or np.any(y < 0) or np.any(y > 1):
        raise ValueError("labels must be reals within [0, 1]")
    return (y >= 0.5).astype(np.float64)


def train(
    X: np.ndarray,
    y: np.ndarray,
    feature_names: Sequence[str],
    seed: int = 0,
    n_candidates: int = 20,
    n_folds: int = 5,
) -> TreeEnsembleModel:
    """Random hyperparameter search scored by stratified CV AUC, then a
    refit of the winner on all rows.  Bit-reproducible for a fixed seed."""
    X = check_array(X, ensure_all_finite=False)
    cls = _threshold_labels(y)
    if len(X) < 10:
        raise ValueError(f"need at least 10 labeled rows, got {len(X)}")
    if cls.min() == cls.max():
        raise ValueError("degenerate labels: both classes must be present")

    draw_rng = np.random.default_rng([seed, 0])
    candidates = []
    for _ in range(n_candidates):
        candidates.append(_BoostConfig(
            learning_rate=SEARCH_SPACE["learning_rate"][draw_rng.integers(3)],
            max_depth=SEARCH_SPACE["max_depth"][draw_rng.integers(3)],
            n_rounds=SEARCH_SPACE["n_rounds"][draw_rng.integers(3)],
            subsample=SEARCH_SPACE["subsample"][draw_rng.integers(2)],
            colsample=SEARCH_SPACE["colsample"][draw_rng.integers(3)],
        ))

    folds = list(StratifiedKFold(n_splits=n_folds, shuffle=True, random_state=seed)
                 .split(X, cls))
    best_idx, best_auc = 0, -np.inf
    scores = []
    for ci, cfg in enumerate(candidates):
        aucs = []
        for fi, (tr, va) in enumerate(folds):
            rng = np.random.default_rng([seed, ci + 1, fi])
            trees = _boost(X[tr], cls[tr], cfg, rng)
            m = TreeEnsembleModel(
                feature_names=tuple(feature_names),
                learning_rate=cfg.learning_rate,
                trees=tuple(trees),
            )
            aucs.append(roc_auc_score(cls[va], m.predict(X[va])))
        mean_auc = float(np.mean(aucs))
        scores.append(mean_auc)
        log.debug("candidate %d: %s -> CV AUC %.4f", ci, cfg.as_dict(), mean_auc)
        if mean_auc > best_auc:
            best_idx, best_auc = ci, mean_auc

    cfg = candidates[best_idx]
    rng = np.random.default_rng([seed, best_idx + 1, n_folds])
    trees = _boost(X, cls, cfg, rng)
    return TreeEnsembleModel(
        feature_names=tuple(feature_names),
        base_score=0.0,
        learning_rate=cfg.learning_rate,
        trees=tuple(trees),
        metadata={
            "hyperparameters": cfg.as_dict(),
            "cv_auc": best_auc,
            "cv_auc_by_candidate": [round(s, 6) for s in scores],
            "n_rows": int(len(X)),
            "n_candidates": n_candidates,
            "n_folds": n_folds,
            "seed": seed,
        },
    )


def fine_tune(
    model: TreeEnsembleModel,
    X: np.ndarray,
    y: np.ndarray,
    rounds: int,
    feature_names: Optional[Sequence[str]] = None,
    replay_X: Optional[np.ndarray] = None,
    replay_y: Optional[np.ndarray] = None,
    seed: int = 0,
) -> TreeEnsembleModel:
    """Append `rounds` trees fitted at the existing model's margins.

    Single-class y is allowed here: correcting a handful of relabeled users
    is the point.  Optionally replays extra (X, y) alongside the new rows so
    corrections do not drag the rest of the decision surface with them.
    rounds = 0 returns the model unchanged.
    """
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    if rounds == 0:
        return model
    if feature_names is not None:
        X = align_features(X, feature_names, model.feature_names)
    X = check_array(X, ensure_all_finite=False)
    cls = _threshold_labels(y)
    if replay_X is not None:
        replay_X = check_array(replay_X, ensure_all_finite=False)
        X = np.vstack([X, replay_X])
        cls = np.concatenate([cls, _threshold_labels(replay_y)])

    hp = model.metadata.get("hyperparameters", {})
    cfg = _BoostConfig(
        learning_rate=model.learning_rate,
        max_depth=int(hp.get("max_depth", 3)),
        reg_lambda=float(hp.get("reg_lambda", 1.0)),
        gamma=float(hp.get("gamma", 0.0)),
    )
    rng = np.random.default_rng([seed, len(model.trees)])
    new_trees = _boost(
        X, cls, cfg, rng,
        warm_margin=model.margin(X),
        n_rounds=rounds,
    )
    meta = dict(model.metadata)
    meta["fine_tuned_rounds"] = meta.get("fine_tuned_rounds", 0) + rounds
    meta["fine_tuned_rows"] = int(len(X))
    return replace(model, trees=model.trees + tuple(new_trees), metadata=meta)


# ---------------------------------------------------------------------------
# annotation CSV round-trip

@dataclass(frozen=True)
class AnnotationRecord:
    user_id: str
    screen_name: str
    label: Optional[float] = None  # None = unlabeled, ignored in training


def annotation_template(users: Sequence[UserRecord]) -> str:
    """CSV skeleton for hand labeling; label column left empty."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["user_id", "screen_name", "label"])
    for u in users:
        w.writerow([u.user_id, u.screen_name, ""])
    return buf.getvalue()


def load_annotations(source: Union[str, Path, io.TextIOBase]) -> list[AnnotationRecord]:
    """Parse an annotation CSV; blank labels stay None, anything outside
    [0, 1] is an error."""
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return _parse_annotations(fh)
    return _parse_annotations(source)


def _parse_annotations(fh) -> list[AnnotationRecord]:
    reader = csv.DictReader(fh)
    required = {"user_id", "screen_name", "label"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise ValueError(f"annotation CSV must have columns {sorted(required)}")
    records = []
    for lineno, row in enumerate(reader, start=2):
        raw = (row["label"] or "").strip()
        label: Optional[float] = None
        if raw:
            try:
                label = float(raw)
            except ValueError as exc:
                raise ValueError(f"line {lineno}: label {raw!r} is not a number") from exc
            if not (0.0 <= label <= 1.0):
                raise ValueError(f"line {lineno}: label {label} outside [0, 1]")
        records.append(AnnotationRecord(row["user_id"], row["screen_name"], label))
    return records
