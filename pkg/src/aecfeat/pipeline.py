"""End-to-end orchestration: frontend -> normalization -> source training ->
transfer surgery -> adaptation -> filter tap -> transform -> classifier ->
per-condition evaluation, with every artifact stamped by the config
fingerprint and seed."""

import hashlib
import json
import logging
import os
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace
from typing import List, Optional

import numpy as np

from .audio import read_wav
from .classifiers import (
    classify_segment,
    dnn_classifier_fit,
    dnn_score_matrix,
    gmm_fit,
    gmm_score_matrix,
    svm_fit,
    svm_score_matrix,
)
from .errors import FingerprintMismatch, StageError, TooFewSamples
from .frontend import (
    FeatureMatrix,
    FrontendConfig,
    apply_norm,
    fit_norm_stats,
    make_frontend_features,
    splice,
)
from .manifest import Manifest
from .network import LayerSpec, Network, TrainConfig, init_network, train
from .report import EvalReport, render_report
from .serialize import save_model
from .transfer import (
    SourceModel,
    adapt,
    append_adaptation,
    build_filter,
    extract,
    strip_output,
)
from .transforms import DctSpec, dct_apply, pca_apply, pca_fit

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    frontend: FrontendConfig = field(default_factory=FrontendConfig)
    sl_widths: tuple = (1024, 1024, 1024)
    tl1_dim: int = 512
    tl2_dim: int = 150
    source_train: TrainConfig = field(default_factory=TrainConfig)
    target_train: TrainConfig = field(default_factory=TrainConfig)
    transform: str = "dct"        # none | dct | pca
    transform_dim: int = 50
    classifier: str = "svm"       # gmm | svm | dnn
    gmm_k: int = 512
    svm_c: float = 10.0
    svm_gamma: Optional[float] = None  # None -> 1/feature_dim
    svm_frame_step: int = 1       # train the SVM on every n-th frame
    dnn_hidden: tuple = (300, 300, 100)
    variant: str = "C"            # A | B | C
    seed: int = 0
    out_dir: str = "run_out"
    accumulate_log_domain: bool = True

    def __post_init__(self):
        if isinstance(self.frontend, dict):
            self.frontend = FrontendConfig(**self.frontend)
        if isinstance(self.source_train, dict):
            self.source_train = TrainConfig(**self.source_train)
        if isinstance(self.target_train, dict):
            self.target_train = TrainConfig(**self.target_train)
        self.sl_widths = tuple(self.sl_widths)
        self.dnn_hidden = tuple(self.dnn_hidden)
        if self.transform not in ("none", "dct", "pca"):
            raise ValueError(f"unknown transform {self.transform!r}")
        if self.classifier not in ("gmm", "svm", "dnn"):
            raise ValueError(f"unknown classifier {self.classifier!r}")
        if self.variant not in ("A", "B", "C"):
            raise ValueError(f"unknown variant {self.variant!r}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def fingerprint(self):
        d = self.to_dict()
        d.pop("out_dir", None)
        text = json.dumps(d, sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@contextmanager
def _stage(name):
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        raise StageError(name, e) from e


def _segment_features(entries, cfg):
    """Unspliced frontend features per manifest entry."""
    out = []
    for e in entries:
        seg = read_wav(e.wav_path, label=e.label)
        fm = make_frontend_features(seg, cfg.frontend)
        fm.split = e.split
        out.append(fm)
    return out


def _norm_and_splice(mats, stats, cfg):
    return [splice(apply_norm(fm, stats), cfg.frontend.splice_context)
            for fm in mats]


def _pool(mats):
    return np.vstack([m.values for m in mats])


def _train_source_network(cfg, source_mats, source_labels, classes, stats):
    label_to_idx = {c: i for i, c in enumerate(classes)}
    x = _pool(source_mats)
    y = np.array([label_to_idx[l] for l, m in zip(source_labels, source_mats)
                  for _ in range(m.rows)])
    dims = [cfg.frontend.dims, *cfg.sl_widths]
    specs = [LayerSpec(a, b, "sigmoid") for a, b in zip(dims, dims[1:])]
    specs.append(LayerSpec(dims[-1], len(classes), "softmax"))
    net = init_network(specs, seed=cfg.seed)
    net, report = train(net, x, y, cfg.source_train)
    fp = cfg.frontend.fingerprint() + ":" + stats.fingerprint()
    return SourceModel(net, classes=classes, fingerprint=fp), report


def _apply_transform(transform_kind, model, fm):
    if transform_kind == "none" or model is None:
        return fm
    if transform_kind == "dct":
        return dct_apply(model, fm)
    return pca_apply(model, fm)


def run_pipeline(cfg, manifest):
    """Execute every stage on one manifest (source + target entries) and
    return (EvalReport, artifact paths)."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    paths = {}
    fp = cfg.fingerprint()
    extra = {"config_fingerprint": fp, "seed": cfg.seed}

    with _stage("load-manifest"):
        source_entries = manifest.select(domain="source").entries
        target_train_entries = manifest.select(domain="target", split="train").entries
        target_eval_entries = manifest.select(domain="target", split="eval").entries
        if not target_train_entries:
            raise TooFewSamples("no target training entries")
        target_classes = sorted({e.label for e in target_train_entries})
        label_to_idx = {c: i for i, c in enumerate(target_classes)}

    with _stage("frontend"):
        source_mats = _segment_features(source_entries, cfg)
        train_mats = _segment_features(target_train_entries, cfg)
        eval_mats = _segment_features(target_eval_entries, cfg)

    with _stage("norm-stats"):
        # pooled over source and target-train frames only, never eval
        stats = fit_norm_stats(source_mats + train_mats,
                               source_tags=("source", "target_train"))
        paths["norm_stats"] = os.path.join(cfg.out_dir, "norm_stats.aecf")
        save_model(paths["norm_stats"], stats, extra)
        norm_fp = cfg.frontend.fingerprint() + ":" + stats.fingerprint()

    with _stage("normalize"):
        source_sp = _norm_and_splice(source_mats, stats, cfg)
        train_sp = _norm_and_splice(train_mats, stats, cfg)
        eval_sp = _norm_and_splice(eval_mats, stats, cfg)
        train_x = _pool(train_sp)
        train_y = np.array([label_to_idx[e.label]
                            for e, m in zip(target_train_entries, train_sp)
                            for _ in range(m.rows)])

    if cfg.variant in ("A", "C"):
        with _stage("train-source"):
            if not source_entries:
                raise TooFewSamples("variants A/C require source-domain entries")
            source_classes = sorted({e.label for e in source_entries})
            source_labels = [e.label for e in source_entries]
            source_model, _ = _train_source_network(
                cfg, source_sp, source_labels, source_classes, stats)
            paths["source_model"] = os.path.join(cfg.out_dir, "source_model.aecf")
            save_model(paths["source_model"], source_model, extra)
        with _stage("surgery"):
            if source_model.fingerprint != norm_fp:
                raise FingerprintMismatch("source model was trained with "
                                          "different frontend/normalization")
            trunk = strip_output(source_model.network)
            composite = append_adaptation(trunk, cfg.tl1_dim, cfg.tl2_dim,
                                          len(target_classes), seed=cfg.seed)
        with _stage("adapt"):
            composite, _ = adapt(composite, train_x, train_y, cfg.target_train)
    else:  # variant B: the same stack trained on target data only
        with _stage("train-target-only"):
            logger.info("variant B: skipping source training, "
                        "training all five layers on target data")
            dims = [cfg.frontend.dims, *cfg.sl_widths, cfg.tl1_dim, cfg.tl2_dim]
            specs = [LayerSpec(a, b, "sigmoid") for a, b in zip(dims, dims[1:])]
            specs.append(LayerSpec(dims[-1], len(target_classes), "softmax"))
            composite = init_network(specs, seed=cfg.seed)
            composite, _ = train(composite, train_x, train_y, cfg.target_train)

    with _stage("build-filter"):
        paths["composite"] = os.path.join(cfg.out_dir, "composite.aecf")
        save_model(paths["composite"], composite, extra)
        filt = build_filter(composite, cfg.variant, fingerprint=norm_fp)
        paths["filter"] = os.path.join(cfg.out_dir, "filter.aecf")
        save_model(paths["filter"], filt, extra)

    with _stage("extract"):
        for fm in train_sp + eval_sp:
            if fm.norm_fingerprint != stats.fingerprint():
                raise FingerprintMismatch("features were normalized with "
                                          "different statistics")
        train_feats = [extract(filt, fm) for fm in train_sp]
        eval_feats = [extract(filt, fm) for fm in eval_sp]

    with _stage("fit-transform"):
        transform_model = None
        if cfg.transform == "dct":
            transform_model = DctSpec(n_points=filt.tap_dim,
                                      n_keep=cfg.transform_dim)
        elif cfg.transform == "pca":
            assert all(m.split == "train" for m in train_feats)
            pooled = FeatureMatrix(_pool(train_feats), mode="filter_tap")
            transform_model = pca_fit(pooled, out_dim=cfg.transform_dim)
        if transform_model is not None:
            paths["transform"] = os.path.join(cfg.out_dir, "transform.aecf")
            save_model(paths["transform"], transform_model, extra)
        train_red = [_apply_transform(cfg.transform, transform_model, m)
                     for m in train_feats]
        eval_red = [_apply_transform(cfg.transform, transform_model, m)
                    for m in eval_feats]

    with _stage("fit-classifier"):
        assert all(m.split == "train" for m in train_red)
        clf, score_kind = _fit_backend(cfg, train_red,
                                       [e.label for e in target_train_entries],
                                       label_to_idx)
        paths["classifier"] = os.path.join(cfg.out_dir, "classifier.aecf")
        save_model(paths["classifier"], clf, extra)

    with _stage("evaluate"):
        report = _evaluate(cfg, clf, score_kind, eval_red,
                           [e.label for e in target_eval_entries],
                           [e.condition for e in target_eval_entries],
                           target_classes, fp)
        paths["report_json"] = os.path.join(cfg.out_dir, "report.json")
        with open(paths["report_json"], "w", encoding="utf-8") as f:
            f.write(report.to_json())
        paths["report_txt"] = os.path.join(cfg.out_dir, "report.txt")
        with open(paths["report_txt"], "w", encoding="utf-8") as f:
            f.write(render_report(report) + "\n")
    return report, paths


def _fit_backend(cfg, train_red, seg_labels, label_to_idx):
    x = _pool(train_red)
    y = np.array([label_to_idx[l] for l, m in zip(seg_labels, train_red)
                  for _ in range(m.rows)])
    if cfg.classifier == "gmm":
        per_class = {label: x[y == idx]
                     for label, idx in label_to_idx.items()}
        model = gmm_fit(per_class, k=cfg.gmm_k, seed=cfg.seed)
        return model, "log_lik"
    if cfg.classifier == "svm":
        step = max(1, cfg.svm_frame_step)
        gamma = cfg.svm_gamma if cfg.svm_gamma is not None else 1.0 / x.shape[1]
        model = svm_fit(x[::step], y[::step], c=cfg.svm_c, gamma=gamma,
                        seed=cfg.seed)
        return model, "decision_value"
    model, _ = dnn_classifier_fit(x, y, cfg.target_train, hidden=cfg.dnn_hidden)
    return model, "softmax"


def _score_frames(clf, kind, values):
    if kind == "log_lik":
        return gmm_score_matrix(clf, values)
    if kind == "decision_value":
        return svm_score_matrix(clf, values)
    return dnn_score_matrix(clf, values)


def _evaluate(cfg, clf, score_kind, eval_red, seg_labels, seg_conditions,
              classes, fp):
    conditions = sorted(set(seg_conditions)) or ["clean"]
    if score_kind == "log_lik":
        class_order = clf.classes
    elif score_kind == "decision_value":
        # svm classes are the integer label indices in sorted order
        class_order = [classes[i] for i in clf.classes]
    else:
        class_order = classes

    per_cc = {c: {cls: [0, 0] for cls in classes} for c in conditions}
    confusion = {c: [[0] * len(classes) for _ in classes] for c in conditions}
    for label, condition, fm in zip(seg_labels, seg_conditions, eval_red):
        scores = _score_frames(clf, score_kind, fm.values)
        decision = classify_segment(scores, score_kind,
                                    log_domain=cfg.accumulate_log_domain)
        pred_label = class_order[decision.winner]
        stats = per_cc[condition][label]
        stats[1] += 1
        if pred_label == label:
            stats[0] += 1
        confusion[condition][classes.index(label)][classes.index(pred_label)] += 1
    return EvalReport(conditions=conditions, classes=list(classes),
                      per_condition_class=per_cc, confusion=confusion,
                      config_fingerprint=fp, variant=cfg.variant)


def cross_validate(items, labels, grid, eval_fn, k=5, seed=0):
    """Stratified seeded k-fold selection over a hyperparameter grid.

    items: per-segment feature arrays (or any objects eval_fn understands).
    eval_fn(params, train_items, train_labels, val_items, val_labels)
    returns an accuracy in [0, 1]. Picks the grid point with the best mean
    fold accuracy; ties go to the first point in grid order. Returns
    (best_params, fold_table) where fold_table[i] is the list of fold
    accuracies for grid point i.
    """
    labels = np.asarray(labels)
    n = len(items)
    if n != len(labels):
        raise TooFewSamples("items/labels length mismatch")
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if len(idx) < k:
            raise TooFewSamples(f"class {c} has {len(idx)} segments, need >= {k}")
        rng.shuffle(idx)
        for j, i in enumerate(idx):
            folds[j % k].append(int(i))
    folds = [sorted(f) for f in folds]

    fold_table = []
    means = []
    for params in grid:
        accs = []
        for f in folds:
            val = set(f)
            tr = [i for i in range(n) if i not in val]
            accs.append(eval_fn(params,
                                [items[i] for i in tr], labels[tr],
                                [items[i] for i in f], labels[list(f)]))
        fold_table.append(accs)
        means.append(float(np.mean(accs)))
    best = int(np.argmax(means))
    return grid[best], fold_table


def svm_cv_eval_fn(c_and_gamma_key=("c", "gamma"), seed=0, frame_step=1):
    """eval_fn for cross_validate: fits one-vs-rest SVMs on the frames of
    the training segments and scores segment accuracy on the rest."""

    def fn(params, train_items, train_labels, val_items, val_labels):
        x = np.vstack([m[::frame_step] for m in train_items])
        y = np.concatenate([[l] * len(m[::frame_step])
                            for m, l in zip(train_items, train_labels)])
        model = svm_fit(x, y, c=params[c_and_gamma_key[0]],
                        gamma=params[c_and_gamma_key[1]], seed=seed)
        correct = 0
        for m, l in zip(val_items, val_labels):
            scores = svm_score_matrix(model, m)
            pred = model.classes[classify_segment(scores, "decision_value").winner]
            correct += int(pred == l)
        return correct / len(val_items)

    return fn


def default_svm_grid(feature_dim):
    """C in {1, 10, 100} x gamma in {0.1, 1, 10}/dim."""
    return [{"c": c, "gamma": g / feature_dim}
            for c in (1.0, 10.0, 100.0) for g in (0.1, 1.0, 10.0)]
