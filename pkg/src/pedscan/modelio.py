"""Versioned model files: structured text, exact numeric round-trips.

Models are stored as JSON with sorted keys and a fixed indent, so saving
the same model twice yields byte-identical files and floats survive the
round trip exactly (shortest-repr decimal rendering).
"""

from __future__ import annotations

import json

import numpy as np

from .classify import WeakLearner
from .errors import InputFormatError, ModelVersionError
from .estimators import HogSvmDetector, LbpAdaBoostDetector
from .hog import HogConfig
from .lbp import LbpFeature

FORMAT_VERSION = 1

MODEL_HOG_SVM = "hog_svm"
MODEL_LBP_ADABOOST = "lbp_adaboost"


def _model_dict(model, training_meta: dict | None) -> dict:
    meta = dict(training_meta or {})
    if isinstance(model, HogSvmDetector):
        cfg = model._cfg()
        meta.setdefault("lam", model.lam)
        meta.setdefault("epochs", model.epochs)
        meta.setdefault("seed", model.seed)
        return {
            "format_version": FORMAT_VERSION,
            "model_type": MODEL_HOG_SVM,
            "config": {
                "window_w": cfg.window_w, "window_h": cfg.window_h,
                "cell": cfg.cell, "block": cfg.block,
                "block_stride": cfg.block_stride, "n_bins": cfg.n_bins,
            },
            "params": {
                "weights": [float(v) for v in model.coef_],
                "bias": float(model.intercept_),
                "classes": [int(c) for c in model.classes_],
            },
            "training_meta": meta,
        }
    if isinstance(model, LbpAdaBoostDetector):
        meta.setdefault("n_rounds", model.n_rounds)
        return {
            "format_version": FORMAT_VERSION,
            "model_type": MODEL_LBP_ADABOOST,
            "config": {
                "window_w": model.window_w, "window_h": model.window_h,
                "scales": [int(s) for s in model.scales],
            },
            "params": {
                "decision_threshold": float(model.decision_threshold_),
                "rounds": [
                    {
                        "feature": {"x": wl.feature.x, "y": wl.feature.y,
                                    "scale": wl.feature.scale},
                        "votes": [int(v) for v in wl.votes],
                        "alpha": float(alpha),
                    }
                    for wl, alpha in model.rounds_
                ],
            },
            "training_meta": meta,
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def dumps_model(model, training_meta: dict | None = None) -> str:
    return json.dumps(_model_dict(model, training_meta), indent=1, sort_keys=True) + "\n"


def save_model(model, path, training_meta: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_model(model, training_meta))


def loads_model(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"model file is not valid JSON: {exc}") from exc
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelVersionError(f"unsupported model format_version {version!r}; "
                                f"this build reads version {FORMAT_VERSION}")
    kind = doc.get("model_type")
    cfg = doc.get("config", {})
    params = doc.get("params", {})
    meta = doc.get("training_meta", {})
    if kind == MODEL_HOG_SVM:
        model = HogSvmDetector(
            lam=meta.get("lam", 1e-3), epochs=meta.get("epochs", 30),
            seed=meta.get("seed", 0), hog_config=HogConfig(**cfg))
        model.coef_ = np.asarray(params["weights"], dtype=np.float64)
        model.intercept_ = float(params["bias"])
        model.classes_ = np.asarray(params.get("classes", [0, 1]))
        if model.coef_.shape[0] != model._cfg().descriptor_length:
            raise InputFormatError("weight vector length does not match the "
                                   "descriptor configuration")
        return model
    if kind == MODEL_LBP_ADABOOST:
        model = LbpAdaBoostDetector(
            n_rounds=meta.get("n_rounds", 64),
            scales=tuple(cfg.get("scales", (2,))),
            window_w=cfg.get("window_w", 32), window_h=cfg.get("window_h", 64))
        rounds = []
        for rec in params["rounds"]:
            feat = LbpFeature(**rec["feature"])
            votes = np.asarray(rec["votes"], dtype=np.int8)
            rounds.append((WeakLearner(feat, votes), float(rec["alpha"])))
        model.rounds_ = rounds
        model.train_errors_ = []
        model.classes_ = np.asarray([0, 1])
        model.decision_threshold_ = float(params.get("decision_threshold", 0.0))
        return model
    raise InputFormatError(f"unknown model_type {kind!r}")


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return loads_model(fh.read())
