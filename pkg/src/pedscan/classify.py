"""Linear SVM and AdaBoost training, scoring, and hard-negative mining.

Both trainers are deterministic given (data, config, seed).  The SVM is
trained in the primal with per-sample subgradient steps on the hinge loss
plus (lambda/2)||w||^2, learning rate 1/(lambda * t).  AdaBoost is the
discrete variant over lookup-table weak learners: each candidate feature's
vote table maps an 8-bit batch-LBP code to +1/-1 by weighted majority.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .images import Rect, as_gray, resize
from .lbp import LbpFeature, codes_for_features


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 1e-3             # SVM regularization
    epochs: int = 30
    n_rounds: int = 64            # AdaBoost rounds
    bootstrap_rounds: int = 2
    negatives_per_round: int = 0  # 0 = same as the initial negative count
    seed: int = 0

    def __post_init__(self) -> None:
        if self.lam <= 0:
            raise ValueError("lam must be > 0")
        if self.epochs < 1 or self.n_rounds < 1:
            raise ValueError("epochs and n_rounds must be >= 1")
        if self.bootstrap_rounds < 0:
            raise ValueError("bootstrap_rounds must be >= 0")


def svm_train(pos: np.ndarray, neg: np.ndarray, lam: float = 1e-3,
              epochs: int = 30, seed: int = 0) -> tuple[np.ndarray, float]:
    """Train w, b on positive/negative descriptor rows.

    Samples are shuffled each epoch by the seeded generator.  The bias is
    trained as the weight of a constant feature, which keeps the 1/(lam*t)
    schedule stable; it therefore shares the regularizer.  Returns
    (weights, bias).
    """
    pos = np.asarray(pos, dtype=np.float64)
    neg = np.asarray(neg, dtype=np.float64)
    if pos.ndim != 2 or neg.ndim != 2 or pos.shape[0] == 0 or neg.shape[0] == 0:
        raise ValueError("need at least one sample per class")
    if pos.shape[1] != neg.shape[1]:
        raise ValueError("positive/negative descriptor lengths differ")
    X = np.concatenate([pos, neg])
    if not np.isfinite(X).all():
        raise ValueError("non-finite descriptor entries")
    y = np.concatenate([np.ones(len(pos)), -np.ones(len(neg))])
    return _pegasos(X, y, lam, epochs, seed)


def _pegasos(X: np.ndarray, y: np.ndarray, lam: float, epochs: int,
             seed: int) -> tuple[np.ndarray, float]:
    n, d = X.shape
    Xa = np.concatenate([X, np.ones((n, 1))], axis=1)
    rng = np.random.default_rng(seed)
    v = np.zeros(d + 1)
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            margin = y[i] * (Xa[i] @ v)
            v *= 1.0 - eta * lam
            if margin < 1.0:
                v += (eta * y[i]) * Xa[i]
    return v[:-1], float(v[-1])


def svm_score(weights: np.ndarray, bias: float, x: np.ndarray):
    """w . x + b for a single descriptor or a stack of rows."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != weights.shape[0]:
        raise ValueError(f"descriptor length {x.shape[-1]} != weights length "
                         f"{weights.shape[0]}")
    out = x @ weights + bias
    return float(out) if out.ndim == 0 else out


def svm_objective(weights: np.ndarray, bias: float, X: np.ndarray,
                  y: np.ndarray, lam: float) -> float:
    """(lambda/2)||w||^2 + mean hinge loss; used by invariant checks."""
    margins = y * (X @ weights + bias)
    hinge = np.maximum(0.0, 1.0 - margins)
    return 0.5 * lam * float(weights @ weights) + float(hinge.mean())


@dataclass(frozen=True)
class WeakLearner:
    """One lookup-table stump: code -> vote in {+1, -1} at a fixed feature."""

    feature: LbpFeature
    votes: np.ndarray = field(repr=False)  # int8[256]

    def __post_init__(self) -> None:
        if self.votes.shape != (256,):
            raise ValueError("vote table must have exactly 256 entries")


def adaboost_train(codes: np.ndarray, y: np.ndarray, features: list[LbpFeature],
                   n_rounds: int = 64, weight_sums: list | None = None
                   ) -> tuple[list[tuple[WeakLearner, float]], list[float]]:
    """Discrete AdaBoost over the candidate feature pool.

    codes is (n_samples, n_features) uint8, y is +/-1.  Per round the
    feature with minimal weighted error wins (ties break to the lowest pool
    index), alpha = 0.5*ln((1-eps)/eps), sample weights are re-normalized
    after every round.  A zero-error round clamps eps to 1/(2N) and stops;
    eps >= 0.5 also stops.  Returns (rounds, per-round training error).
    """
    C = np.asarray(codes)
    y = np.asarray(y)
    n, nfeat = C.shape
    if n == 0 or nfeat == 0 or nfeat != len(features):
        raise ValueError("empty training set or feature pool")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ValueError("need samples from both classes")

    offs = (np.arange(nfeat, dtype=np.int64) * 256)[None, :]
    flat = C.astype(np.int64) + offs  # (n, nfeat), row i holds its bucket ids
    pos = y > 0
    neg = ~pos
    weights = np.full(n, 1.0 / n)
    strong = np.zeros(n)
    rounds: list[tuple[WeakLearner, float]] = []
    train_errors: list[float] = []

    for _ in range(n_rounds):
        wpos = np.bincount(flat[pos].ravel(), weights=np.repeat(weights[pos], nfeat),
                           minlength=nfeat * 256).reshape(nfeat, 256)
        wneg = np.bincount(flat[neg].ravel(), weights=np.repeat(weights[neg], nfeat),
                           minlength=nfeat * 256).reshape(nfeat, 256)
        eps_all = np.minimum(wpos, wneg).sum(axis=1)
        best = int(np.argmin(eps_all))
        eps = float(eps_all[best])
        if eps >= 0.5:
            if not rounds:
                raise ValueError("no weak learner beats chance; samples may be identical")
            break
        # majority vote per code; codes never seen (or exactly tied) vote -1
        votes = np.where(wpos[best] > wneg[best], 1, -1).astype(np.int8)
        eps_eff = eps if eps > 0.0 else 1.0 / (2.0 * n)
        alpha = 0.5 * np.log((1.0 - eps_eff) / eps_eff)
        h = votes[C[:, best]].astype(np.float64)
        rounds.append((WeakLearner(features[best], votes), float(alpha)))

        strong += alpha * h
        train_errors.append(float(np.mean(np.where(strong > 0, 1.0, -1.0) != y)))
        weights *= np.exp(-alpha * y * h)
        weights /= weights.sum()
        if weight_sums is not None:
            weight_sums.append(float(weights.sum()))
        if eps == 0.0:
            break
    return rounds, train_errors


def adaboost_score(rounds: list[tuple[WeakLearner, float]], window) -> float:
    """Strong-classifier score of one window via its integral-image codes."""
    win = as_gray(window)
    feats = [wl.feature for wl, _ in rounds]
    codes = codes_for_features(win, feats)
    return float(sum(alpha * float(wl.votes[codes[k]])
                     for k, (wl, alpha) in enumerate(rounds)))


def bootstrap_mine(model, negative_images, detect_cfg=None, cap: int = 1000):
    """Collect hard negatives: detector false alarms on person-free images.

    Runs the full sliding-window detector over each image, crops every
    detection scoring above the configured threshold, and returns up to
    ``cap`` patches resized to the model window, ordered by descending
    score (ties broken by image index, then y, x, level).
    """
    from .detector import DetectConfig, detect

    if cap <= 0:
        return np.zeros((0, 64, 32), dtype=np.uint8)
    if detect_cfg is None:
        detect_cfg = DetectConfig()
    hits = []
    for idx, img in enumerate(negative_images):
        src = as_gray(img)
        for det in detect(src, model, detect_cfg):
            hits.append((det.score, idx, det.rect, det.level, src))
    hits.sort(key=lambda h: (-h[0], h[1], h[2].y, h[2].x, h[3]))
    patches = []
    for _, _, rect, _, src in hits[:cap]:
        crop = src[rect.y:rect.y + rect.h, rect.x:rect.x + rect.w]
        patches.append(resize(crop, detect_cfg.window_w, detect_cfg.window_h))
    if not patches:
        return np.zeros((0, detect_cfg.window_h, detect_cfg.window_w), dtype=np.uint8)
    return np.stack(patches)
