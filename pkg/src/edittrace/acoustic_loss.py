"""Centroid-based acoustic consistency loss.

Frames of genuine speech are pulled toward their feature centroid (cohesion);
for edited speech, the most deviant frames are pushed beyond a cosine-distance
margin (dispersion). The loss value comes with an exact analytic gradient that
treats the centroid as a function of the frames (full chain rule), plus a
finite-difference checker and a small gradient-descent demonstration.

Definitions, for frames f_1..f_L in R^d:

    c    = (1/L) sum_i f_i
    d_i  = 1 - <f_i, c> / (max(|f_i|, eps) * max(|c|, eps))

    bona fide:  value = (1/L) sum_i d_i + max_i d_i
    edited:     value = (1/k)  sum_{i in topk} relu(margin - d_i),
                k = max(1, ceil(topk_fraction * L))

Non-smooth points use fixed one-sided conventions: the argmax (ties to the
lower index) receives the max term's gradient, relu'(0) = 0, and top-k
membership is frozen at the forward pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np


class SpeechLabel(str, Enum):
    BONA_FIDE = "bonafide"
    EDITED = "edited"


class UnstableSelectionError(Exception):
    """Finite differencing could not keep argmax / top-k membership fixed."""


@dataclass(frozen=True)
class LossConfig:
    margin: float = 0.9
    topk_fraction: float = 0.1
    lam: float = 0.5  # weight of the audio term in the total objective
    epsilon: float = 1e-8

    def __post_init__(self) -> None:
        if not 0.0 < self.margin <= 2.0:
            raise ValueError("margin must lie in (0, 2]")
        if not 0.0 < self.topk_fraction <= 1.0:
            raise ValueError("topk_fraction must lie in (0, 1]")
        if self.lam < 0.0:
            raise ValueError("lam must be >= 0")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")


@dataclass
class FeatureSequence:
    """An L x d frame-feature matrix with its bona fide / edited label."""

    values: np.ndarray
    label: SpeechLabel = SpeechLabel.BONA_FIDE

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] < 1 or self.values.shape[1] < 1:
            raise ValueError(f"values must be a non-empty L x d matrix, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature values must be finite")


@dataclass
class LossResult:
    value: float
    gradient: np.ndarray
    distances: np.ndarray
    topk_indices: tuple[int, ...] = field(default_factory=tuple)


class DescentPoint(NamedTuple):
    step: int
    value: float
    mean_distance: float
    topk_mean_distance: float


def topk_size(n_frames: int, topk_fraction: float) -> int:
    return max(1, math.ceil(topk_fraction * n_frames))


def centroid(f: FeatureSequence) -> np.ndarray:
    """Arithmetic mean of the frame features."""
    return f.values.mean(axis=0)


def _distances(values: np.ndarray, epsilon: float):
    """Cosine distances of each frame to the centroid, plus reusable parts."""
    n_frames = values.shape[0]
    c = values.mean(axis=0)
    norms = np.linalg.norm(values, axis=1)
    r = np.maximum(norms, epsilon)
    cnorm = float(np.linalg.norm(c))
    rho = max(cnorm, epsilon)
    sim = (values @ c) / (r * rho)
    dist = 1.0 - sim
    return dist, sim, c, norms, r, cnorm, rho, n_frames


def frame_distances(f: FeatureSequence, epsilon: float = 1e-8) -> np.ndarray:
    """d_i = 1 - cos(f_i, centroid), with eps-regularized norms."""
    return _distances(f.values, epsilon)[0]


def _selection(dist: np.ndarray, label: SpeechLabel, cfg: LossConfig):
    """Forward-pass selection state: (value, weights dV/dd, signature)."""
    n_frames = dist.shape[0]
    if label is SpeechLabel.BONA_FIDE:
        m = int(np.argmax(dist))  # ties resolve to the lower index
        value = float(dist.mean() + dist[m])
        u = np.full(n_frames, 1.0 / n_frames)
        u[m] += 1.0
        return value, u, (), ("b", m)
    k = topk_size(n_frames, cfg.topk_fraction)
    order = np.argsort(-dist, kind="stable")  # stable: ties to the lower index
    topk = tuple(sorted(int(i) for i in order[:k]))
    slack = cfg.margin - dist[list(topk)]
    value = float(np.maximum(slack, 0.0).sum() / k)
    u = np.zeros(n_frames)
    active = tuple(i for i, s in zip(topk, slack) if s > 0.0)  # relu'(0) = 0
    for i in active:
        u[i] = -1.0 / k
    return value, u, topk, ("e", topk, active)


def _loss_state(values: np.ndarray, label: SpeechLabel, cfg: LossConfig):
    dist, sim, c, norms, r, cnorm, rho, n_frames = _distances(values, cfg.epsilon)
    value, u, topk, sig = _selection(dist, label, cfg)

    # With u_i = dV/dd_i frozen at the forward pass, grad_j = -sum_i u_i ds_i/df_j.
    # ds_i/df_j splits into a delta_ij part and a part every j shares via the
    # centroid (dc/df_j = I/L):
    #   ds_i/df_j = delta_ij [c/(r_i rho) - s_i f_i/|f_i|^2]
    #             + (1/L) [f_i/(r_i rho)] - (1/L) s_i c/|c|^2
    # where the |.|^2 terms vanish when the eps clamp binds.
    frame_dir = np.where(norms[:, None] >= cfg.epsilon, values / np.maximum(norms, cfg.epsilon)[:, None] ** 2, 0.0)
    per_frame = u[:, None] * (c[None, :] / (r * rho)[:, None] - sim[:, None] * frame_dir)
    centroid_dir = c / cnorm**2 if cnorm >= cfg.epsilon else np.zeros_like(c)
    shared = (u[:, None] * values / r[:, None]).sum(axis=0) / (n_frames * rho)
    shared -= float(np.dot(u, sim)) / n_frames * centroid_dir
    gradient = -(per_frame + shared[None, :])
    return value, gradient, dist, topk, sig


def _value_and_signature(values: np.ndarray, label: SpeechLabel, cfg: LossConfig):
    dist = _distances(values, cfg.epsilon)[0]
    value, _u, _topk, sig = _selection(dist, label, cfg)
    return value, sig


def _branch_value(values: np.ndarray, cfg: LossConfig, sig) -> float:
    """Loss of the branch frozen at signature ``sig`` (smooth by construction)."""
    dist = _distances(values, cfg.epsilon)[0]
    if sig[0] == "b":
        return float(dist.mean() + dist[sig[1]])
    _, topk, active = sig
    k = topk_size(dist.shape[0], cfg.topk_fraction)
    return float(sum(cfg.margin - dist[i] for i in active) / k)


def _tied_selection(dist: np.ndarray, label: SpeechLabel, cfg: LossConfig, sig) -> bool:
    """True when the selection boundary is exactly tied (degenerate input)."""
    if label is SpeechLabel.BONA_FIDE:
        return int((dist == dist.max()).sum()) > 1
    _, topk, _active = sig
    ordered = np.sort(dist)[::-1]
    k = topk_size(dist.shape[0], cfg.topk_fraction)
    if k < dist.shape[0] and ordered[k - 1] == ordered[k]:
        return True
    return any(cfg.margin - dist[i] == 0.0 for i in topk)


def consistency_loss(f: FeatureSequence, cfg: LossConfig = LossConfig()) -> LossResult:
    """Loss value, exact analytic gradient, distances, and the frozen top-k set.

    The top-k set is empty for bona fide inputs; for edited inputs it holds the
    k most deviant frame indices (ties broken toward the lower index).
    """
    value, gradient, dist, topk, _sig = _loss_state(f.values, f.label, cfg)
    return LossResult(value=value, gradient=gradient, distances=dist, topk_indices=topk)


def total_loss(ce_value: float, audio: LossResult, cfg: LossConfig = LossConfig()) -> float:
    """Overall objective: externally supplied cross-entropy plus the weighted audio term."""
    if ce_value < 0:
        raise ValueError("ce_value must be >= 0")
    return ce_value + cfg.lam * audio.value


def gradient_check(f: FeatureSequence, cfg: LossConfig = LossConfig(), h: float = 1e-5) -> float:
    """Max relative error between the analytic gradient and central differences.

    Every coordinate is perturbed by +-h; if any perturbation flips the argmax,
    top-k membership, or relu activity, the sweep restarts with h/10 (three
    retries). Inputs whose selection boundary is exactly tied (a plateau, such
    as all-identical frames) flip under any perturbation; for those the frozen
    branch is differenced instead, since that is the function the subgradient
    convention differentiates. Anything else that cannot be stabilized raises
    UnstableSelectionError. The relative error for a coordinate is
    |g_analytic - g_fd| / max(|g_fd|, 1e-8).
    """
    values = f.values
    _value, gradient, dist, _topk, sig0 = _loss_state(values, f.label, cfg)

    step = h
    for _attempt in range(4):
        max_rel = 0.0
        stable = True
        work = values.copy()
        for idx in np.ndindex(values.shape):
            orig = work[idx]
            work[idx] = orig + step
            v_plus, sig_plus = _value_and_signature(work, f.label, cfg)
            work[idx] = orig - step
            v_minus, sig_minus = _value_and_signature(work, f.label, cfg)
            work[idx] = orig
            if sig_plus != sig0 or sig_minus != sig0:
                stable = False
                break
            g_fd = (v_plus - v_minus) / (2.0 * step)
            rel = abs(gradient[idx] - g_fd) / max(abs(g_fd), 1e-8)
            if rel > max_rel:
                max_rel = rel
        if stable:
            return max_rel
        step /= 10.0

    if _tied_selection(dist, f.label, cfg, sig0):
        # An exact tie at the selection boundary (e.g. all frames identical)
        # flips membership under any perturbation, but the subgradient
        # convention defines the derivative of the frozen branch; difference
        # that branch instead.
        max_rel = 0.0
        work = values.copy()
        for idx in np.ndindex(values.shape):
            orig = work[idx]
            work[idx] = orig + h
            v_plus = _branch_value(work, cfg, sig0)
            work[idx] = orig - h
            v_minus = _branch_value(work, cfg, sig0)
            work[idx] = orig
            g_fd = (v_plus - v_minus) / (2.0 * h)
            rel = abs(gradient[idx] - g_fd) / max(abs(g_fd), 1e-8)
            if rel > max_rel:
                max_rel = rel
        return max_rel
    raise UnstableSelectionError(
        f"argmax/top-k membership unstable down to perturbation {step * 10}"
    )


def descent_demo(
    f: FeatureSequence,
    cfg: LossConfig = LossConfig(),
    steps: int = 200,
    step_size: float = 0.1,
) -> list[DescentPoint]:
    """Plain gradient descent on the loss, recording the shaping behavior.

    Returns steps+1 trajectory points (index 0 is the initial state). Each
    point carries the loss value, the mean centroid distance, and the mean
    distance over the k most deviant frames. Minimizing shrinks distances for
    bona fide input and pushes top-k distances past the margin for edited
    input.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if step_size <= 0:
        raise ValueError("step_size must be positive")

    k = topk_size(f.values.shape[0], cfg.topk_fraction)
    values = f.values.copy()
    trajectory: list[DescentPoint] = []

    def record(step: int, value: float, dist: np.ndarray) -> None:
        top = np.sort(dist)[-k:]
        trajectory.append(DescentPoint(step, value, float(dist.mean()), float(top.mean())))

    value, gradient, dist, _topk, _sig = _loss_state(values, f.label, cfg)
    record(0, value, dist)
    for step in range(1, steps + 1):
        values -= step_size * gradient
        value, gradient, dist, _topk, _sig = _loss_state(values, f.label, cfg)
        record(step, value, dist)
    return trajectory


def read_feature_matrix(path) -> np.ndarray:
    """Read the plain-text feature format: header ``L d`` then L rows of d reals."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: header must be 'L d'")
        n_frames, dim = int(header[0]), int(header[1])
        rows = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != dim:
                raise ValueError(f"{path}:{lineno}: expected {dim} values, got {len(parts)}")
            rows.append([float(x) for x in parts])
    if len(rows) != n_frames:
        raise ValueError(f"{path}: header promised {n_frames} rows, found {len(rows)}")
    return np.array(rows, dtype=np.float64)


def write_feature_matrix(path, values: np.ndarray) -> None:
    values = np.asarray(values, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{values.shape[0]} {values.shape[1]}\n")
        for row in values:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")
