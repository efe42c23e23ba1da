"""Pose losses with analytic gradients, plus a finite-difference gradient checker.

Every loss averages over frames (divides by T) so sequence length does not rescale
gradients. The reconstruction term is the squared Frobenius error (differentiable at
the optimum). Absolute-value and norm kinks take the zero subgradient.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .common import check_keys
from .errors import ConfigError, DataError, DegenerateBoneError, ShapeMismatchError
from .skeleton import MIN_REFERENCE_BONE, Skeleton, frame_links
from .weighting import BoneLambdas, JointWeights

EOS_CLAMP = 1e-7
KINK_MARGIN = 1e-3


@dataclass(frozen=True)
class LossValue:
    value: float
    grad: np.ndarray
    components: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class LossCoefficients:
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    eos_weight: float = 1.0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma", "eos_weight"):
            if getattr(self, name) < 0:
                raise ConfigError(f"loss coefficient {name} must be >= 0")

    @classmethod
    def from_dict(cls, data: dict) -> LossCoefficients:
        check_keys("coefficients", data, {"alpha", "beta", "gamma", "eos_weight"})
        return cls(**{k: float(v) for k, v in data.items()})

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "eos_weight": self.eos_weight,
        }


def _check_pair(pred: np.ndarray, ref: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if pred.shape != ref.shape or pred.ndim != 3 or pred.shape[-1] != 3:
        raise ShapeMismatchError(f"pred {pred.shape} and ref {ref.shape} must both be T x N x 3")
    return pred, ref


def _reference_links(ref: np.ndarray, skeleton: Skeleton) -> tuple[np.ndarray, np.ndarray]:
    links = frame_links(ref, skeleton)
    norms = np.linalg.norm(links, axis=-1)
    if np.any(norms < MIN_REFERENCE_BONE):
        t, k = np.argwhere(norms < MIN_REFERENCE_BONE)[0]
        joint = skeleton.joint_names[skeleton.bones[k]]
        raise DegenerateBoneError(f"reference bone ending at {joint!r} is degenerate at frame {t}")
    return links, norms


def _scatter_link_grad(link_grad: np.ndarray, skeleton: Skeleton, shape: tuple) -> np.ndarray:
    """Chain rule through b = p[child] - p[parent]."""
    grad = np.zeros(shape)
    grad[:, skeleton.bones, :] += link_grad
    np.add.at(grad, (slice(None), skeleton.bone_parents, slice(None)), -link_grad)
    return grad


def weighted_mse_loss(pred: np.ndarray, ref: np.ndarray, weights: JointWeights) -> LossValue:
    pred, ref = _check_pair(pred, ref)
    w = np.asarray(weights.w, dtype=float)
    if w.shape != (pred.shape[1],):
        raise ShapeMismatchError(f"{w.shape[0]} joint weights for {pred.shape[1]} joints")
    num_frames = pred.shape[0]
    diff = pred - ref
    value = float(np.sum(w[None, :] * np.sum(diff**2, axis=-1)) / num_frames)
    grad = (2.0 / num_frames) * w[None, :, None] * diff
    return LossValue(value, grad, {"mse": value})


def bone_length_loss(
    pred: np.ndarray, ref: np.ndarray, skeleton: Skeleton, lambdas: BoneLambdas
) -> LossValue:
    pred, ref = _check_pair(pred, ref)
    lam = np.asarray(lambdas.lam, dtype=float)
    if lam.shape != (skeleton.num_bones,):
        raise ShapeMismatchError(f"{lam.shape[0]} lambdas for {skeleton.num_bones} bones")
    num_frames = pred.shape[0]
    _, ref_len = _reference_links(ref, skeleton)
    pred_links = frame_links(pred, skeleton)
    pred_len = np.linalg.norm(pred_links, axis=-1)

    value = float(np.sum(lam[None, :] * np.abs(ref_len - pred_len) / ref_len) / num_frames)
    d_len = lam[None, :] * np.sign(pred_len - ref_len) / (ref_len * num_frames)
    unit = np.divide(
        pred_links,
        pred_len[..., None],
        out=np.zeros_like(pred_links),
        where=pred_len[..., None] > 0,
    )
    grad = _scatter_link_grad(d_len[..., None] * unit, skeleton, pred.shape)
    return LossValue(value, grad, {"bone": value})


def bone_pose_loss(pred: np.ndarray, ref: np.ndarray, skeleton: Skeleton) -> LossValue:
    pred, ref = _check_pair(pred, ref)
    num_frames = pred.shape[0]
    ref_links, ref_len = _reference_links(ref, skeleton)
    diff = frame_links(pred, skeleton) - ref_links
    dist = np.linalg.norm(diff, axis=-1)

    value = float(np.sum(dist / ref_len) / num_frames)
    scale = np.divide(
        1.0, dist * ref_len * num_frames, out=np.zeros_like(dist), where=dist > 0
    )
    grad = _scatter_link_grad(scale[..., None] * diff, skeleton, pred.shape)
    return LossValue(value, grad, {"pose": value})


def eos_classification_loss(
    p_eos: np.ndarray, target: np.ndarray, step_weights: np.ndarray | None = None
) -> LossValue:
    """Binary cross-entropy averaged over steps; ``grad`` is w.r.t. the pre-sigmoid logits.

    With ``step_weights`` the average is weighted: sum(w * bce) / sum(w). Without them
    every step weighs 1 and this is the plain mean.
    """
    p = np.asarray(p_eos, dtype=float)
    target = np.asarray(target, dtype=float)
    if p.shape != target.shape or p.ndim != 1:
        raise ShapeMismatchError(f"{p.shape} probabilities vs {target.shape} targets")
    if step_weights is None:
        step_weights = np.ones_like(p)
    step_weights = np.asarray(step_weights, dtype=float)
    if step_weights.shape != p.shape:
        raise ShapeMismatchError(f"{step_weights.shape} step weights vs {p.shape} probabilities")
    if np.any(step_weights < 0):
        raise DataError("EOS step weights must be >= 0")
    total = float(step_weights.sum())
    if total == 0.0:
        return LossValue(0.0, np.zeros_like(p), {"eos": 0.0})
    clamped = np.clip(p, EOS_CLAMP, 1.0 - EOS_CLAMP)
    bce = -(target * np.log(clamped) + (1.0 - target) * np.log1p(-clamped))
    value = float(np.dot(step_weights, bce) / total)
    return LossValue(value, step_weights * (p - target) / total, {"eos": value})


def eos_loss_from_logits(
    logits: np.ndarray, target: np.ndarray, step_weights: np.ndarray | None = None
) -> LossValue:
    return eos_classification_loss(expit(np.asarray(logits, dtype=float)), target, step_weights)


def counter_regression_loss(counter: np.ndarray, target: np.ndarray) -> LossValue:
    """Mean squared error of the progress counter against t/T."""
    counter = np.asarray(counter, dtype=float)
    target = np.asarray(target, dtype=float)
    if counter.shape != target.shape or counter.ndim != 1:
        raise ShapeMismatchError(f"{counter.shape} counters vs {target.shape} targets")
    steps = max(counter.shape[0], 1)
    diff = counter - target
    value = float(np.sum(diff**2) / steps)
    return LossValue(value, 2.0 * diff / steps, {"eos": value})


def composite_loss(
    pred: np.ndarray,
    ref: np.ndarray,
    skeleton: Skeleton,
    weights: JointWeights,
    lambdas: BoneLambdas,
    coeffs: LossCoefficients,
) -> LossValue:
    """alpha * MSE + beta * bone length + gamma * bone pose.

    The EOS term needs the termination head's outputs, so the trainer adds
    ``eos_weight`` times it separately. Terms with a zero coefficient are skipped.
    """
    pred, ref = _check_pair(pred, ref)
    value = 0.0
    grad = np.zeros_like(pred)
    components = {"mse": 0.0, "bone": 0.0, "pose": 0.0}
    terms = (
        (coeffs.alpha, lambda: weighted_mse_loss(pred, ref, weights)),
        (coeffs.beta, lambda: bone_length_loss(pred, ref, skeleton, lambdas)),
        (coeffs.gamma, lambda: bone_pose_loss(pred, ref, skeleton)),
    )
    for coeff, term in terms:
        if coeff == 0.0:
            continue
        part = term()
        value += coeff * part.value
        grad += coeff * part.grad
        components.update(part.components)
    return LossValue(value, grad, components)


def gradient_check(
    loss_fn: Callable[[np.ndarray], LossValue], instance: np.ndarray, step: float = 1e-6
) -> float:
    """Max over coordinates of |analytic - numeric| / max(1, |numeric|).

    Numeric gradients use central differences with step ``step``.
    """
    x = np.array(instance, dtype=float)
    analytic = np.asarray(loss_fn(x).grad, dtype=float).ravel()
    flat = x.ravel()
    worst = 0.0
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + step
        upper = loss_fn(x).value
        flat[i] = saved - step
        lower = loss_fn(x).value
        flat[i] = saved
        numeric = (upper - lower) / (2.0 * step)
        worst = max(worst, abs(analytic[i] - numeric) / max(1.0, abs(numeric)))
    return worst


def sample_nonkink_instance(
    rng: np.random.Generator,
    skeleton: Skeleton,
    num_frames: int,
    margin: float = KINK_MARGIN,
    noise: float = 0.3,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw (pred, ref) with every predicted bone clear of the length/norm kinks."""
    while True:
        ref = rng.normal(size=(num_frames, skeleton.num_joints, 3))
        pred = ref + noise * rng.normal(size=ref.shape)
        ref_len = np.linalg.norm(frame_links(ref, skeleton), axis=-1)
        pred_links = frame_links(pred, skeleton)
        pred_len = np.linalg.norm(pred_links, axis=-1)
        dist = np.linalg.norm(pred_links - frame_links(ref, skeleton), axis=-1)
        if (
            ref_len.min() >= margin
            and pred_len.min() >= margin
            and np.abs(pred_len - ref_len).min() >= margin
            and dist.min() >= margin
        ):
            return pred, ref
