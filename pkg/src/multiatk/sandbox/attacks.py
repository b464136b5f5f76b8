"""Graded attack families: norm-bounded PGD and scalar semantic transforms.

Norm families (``linf``, ``l2``, ``l1``) perturb pixels directly under an
epsilon ball; semantic families (``brightness``, ``contrast``, ``translate``)
optimize a low-dimensional transform parameter bounded by epsilon.  Every
attack keeps the best-loss feasible iterate seen, reports whether any iterate
misclassified, and hands back a warm-start payload so an evaluation at a
larger epsilon can resume from the strongest perturbation found so far.

All attacks accept a single flat image or a batch (N, d) and are
deterministic for ``restarts=1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

from ..threat import AttackFamily, ConfigurationError
from .model import SandboxModel, loss_and_pred, loss_input_grad_pred

PGD_FAMILIES = ("linf", "l2", "l1")
SEMANTIC_FAMILIES = ("brightness", "contrast", "translate")

#: Candidate count of the dense parameter sweep run by semantic attacks.
SWEEP_POINTS = 33

_CONTRAST_MID = 0.5
_GRAD_EPS = 1e-12


@dataclass(frozen=True)
class AttackBudget:
    """Optimizer settings for one attack instance."""

    family: str
    epsilon: float
    iterations: int = 20
    step_size: Optional[float] = None  # defaults to epsilon / 18
    restarts: int = 1
    shape: Optional[tuple[int, int]] = None  # (H, W); square inferred if None

    def __post_init__(self):
        if self.family not in PGD_FAMILIES + SEMANTIC_FAMILIES:
            raise ConfigurationError(f"no executable attack for family {self.family!r}")
        if self.epsilon < 0 or not math.isfinite(self.epsilon):
            raise ConfigurationError("epsilon must be finite and >= 0")
        if self.iterations < 1:
            raise ConfigurationError("iterations must be >= 1")
        if self.restarts < 1:
            raise ConfigurationError("restarts must be >= 1")
        if self.step_size is not None and self.step_size <= 0:
            raise ConfigurationError("step_size must be > 0")

    @property
    def step(self) -> float:
        return self.step_size if self.step_size is not None else self.epsilon / 18.0

    def image_shape(self, d: int) -> tuple[int, int]:
        if self.shape is not None:
            return self.shape
        side = int(round(math.sqrt(d)))
        if side * side != d:
            raise ConfigurationError(
                f"cannot infer (H, W) from {d} pixels; set budget.shape"
            )
        return side, side


def budget_for(
    family: AttackFamily, epsilon: float, shape: Optional[tuple[int, int]] = None
) -> AttackBudget:
    """Budget for one grid instance, honoring the family's optimizer params."""
    params = dict(family.params)
    step_rule = params.get("step_rule", "eps_over_18")
    if step_rule == "eps_over_18":
        step = None
    else:
        step = float(step_rule)
    return AttackBudget(
        family=family.id,
        epsilon=float(epsilon),
        iterations=int(params.get("iterations", 20)),
        step_size=step,
        restarts=int(params.get("restarts", 1)),
        shape=shape,
    )


class AttackResult(NamedTuple):
    """Outcome of one attack run on a batch.

    ``x_adv`` is the best-loss feasible image per sample; ``success`` flags
    samples where some iterate misclassified; ``carry`` is the warm-start
    payload (pixels for norm families, transform parameters for semantic
    families); ``param`` is the chosen semantic parameter, None otherwise.
    """

    x_adv: np.ndarray
    success: np.ndarray
    carry: np.ndarray
    param: Optional[np.ndarray]


# ---------------------------------------------------------------------------
# Projections


def project_linf(delta: np.ndarray, eps: float) -> np.ndarray:
    return np.clip(delta, -eps, eps)


def project_l2(delta: np.ndarray, eps: float) -> np.ndarray:
    norms = np.sqrt((delta * delta).sum(axis=1, keepdims=True))
    scale = np.where(norms > eps, eps / np.maximum(norms, 1e-300), 1.0)
    return delta * scale


def project_l1(delta: np.ndarray, eps: float) -> np.ndarray:
    """Euclidean projection of each row onto the l1 ball of radius eps
    (sort-based soft thresholding)."""
    if eps == 0.0:
        return np.zeros_like(delta)
    abs_d = np.abs(delta)
    norms = abs_d.sum(axis=1)
    over = norms > eps
    if not np.any(over):
        return delta
    out = delta.copy()
    rows = np.nonzero(over)[0]
    sub = abs_d[rows]
    srt = np.sort(sub, axis=1)[:, ::-1]
    css = np.cumsum(srt, axis=1)
    ks = np.arange(1, sub.shape[1] + 1)
    cond = srt - (css - eps) / ks > 0
    rho = cond.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    tau = (css[np.arange(len(rows)), rho] - eps) / (rho + 1)
    out[rows] = np.sign(delta[rows]) * np.maximum(sub - tau[:, None], 0.0)
    return out


_PROJECT = {"linf": project_linf, "l2": project_l2, "l1": project_l1}


# ---------------------------------------------------------------------------
# Step directions


def _step_direction(family: str, grad: np.ndarray) -> np.ndarray:
    """Ascent direction scaled to unit step for the family's geometry; rows
    with zero gradient get a zero direction (no move)."""
    if family == "linf":
        return np.sign(grad)
    if family == "l2":
        norms = np.sqrt((grad * grad).sum(axis=1, keepdims=True))
        return np.where(norms > _GRAD_EPS, grad / np.maximum(norms, 1e-300), 0.0)
    if family == "l1":
        d = grad.shape[1]
        k = max(1, d // 20)
        direction = np.zeros_like(grad)
        order = np.argsort(np.abs(grad), axis=1)[:, ::-1][:, :k]
        rows = np.arange(grad.shape[0])[:, None]
        direction[rows, order] = np.sign(grad[rows, order])
        return direction
    raise ConfigurationError(f"no step rule for family {family!r}")


# ---------------------------------------------------------------------------
# Norm-bounded PGD


def _as_batch(x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None, :], True
    return x, False


class _BestTracker:
    """Per-sample running best-loss iterate and best misclassifying iterate."""

    def __init__(self, x0: np.ndarray):
        self.best_x = x0.copy()
        self.best_loss = np.full(x0.shape[0], -np.inf)
        self.adv_x = x0.copy()
        self.adv_loss = np.full(x0.shape[0], -np.inf)
        self.success = np.zeros(x0.shape[0], dtype=bool)

    def update(self, x: np.ndarray, losses: np.ndarray, preds: np.ndarray, y: np.ndarray):
        better = losses > self.best_loss
        self.best_x[better] = x[better]
        self.best_loss[better] = losses[better]
        wrong = preds != y
        adv_better = wrong & (losses > self.adv_loss)
        self.adv_x[adv_better] = x[adv_better]
        self.adv_loss[adv_better] = losses[adv_better]
        self.success |= wrong

    def carry(self) -> np.ndarray:
        """Strongest perturbation found: the misclassifying iterate where one
        exists, the best-loss iterate otherwise."""
        out = self.best_x.copy()
        out[self.success] = self.adv_x[self.success]
        return out


def _pgd_run(
    model: SandboxModel,
    x: np.ndarray,
    y: np.ndarray,
    budget: AttackBudget,
    init: np.ndarray,
    tracker: _BestTracker,
):
    project = _PROJECT[budget.family]
    eps, step = budget.epsilon, budget.step
    cur = x + project(init - x, eps)
    cur = np.clip(cur, 0.0, 1.0)
    for _ in range(budget.iterations):
        losses, grads, preds = loss_input_grad_pred(model, cur, y)
        tracker.update(cur, losses, preds, y)
        direction = _step_direction(budget.family, grads)
        cur = cur + step * direction
        cur = x + project(cur - x, eps)
        cur = np.clip(cur, 0.0, 1.0)
    losses, preds = loss_and_pred(model, cur, y)
    tracker.update(cur, losses, preds, y)


def pgd_attack(
    model: SandboxModel,
    x: np.ndarray,
    y: np.ndarray,
    budget: AttackBudget,
    rng: Optional[np.random.Generator] = None,
    x_init: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Iterated loss ascent under the family's epsilon ball, projected after
    every step and clipped to the pixel box.  Returns the best-loss iterate."""
    return pgd_attack_full(model, x, y, budget, rng=rng, x_init=x_init).x_adv


def pgd_attack_full(
    model: SandboxModel,
    x: np.ndarray,
    y: np.ndarray,
    budget: AttackBudget,
    rng: Optional[np.random.Generator] = None,
    x_init: Optional[np.ndarray] = None,
) -> AttackResult:
    if budget.family not in PGD_FAMILIES:
        raise ConfigurationError(f"pgd_attack got semantic family {budget.family!r}")
    x, squeeze = _as_batch(x)
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    if budget.epsilon == 0.0:
        _, preds = loss_and_pred(model, x, y)
        adv = x.copy()
        return AttackResult(
            adv[0] if squeeze else adv,
            preds != y,
            adv.copy(),
            None,
        )
    tracker = _BestTracker(x)
    init = x if x_init is None else np.atleast_2d(np.asarray(x_init, dtype=np.float64))
    _pgd_run(model, x, y, budget, init, tracker)
    if budget.restarts > 1:
        if rng is None:
            raise ConfigurationError("restarts > 1 needs a random generator")
        for _ in range(budget.restarts - 1):
            noise = rng.uniform(-1.0, 1.0, size=x.shape) * budget.epsilon
            _pgd_run(model, x, y, budget, x + noise, tracker)
    result = AttackResult(
        tracker.best_x[0] if squeeze else tracker.best_x,
        tracker.success,
        tracker.carry(),
        None,
    )
    return result


# ---------------------------------------------------------------------------
# Semantic transforms


def _shift_bilinear(
    images: np.ndarray, dy: np.ndarray, dx: np.ndarray, with_grads: bool = True
) -> tuple[np.ndarray, Optional[np.ndarray], Optional[np.ndarray]]:
    """Sub-pixel translation with edge clamping.

    ``images`` is (N, H, W); ``dy``/``dx`` are per-sample shifts in pixels.
    Returns the shifted batch and, when requested, the partial derivatives of
    every output pixel with respect to dy and dx.
    """
    n, h, w = images.shape
    rows = np.arange(h)[None, :] - dy[:, None]  # source row coords (n, h)
    cols = np.arange(w)[None, :] - dx[:, None]  # (n, w)
    inside_r = (rows > 0.0) & (rows < h - 1.0)
    inside_c = (cols > 0.0) & (cols < w - 1.0)
    rows = np.clip(rows, 0.0, h - 1.0)
    cols = np.clip(cols, 0.0, w - 1.0)
    r0 = rows.astype(np.intp)  # floor: values are non-negative
    c0 = cols.astype(np.intp)
    if h > 1:
        np.minimum(r0, h - 2, out=r0)
    if w > 1:
        np.minimum(c0, w - 2, out=c0)
    fr = (rows - r0)[:, :, None]
    fc = (cols - c0)[:, None, :]
    # flat gather indices for the four corners (r1 = r0+1 is always in range)
    base = np.arange(n, dtype=np.intp)[:, None, None] * (h * w)
    g00 = base + r0[:, :, None] * w + c0[:, None, :]
    dc = 1 if w > 1 else 0
    dr = w if h > 1 else 0
    rav = images.reshape(-1)
    i00 = np.take(rav, g00)
    i01 = np.take(rav, g00 + dc)
    i10 = np.take(rav, g00 + dr)
    i11 = np.take(rav, g00 + dr + dc)
    top = i00 + fc * (i01 - i00)
    bottom = i10 + fc * (i11 - i10)
    shifted = top + fr * (bottom - top)
    if not with_grads:
        return shifted, None, None
    d_rows = bottom - top  # d shifted / d source-row coordinate
    d_cols = (i01 - i00) + fr * ((i11 - i10) - (i01 - i00))
    # d rows / d dy = -1 where the source coordinate is not clamped
    d_dy = -d_rows * inside_r[:, :, None]
    d_dx = -d_cols * inside_c[:, None, :]
    return shifted, d_dy, d_dx


@lru_cache(maxsize=8192)
def _fixed_shift_plan(h: int, w: int, dy: float, dx: float):
    """Fused corner-gather indices and interpolation weights for shifting a
    whole batch by the same amount."""
    rows = np.clip(np.arange(h) - dy, 0.0, h - 1.0)
    cols = np.clip(np.arange(w) - dx, 0.0, w - 1.0)
    r0 = rows.astype(np.intp)
    c0 = cols.astype(np.intp)
    if h > 1:
        np.minimum(r0, h - 2, out=r0)
    if w > 1:
        np.minimum(c0, w - 2, out=c0)
    fr = np.repeat(rows - r0, w)
    fc = np.tile(cols - c0, h)
    dc = 1 if w > 1 else 0
    dr = w if h > 1 else 0
    g00 = (r0[:, None] * w + c0[None, :]).ravel()
    corners = np.concatenate([g00, g00 + dc, g00 + dr, g00 + dr + dc])
    for arr in (corners, fr, fc):
        arr.setflags(write=False)
    return corners, fr, fc


def _fixed_shift(x2d: np.ndarray, h: int, w: int, dy: float, dx: float) -> np.ndarray:
    """Translate every sample by the same (dy, dx) via one column gather."""
    corners, fr, fc = _fixed_shift_plan(h, w, float(dy), float(dx))
    d = h * w
    v = np.take(x2d, corners, axis=1)
    i00, i01, i10, i11 = v[:, :d], v[:, d : 2 * d], v[:, 2 * d : 3 * d], v[:, 3 * d :]
    top = i00 + fc * (i01 - i00)
    bottom = i10 + fc * (i11 - i10)
    return top + fr * (bottom - top)


def _transform_stack(
    family: str, x: np.ndarray, stack: np.ndarray, shape: tuple[int, int]
) -> np.ndarray:
    """Apply a (S, n, k) stack of candidate parameters to one batch."""
    s, n, _ = stack.shape
    if family == "brightness":
        return np.clip(x[None, :, :] + stack[:, :, 0:1], 0.0, 1.0)
    if family == "contrast":
        return np.clip(
            _CONTRAST_MID + (1.0 + stack[:, :, 0:1]) * (x[None, :, :] - _CONTRAST_MID),
            0.0,
            1.0,
        )
    h, w = shape
    out = np.empty((s, n, x.shape[1]))
    for i in range(s):
        p = stack[i]
        if np.all(p == p[0]):
            out[i] = _fixed_shift(x, h, w, p[0, 0], p[0, 1])
        else:
            shifted, _, _ = _shift_bilinear(
                x.reshape(n, h, w), p[:, 0], p[:, 1], with_grads=False
            )
            out[i] = shifted.reshape(n, -1)
    return out


def _param_dim(family: str) -> int:
    return 2 if family == "translate" else 1


def semantic_transform(
    family: str,
    x: np.ndarray,
    param: np.ndarray,
    shape: Optional[tuple[int, int]] = None,
) -> np.ndarray:
    """Apply a semantic transform with per-sample parameters.

    brightness: add the scalar and clip.  contrast: rescale around mid-gray
    and clip.  translate: sub-pixel bilinear shift by (dy, dx).
    """
    x, squeeze = _as_batch(x)
    param = np.atleast_2d(np.asarray(param, dtype=np.float64))
    if family == "brightness":
        out = np.clip(x + param[:, 0:1], 0.0, 1.0)
    elif family == "contrast":
        out = np.clip(
            _CONTRAST_MID + (1.0 + param[:, 0:1]) * (x - _CONTRAST_MID), 0.0, 1.0
        )
    elif family == "translate":
        if shape is None:
            side = int(round(math.sqrt(x.shape[1])))
            shape = (side, side)
        imgs = x.reshape(-1, *shape)
        shifted, _, _ = _shift_bilinear(imgs, param[:, 0], param[:, 1], with_grads=False)
        out = shifted.reshape(x.shape)
    else:
        raise ConfigurationError(f"unknown semantic family {family!r}")
    return out[0] if squeeze else out


def _semantic_eval(
    model: SandboxModel,
    x: np.ndarray,
    y: np.ndarray,
    family: str,
    param: np.ndarray,
    shape: tuple[int, int],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Loss, parameter gradient, and predictions at the given parameters."""
    if family == "brightness":
        raw = x + param[:, 0:1]
        xt = np.clip(raw, 0.0, 1.0)
        losses, gx, preds = loss_input_grad_pred(model, xt, y)
        mask = (raw > 0.0) & (raw < 1.0)
        grad = (gx * mask).sum(axis=1, keepdims=True)
    elif family == "contrast":
        raw = _CONTRAST_MID + (1.0 + param[:, 0:1]) * (x - _CONTRAST_MID)
        xt = np.clip(raw, 0.0, 1.0)
        losses, gx, preds = loss_input_grad_pred(model, xt, y)
        mask = (raw > 0.0) & (raw < 1.0)
        grad = (gx * mask * (x - _CONTRAST_MID)).sum(axis=1, keepdims=True)
    elif family == "translate":
        imgs = x.reshape(-1, *shape)
        shifted, d_dy, d_dx = _shift_bilinear(imgs, param[:, 0], param[:, 1])
        xt = shifted.reshape(x.shape)
        losses, gx, preds = loss_input_grad_pred(model, xt, y)
        gimg = gx.reshape(-1, *shape)
        grad = np.stack(
            [(gimg * d_dy).sum(axis=(1, 2)), (gimg * d_dx).sum(axis=(1, 2))], axis=1
        )
    else:
        raise ConfigurationError(f"unknown semantic family {family!r}")
    return losses, grad, preds


class _ParamTracker:
    """Running best-loss parameter and best misclassifying parameter."""

    def __init__(self, n: int, k: int):
        self.best_p = np.zeros((n, k))
        self.best_loss = np.full(n, -np.inf)
        self.adv_p = np.zeros((n, k))
        self.adv_loss = np.full(n, -np.inf)
        self.success = np.zeros(n, dtype=bool)

    def update(self, p: np.ndarray, losses: np.ndarray, preds: np.ndarray, y: np.ndarray):
        better = losses > self.best_loss
        self.best_p[better] = p[better]
        self.best_loss[better] = losses[better]
        wrong = preds != y
        adv_better = wrong & (losses > self.adv_loss)
        self.adv_p[adv_better] = p[adv_better]
        self.adv_loss[adv_better] = losses[adv_better]
        self.success |= wrong

    def update_stack(self, p: np.ndarray, losses: np.ndarray, preds: np.ndarray, y: np.ndarray):
        """Fold a whole (S, n) candidate slab in at once.  argmax keeps the
        earliest best candidate, matching sequential strictly-better updates."""
        n = losses.shape[1]
        cols = np.arange(n)
        best = np.argmax(losses, axis=0)
        self.update(p[best, cols], losses[best, cols], preds[best, cols], y)
        wrong = preds != y[None, :]
        masked = np.where(wrong, losses, -np.inf)
        adv = np.argmax(masked, axis=0)
        if np.any(wrong):
            # columns without any misclassifying candidate contribute -inf
            # losses and correct predictions, so this is a no-op for them
            self.update(p[adv, cols], masked[adv, cols], preds[adv, cols], y)

    def carry(self) -> np.ndarray:
        out = self.best_p.copy()
        out[self.success] = self.adv_p[self.success]
        return out


def semantic_attack(
    model: SandboxModel,
    x: np.ndarray,
    y: np.ndarray,
    budget: AttackBudget,
    rng: Optional[np.random.Generator] = None,
    param_init: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Optimize the transform parameter inside [-epsilon, epsilon].

    A dense sweep over the parameter range (per axis for translation) seeds
    the search so the result is never worse than the sweep optimum; projected
    sign-gradient steps then refine it.  Returns the transformed image at the
    best-loss parameter.
    """
    return semantic_attack_full(model, x, y, budget, rng=rng, param_init=param_init).x_adv


def semantic_attack_full(
    model: SandboxModel,
    x: np.ndarray,
    y: np.ndarray,
    budget: AttackBudget,
    rng: Optional[np.random.Generator] = None,
    param_init: Optional[np.ndarray] = None,
) -> AttackResult:
    if budget.family not in SEMANTIC_FAMILIES:
        raise ConfigurationError(f"semantic_attack got norm family {budget.family!r}")
    x, squeeze = _as_batch(x)
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    n = x.shape[0]
    k = _param_dim(budget.family)
    shape = budget.image_shape(x.shape[1])
    eps = budget.epsilon
    if eps == 0.0:
        _, preds = loss_and_pred(model, x, y)
        return AttackResult(
            x[0].copy() if squeeze else x.copy(),
            preds != y,
            np.zeros((n, k)),
            np.zeros((n, k)),
        )

    tracker = _ParamTracker(n, k)

    def consider(param: np.ndarray):
        param = np.clip(param, -eps, eps)
        losses, grad, preds = _semantic_eval(model, x, y, budget.family, param, shape)
        tracker.update(param, losses, preds, y)
        return losses, grad

    # Candidate sweep: identity, warm start, and a dense grid per axis, all
    # evaluated in one stacked forward pass (no gradients needed here).
    candidates = [np.zeros((n, k))]
    if param_init is not None:
        warm = np.broadcast_to(np.atleast_2d(param_init), (n, k)).astype(np.float64)
        candidates.append(np.clip(warm, -eps, eps))
    for value in np.linspace(-eps, eps, SWEEP_POINTS):
        for axis in range(k):
            p = np.zeros((n, k))
            p[:, axis] = value
            candidates.append(p)
    stack = np.stack(candidates)  # (S, n, k)
    s = stack.shape[0]
    xt = _transform_stack(budget.family, x, stack, shape)
    losses, preds = loss_and_pred(model, xt.reshape(s * n, -1), np.tile(y, s))
    tracker.update_stack(stack, losses.reshape(s, n), preds.reshape(s, n), y)

    # Projected gradient refinement from the best sweep candidate.
    cur = tracker.carry()
    step = budget.step
    for _ in range(budget.iterations):
        losses, grad = consider(cur)
        direction = np.sign(grad)
        if not np.any(np.abs(grad) > _GRAD_EPS):
            break  # flat parameter landscape: the sweep already covered it
        cur = np.clip(cur + step * direction, -eps, eps)
    consider(cur)

    best_p = tracker.best_p
    x_adv = semantic_transform(budget.family, x, best_p, shape)
    return AttackResult(
        x_adv[0] if squeeze else x_adv,
        tracker.success,
        tracker.carry(),
        best_p[0] if squeeze else best_p,
    )


# ---------------------------------------------------------------------------
# Dispatch


def run_attack(
    model: SandboxModel,
    x: np.ndarray,
    y: np.ndarray,
    budget: AttackBudget,
    rng: Optional[np.random.Generator] = None,
    warm: Optional[np.ndarray] = None,
) -> AttackResult:
    """Run the attack for the budget's family.  ``warm`` feeds the warm-start
    payload of a previous run at a smaller epsilon (pixels for norm families,
    parameters for semantic ones)."""
    if budget.family in PGD_FAMILIES:
        return pgd_attack_full(model, x, y, budget, rng=rng, x_init=warm)
    return semantic_attack_full(model, x, y, budget, rng=rng, param_init=warm)


def perturbation_size(
    family: str, x: np.ndarray, result: AttackResult
) -> np.ndarray:
    """Measured constraint usage per sample: the family norm of the pixel
    perturbation, or the max-norm of the semantic parameter."""
    if family in SEMANTIC_FAMILIES:
        return np.abs(np.atleast_2d(result.param)).max(axis=1)
    x2, _ = _as_batch(x)
    adv = np.atleast_2d(result.x_adv)
    delta = adv - x2
    if family == "linf":
        return np.abs(delta).max(axis=1)
    if family == "l2":
        return np.sqrt((delta * delta).sum(axis=1))
    if family == "l1":
        return np.abs(delta).sum(axis=1)
    raise ConfigurationError(f"unknown family {family!r}")
