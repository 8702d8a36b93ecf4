"""
Refinement objective and its analytic gradient.

For frame t and an included pixel i with lifted point y_i = C0_t p_i:

    w_i = R(omega_t) y_i + tau_t                  camera-corrected world point
    z_i = apply_joint(J, -s_t) w_i                part point moved back to state 0
    e_i = |w_i - NN(w_i)|,  f_i = |z_i - NN(z_i)|  one-directional Chamfer to P^O

    L_static  = mean_t  sum_i (1 - m_i) e_i / sum_i (1 - m_i)
    L_dynamic = mean_t  sum_i m_i f_i / sum_i m_i
    m_i = sigmoid(logit of the unit owning pixel i)

Nearest neighbours are found once per iteration (`associate`) and held fixed
while differentiating (`evaluate`), so the gradient is exact for the frozen
correspondences and finite differences can check it.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from artictwin.services.geometry import JointType, NearestNeighborIndex, RigidTransform
from artictwin.services.geometry.so3 import rodrigues, rodrigues_jacobian
from artictwin.services.observations import Dataset
from artictwin.services.refine.models import PARAMETER_NAMES, LossRecord, RefineParams, UnitLayout

logger = logging.getLogger(__name__)

# Residuals at or below this are treated as exact matches: |r| is not
# differentiable at 0 and the zero subgradient is taken there.
_EXACT_MATCH = 1e-12  # meters


@dataclass(frozen=True, eq=False)
class FramePoints:
    lifted: np.ndarray  # (N, 3) initial-pose world points C0_t p_i
    units: np.ndarray   # (N,) moving-vector unit of each point


@dataclass(frozen=True, eq=False)
class RefineProblem:
    """Everything constant during one hypothesis' optimisation."""

    hypothesis: JointType
    frames: list[FramePoints]
    index: NearestNeighborIndex
    unit_count: int

    @property
    def frame_count(self) -> int:
        return len(self.frames)


@dataclass(frozen=True, eq=False)
class FrameAssociation:
    selected: np.ndarray        # indices into FramePoints
    static_target: np.ndarray   # NN of w_i at association time
    dynamic_target: np.ndarray  # NN of z_i at association time


def build_problem(
    dataset: Dataset,
    layout: UnitLayout,
    base_cameras: Sequence[RigidTransform],
    index: NearestNeighborIndex,
    hypothesis: JointType,
) -> RefineProblem:
    frames = []
    for t, frame in enumerate(dataset.frames):
        units = layout.unit_index[t]
        keep = units >= 0
        frames.append(FramePoints(
            lifted=base_cameras[t].apply(frame.flat_points[keep]),
            units=units[keep],
        ))
    return RefineProblem(JointType(hypothesis), frames, index, layout.unit_count)


# ── forward model ────────────────────────────────────────────────────────────

def _unit_axis(params: RefineParams) -> np.ndarray:
    n = np.linalg.norm(params.axis)
    if n == 0 or not np.isfinite(n):
        raise FloatingPointError("joint axis collapsed to zero")
    return params.axis / n


def _camera_points(params: RefineParams, t: int, lifted: np.ndarray) -> np.ndarray:
    inc = params.camera[t]
    return lifted @ rodrigues(inc[:3]).T + inc[3:]


def _undo_joint(problem: RefineProblem, params: RefineParams, t: int, w: np.ndarray) -> np.ndarray:
    a = _unit_axis(params)
    s = params.states[t]
    if problem.hypothesis is JointType.PRISMATIC:
        return w - s * a
    Q = rodrigues(-s * a)
    return (w - params.pivot) @ Q.T + params.pivot


def _subsample(n: int, fraction: float, seed: int, iteration: int, t: int) -> np.ndarray:
    if fraction >= 1.0 or n == 0:
        return np.arange(n)
    k = max(1, int(np.floor(fraction * n)))
    rng = np.random.default_rng([seed, iteration, t])
    return np.sort(rng.permutation(n)[:k])


def associate(
    params: RefineParams,
    problem: RefineProblem,
    iteration: int = 0,
    seed: int = 0,
    fraction: float = 1.0,
) -> list[FrameAssociation]:
    """Subsample every frame and freeze nearest neighbours in P^O for both terms."""
    out = []
    targets = problem.index.points
    for t, frame in enumerate(problem.frames):
        sel = _subsample(len(frame.lifted), fraction, seed, iteration, t)
        w = _camera_points(params, t, frame.lifted[sel])
        z = _undo_joint(problem, params, t, w)
        _, nn_w = problem.index.query(w)
        _, nn_z = problem.index.query(z)
        out.append(FrameAssociation(sel, targets[nn_w], targets[nn_z]))
    return out


def _safe_unit(vec: np.ndarray, norm: np.ndarray) -> np.ndarray:
    out = np.zeros_like(vec)
    nz = norm > _EXACT_MATCH
    out[nz] = vec[nz] / norm[nz, None]
    return out


def _contract(jac: np.ndarray, outer: np.ndarray) -> np.ndarray:
    """sum_ab jac[j, a, b] * outer[a, b] for each j."""
    return np.einsum("jab,ab->j", jac, outer)


def evaluate(
    params: RefineParams,
    problem: RefineProblem,
    association: Sequence[FrameAssociation],
    with_grad: bool = True,
) -> tuple[LossRecord, Optional[dict[str, np.ndarray]]]:
    """Loss (and gradient) with the correspondences of `association` held fixed."""
    T = problem.frame_count
    a = _unit_axis(params)
    prismatic = problem.hypothesis is JointType.PRISMATIC
    probs = expit(params.logits)

    grads = {name: np.zeros_like(getattr(params, name)) for name in PARAMETER_NAMES} if with_grad else None
    grad_a = np.zeros(3)
    static_total = 0.0
    dynamic_total = 0.0

    for t, (frame, assoc) in enumerate(zip(problem.frames, association)):
        if len(assoc.selected) == 0:
            continue
        y = frame.lifted[assoc.selected]
        units = frame.units[assoc.selected]
        m = probs[units]

        inc = params.camera[t]
        w = y @ rodrigues(inc[:3]).T + inc[3:]
        s = params.states[t]
        if prismatic:
            Q = np.eye(3)
            r = w
            z = w - s * a
        else:
            Q = rodrigues(-s * a)
            r = w - params.pivot
            z = r @ Q.T + params.pivot

        e_vec = w - assoc.static_target
        f_vec = z - assoc.dynamic_target
        e = np.linalg.norm(e_vec, axis=1)
        f = np.linalg.norm(f_vec, axis=1)
        b_static = float((1.0 - m).sum())
        b_dynamic = float(m.sum())
        L_s = float((1.0 - m) @ e / b_static) if b_static > 0 else 0.0
        L_d = float(m @ f / b_dynamic) if b_dynamic > 0 else 0.0
        static_total += L_s / T
        dynamic_total += L_d / T
        if not with_grad:
            continue

        c_s = (1.0 - m) / (b_static * T) if b_static > 0 else np.zeros_like(m)
        c_d = m / (b_dynamic * T) if b_dynamic > 0 else np.zeros_like(m)
        d_w = c_s[:, None] * _safe_unit(e_vec, e)   # dL/dw through the static term
        d_z = c_d[:, None] * _safe_unit(f_vec, f)   # dL/dz
        d_w = d_w + d_z @ Q                          # z depends on w through Q

        if t > 0:
            grads["camera"][t, 3:] = d_w.sum(axis=0)
            grads["camera"][t, :3] = _contract(rodrigues_jacobian(inc[:3]), d_w.T @ y)

        d_z_sum = d_z.sum(axis=0)
        if prismatic:
            grads["states"][t] = -a @ d_z_sum
            grad_a += -s * d_z_sum
        else:
            g_phi = _contract(rodrigues_jacobian(-s * a), d_z.T @ r)
            grads["states"][t] = -a @ g_phi
            grad_a += -s * g_phi
            grads["pivot"] += (np.eye(3) - Q).T @ d_z_sum

        d_m = np.zeros_like(m)
        if b_static > 0:
            d_m += (L_s - e) / (b_static * T)
        if b_dynamic > 0:
            d_m += (f - L_d) / (b_dynamic * T)
        grads["logits"] += np.bincount(units, weights=d_m * m * (1.0 - m), minlength=problem.unit_count)

    if with_grad:
        n = np.linalg.norm(params.axis)
        grads["axis"] = (np.eye(3) - np.outer(a, a)) @ grad_a / n
        grads["states"][0] = 0.0
        if prismatic:
            grads["pivot"][:] = 0.0
    return LossRecord(0, static_total, dynamic_total), grads


def forward_loss(
    params: RefineParams,
    problem: RefineProblem,
    seed: int = 0,
    iteration: int = 0,
    fraction: float = 1.0,
) -> LossRecord:
    """L_static + L_dynamic with fresh nearest neighbours (the true Chamfer loss)."""
    record, _ = evaluate(params, problem, associate(params, problem, iteration, seed, fraction), with_grad=False)
    return LossRecord(iteration, record.static, record.dynamic)
