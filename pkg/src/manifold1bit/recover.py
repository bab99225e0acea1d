"""Two-step recovery from one-bit noise-shaped measurements.

Given quantized measurements ``q`` of an unknown point on a manifold
with a known GMRA, recovery proceeds in two steps:

1. quantize the measurements of every level-``j`` center with the same
   ensemble and scheme, and pick the center whose bits are closest to
   ``q`` in the condensed pseudo-metric (:func:`select_center`);
2. minimize the condensed residual over the selected center's affine
   piece intersected with the unit ball (:func:`solve_tangent_lsqi`),
   a least-squares problem with one quadratic inequality constraint.

If the step-1 pseudo-distance is (numerically) zero the center itself
is returned and step 2 is skipped.  Center quantizations are cached per
(gmra, level, ensemble, scheme): step 1 costs ``K_j`` quantizations, so
reuse across a batch of recoveries dominates the runtime otherwise.
The cache is populated once under a lock and read-only afterwards, so
recoveries for distinct points may run concurrently.
"""

from __future__ import annotations

import threading
import weakref
from dataclasses import dataclass

import numpy as np

from . import ensembles
from .condense import Condenser, condense, msq_condenser
from .gmra import Gmra
from .quantizers import QuantizerSpec, msq_spec, quantize_bits

_STEP1_ZERO_TOL = 1e-12

_bits_cache: "weakref.WeakKeyDictionary[Gmra, dict]" = weakref.WeakKeyDictionary()
_cache_lock = threading.Lock()


@dataclass(eq=False)
class RecoveryResult:
    x_sharp: np.ndarray
    center_index: int
    step1_value: float            # condensed distance of the winning center's bits to q
    step2_residual: float         # ||condensed(Phi x_sharp - q)||_2
    skipped_step2: bool
    lagrange_multiplier: float    # 0 when the ball constraint is inactive
    multiplier_converged: bool = True


@dataclass(eq=False)
class LsqiSolution:
    x: np.ndarray
    multiplier: float
    residual: float
    converged: bool


def center_bits(gmra: Gmra, j: int, ens: ensembles.Ensemble, spec: QuantizerSpec) -> np.ndarray:
    """Quantized measurements of every level-``j`` center (int8, uncached)."""
    Y = ensembles.apply(ens, gmra.level(j).centers)
    Q, _ = quantize_bits(spec, Y, return_state=False)
    return Q


def center_condensed_bits(gmra: Gmra, j: int, ens: ensembles.Ensemble, spec: QuantizerSpec,
                          cond: Condenser) -> np.ndarray:
    """Condensed quantized measurements of every level-``j`` center (cached).

    Step 1 only ever needs ``condense(Q(Phi c) - q)``, which by linearity
    is ``condense(Q(Phi c)) - condense(q)``, so the cache holds the tiny
    ``K x p`` condensed array rather than the raw bit matrix.
    """
    key = (j, ens.key(), spec, cond.p)
    with _cache_lock:
        per_gmra = _bits_cache.setdefault(gmra, {})
        cached = per_gmra.get(key)
    if cached is None:
        centers = gmra.level(j).centers
        out = np.empty((centers.shape[0], cond.p))
        chunk = max(1, 16_000_000 // max(ens.m, 1))
        for s in range(0, centers.shape[0], chunk):
            Y = ensembles.apply(ens, centers[s:s + chunk])
            Q, _ = quantize_bits(spec, Y, return_state=False)
            out[s:s + chunk] = condense(cond, Q.astype(np.float64))
        cached = out
        with _cache_lock:
            per_gmra[key] = cached
    return cached


def select_center(gmra: Gmra, j: int, ens: ensembles.Ensemble, spec: QuantizerSpec,
                  cond: Condenser, q: np.ndarray) -> tuple[int, float]:
    """Step 1: index of the center whose quantized measurements are
    closest to ``q`` in the condensed pseudo-metric; ties to the
    smallest index."""
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (ens.m,):
        raise ValueError(f"expected {ens.m} bits, got shape {q.shape}")
    if cond.m != ens.m:
        raise ValueError(f"condenser covers {cond.m} rows but the ensemble has {ens.m}")
    cbits = center_condensed_bits(gmra, j, ens, spec, cond)
    dv = np.linalg.norm(cbits - condense(cond, q)[None, :], axis=1)
    k = int(np.argmin(dv))
    return k, float(dv[k])


def solve_tangent_lsqi(center: np.ndarray, basis: np.ndarray, ens: ensembles.Ensemble,
                       cond: Condenser, q: np.ndarray, *, boundary_tol: float = 1e-8,
                       max_iter: int = 200) -> LsqiSolution:
    """Step 2: minimize ``||condensed(Phi z - q)||`` over the affine piece
    ``z = center + basis @ t`` subject to ``||z|| <= 1``.

    The problem reduces to a d-dimensional least squares with a quadratic
    inequality constraint.  If the unconstrained minimizer is feasible it
    is returned with multiplier 0; otherwise the Lagrange multiplier is
    found by safeguarded bisection on the secular equation
    ``||center + basis @ t(nu)|| = 1`` (eigen-decomposition of the tiny
    normal matrix makes each evaluation closed-form).  Rank-deficient
    reduced systems fall back to the minimum-norm solution.
    """
    c = np.asarray(center, dtype=np.float64)
    B = np.asarray(basis, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    M = condense(cond, ensembles.apply(ens, B.T)).T          # p x d
    b = condense(cond, q - ensembles.apply(ens, c))          # p
    t0, *_ = np.linalg.lstsq(M, b, rcond=None)
    x0 = c + B @ t0
    if np.linalg.norm(x0) <= 1.0 + 1e-12:
        return LsqiSolution(x=x0, multiplier=0.0,
                            residual=float(np.linalg.norm(M @ t0 - b)), converged=True)

    # Boundary case: ||c + B t(nu)||^2 = ||c||^2 + 2 <B^T c, t> + ||t||^2
    # with t(nu) solving (M^T M + nu I) t = M^T b - nu B^T c.
    eigval, eigvec = np.linalg.eigh(M.T @ M)
    beta0 = eigvec.T @ (M.T @ b)
    beta1 = eigvec.T @ (B.T @ c)
    c2 = float(c @ c)

    def boundary_norm(nu: float) -> tuple[float, np.ndarray]:
        tt = (beta0 - nu * beta1) / (eigval + nu)
        h = c2 + 2.0 * float(beta1 @ tt) + float(tt @ tt)
        return float(np.sqrt(max(h, 0.0))), tt

    # Maintain lo with ||c+Bt|| > 1 and hi with ||c+Bt|| <= 1; converge to
    # the boundary from the feasible side so the result never overshoots
    # the ball.
    lo = 0.0
    hi = max(float(eigval.max(initial=0.0)), 1.0)
    iters = 0
    norm_hi, _ = boundary_norm(hi)
    while norm_hi > 1.0 and iters < max_iter:
        lo = hi
        hi *= 4.0
        norm_hi, _ = boundary_norm(hi)
        iters += 1
    while norm_hi < 1.0 - boundary_tol and iters < max_iter:
        nu = 0.5 * (lo + hi)
        norm_nu, _ = boundary_norm(nu)
        if norm_nu > 1.0:
            lo = nu
        else:
            hi, norm_hi = nu, norm_nu
        iters += 1
    converged = 1.0 - boundary_tol <= norm_hi <= 1.0
    _, tt = boundary_norm(hi)
    t = eigvec @ tt
    x = c + B @ t
    return LsqiSolution(x=x, multiplier=float(hi),
                        residual=float(np.linalg.norm(M @ t - b)), converged=converged)


def reconstruct(gmra: Gmra, j: int, ens: ensembles.Ensemble, spec: QuantizerSpec,
                cond: Condenser, q: np.ndarray) -> RecoveryResult:
    """Run both recovery steps for one quantized measurement vector."""
    k, step1 = select_center(gmra, j, ens, spec, cond, q)
    lvl = gmra.level(j)
    if step1 <= _STEP1_ZERO_TOL:
        x = lvl.centers[k].copy()
        resid = float(np.linalg.norm(condense(cond, ensembles.apply(ens, x) - q)))
        return RecoveryResult(x_sharp=x, center_index=k, step1_value=step1,
                              step2_residual=resid, skipped_step2=True,
                              lagrange_multiplier=0.0)
    sol = solve_tangent_lsqi(lvl.centers[k], lvl.bases[k], ens, cond, q)
    return RecoveryResult(x_sharp=sol.x, center_index=k, step1_value=step1,
                          step2_residual=sol.residual, skipped_step2=False,
                          lagrange_multiplier=sol.multiplier,
                          multiplier_converged=sol.converged)


def reconstruct_msq_baseline(gmra: Gmra, j: int, ens: ensembles.Ensemble,
                             q_msq: np.ndarray) -> RecoveryResult:
    """Same two-step structure for sign-quantized measurements, with the
    scaled Euclidean distance ``m^{-1/2}||.||`` in both steps."""
    return reconstruct(gmra, j, ens, msq_spec(), msq_condenser(ens.m), q_msq)
