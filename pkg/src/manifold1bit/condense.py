"""Condensation operators and the induced pseudo-metric.

A condenser collapses a length-``m`` vector to ``p`` numbers by taking,
within each of ``p`` consecutive blocks of length ``lam = m / p``, the
inner product with a fixed positive row profile ``v`` and rescaling by
``9 / (8 ||v||_2 sqrt(p))``.  The profile is matched to how the
quantizer shapes its error:

* sigma_delta(r): ``v`` holds the coefficients of
  ``(1 + z + ... + z^{lt-1})^r`` where ``lam = r*lt - r + 1``, so the
  blockwise inner product nearly annihilates r-th order shaped noise;
* beta: ``v = (beta^-1, ..., beta^-lam)``, the geometric profile that
  nearly inverts the blockwise beta recursion.

``pseudo_distance(a, b) = ||condense(a - b)||_2`` is symmetric and
satisfies the triangle inequality but has nontrivial null directions
(within-block patterns orthogonal to ``v``), so it is a pseudo-metric,
not a metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantizers import SCHEME_BETA, SCHEME_MSQ, SCHEME_SIGMA_DELTA, QuantizerSpec


@dataclass(eq=False)
class Condenser:
    """Blockwise row operator: ``p`` copies of the profile ``v``, scaled."""

    scheme: str
    p: int
    lam: int
    v: np.ndarray
    scale: float
    gamma: float
    r: int | None = None
    beta: float | None = None

    @property
    def m(self) -> int:
        return self.p * self.lam


def build_condenser(spec: QuantizerSpec, m: int, p: int) -> Condenser:
    """Build the condenser matched to ``spec`` for ``m = p * lam`` rows.

    For sigma_delta(r) the block length must satisfy ``lam = r*lt - r + 1``
    for an integer ``lt``, i.e. ``(lam - 1)`` divisible by ``r``.
    """
    if p < 1 or m % p != 0:
        raise ValueError(f"block count must divide the row count, got m={m}, p={p}")
    lam = m // p
    if spec.scheme == SCHEME_SIGMA_DELTA:
        r = spec.r
        if (lam - 1) % r != 0:
            raise ValueError(
                f"sigma_delta({r}) condenser needs (m/p - 1) divisible by r; got lam={lam}"
            )
        lt = (lam - 1) // r + 1
        v = np.ones(1)
        block = np.ones(lt)
        for _ in range(r):
            v = np.convolve(v, block)
        assert v.shape == (lam,)
    elif spec.scheme == SCHEME_BETA:
        if spec.p is not None and spec.p != p:
            raise ValueError(f"quantizer block count {spec.p} != condenser block count {p}")
        v = spec.beta ** -np.arange(1.0, lam + 1.0)
    else:
        raise ValueError("condensers exist for sigma_delta and beta schemes only")
    nrm = float(np.linalg.norm(v))
    return Condenser(
        scheme=spec.scheme,
        p=p,
        lam=lam,
        v=v,
        scale=9.0 / (8.0 * nrm * np.sqrt(p)),
        gamma=float(np.sum(v) / nrm),
        r=spec.r,
        beta=spec.beta,
    )


def msq_condenser(m: int) -> Condenser:
    """Identity-profile condenser scaled by m^{-1/2}.

    Used by the sign-quantization recovery baseline: the induced
    pseudo-distance is the scaled Euclidean distance ``m^{-1/2}||a-b||``.
    """
    return Condenser(scheme=SCHEME_MSQ, p=m, lam=1, v=np.ones(1),
                     scale=1.0 / np.sqrt(m), gamma=1.0)


def condense(c: Condenser, w: np.ndarray) -> np.ndarray:
    """Apply the condenser; accepts a vector or a batch of row vectors."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape[-1] != c.m:
        raise ValueError(f"expected length {c.m} along the last axis, got {w.shape[-1]}")
    blocks = w.reshape(w.shape[:-1] + (c.p, c.lam))
    return c.scale * (blocks @ c.v)


def pseudo_distance(c: Condenser, a: np.ndarray, b: np.ndarray) -> float:
    """``||condense(a - b)||_2``; zero on null directions of the condenser."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("length mismatch")
    return float(np.linalg.norm(condense(c, a - b)))
