"""Random sensing operators ``x -> m^{-1/2} A (signs * x)``.

Three ensembles for the matrix ``A``:

* ``gaussian`` -- dense i.i.d. standard normal ``m x N``;
* ``pce`` -- partial circulant: circular convolution with a standard
  normal generator, followed by row selection;
* ``boe`` -- bounded orthonormal: the orthonormal DCT-II scaled by
  sqrt(N) (entries O(1)-bounded), followed by row selection.

A random sign diagonal is always applied to the input first, and the
``m^{-1/2}`` factor is baked into :func:`apply` so one-bit quantization
of the outputs is well scaled.  Ensembles are immutable and fully
reproducible from ``(kind, m, N, seed)``; they are not persisted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

GAUSSIAN = "gaussian"
PCE = "pce"
BOE = "boe"
KINDS = (GAUSSIAN, PCE, BOE)


@dataclass(eq=False)
class Ensemble:
    kind: str
    m: int
    N: int
    seed: int
    signs: np.ndarray
    dense: np.ndarray | None = None      # gaussian payload, m x N
    generator: np.ndarray | None = None  # pce payload, length N
    omega: np.ndarray | None = None      # pce/boe sorted row selection
    first_m: bool = False                # pce row-selection convention

    def key(self) -> tuple:
        """Hashable identity; ensembles are reproduced from it."""
        return (self.kind, self.m, self.N, self.seed, self.first_m)


def sample_ensemble(kind: str, m: int, N: int, seed: int, *, first_m: bool = False) -> Ensemble:
    """Draw an ensemble deterministically from ``seed``.

    Draw order is fixed (payload, then row selection, then signs) so a
    given ``(kind, m, N, seed)`` always yields the same operator.  For
    pce/boe the rows kept are uniform without replacement by default;
    ``first_m=True`` keeps rows ``0..m-1`` instead (pce only).
    """
    if kind not in KINDS:
        raise ValueError(f"unknown ensemble kind {kind!r}")
    if m < 1 or N < 1:
        raise ValueError("m and N must be positive")
    if kind in (PCE, BOE) and m > N:
        raise ValueError(f"{kind} requires m <= N, got m={m}, N={N}")
    rng = np.random.default_rng(seed)
    dense = generator = omega = None
    if kind == GAUSSIAN:
        dense = rng.standard_normal((m, N))
    elif kind == PCE:
        generator = rng.standard_normal(N)
        if first_m:
            omega = np.arange(m, dtype=np.int64)
        else:
            omega = np.sort(rng.choice(N, size=m, replace=False)).astype(np.int64)
    else:
        omega = np.sort(rng.choice(N, size=m, replace=False)).astype(np.int64)
    signs = rng.integers(0, 2, size=N) * 2.0 - 1.0
    return Ensemble(kind=kind, m=m, N=N, seed=seed, signs=signs,
                    dense=dense, generator=generator, omega=omega,
                    first_m=bool(first_m) if kind == PCE else False)


def boe_transform(x: np.ndarray) -> np.ndarray:
    """The orthonormal transform underlying the boe ensemble (an isometry)."""
    return scipy.fft.dct(np.asarray(x, dtype=np.float64), type=2, norm="ortho", axis=-1)


def _circular_convolve(g: np.ndarray, x: np.ndarray) -> np.ndarray:
    n = g.shape[0]
    return np.fft.irfft(np.fft.rfft(x, axis=-1) * np.fft.rfft(g), n=n, axis=-1)


def apply(ens: Ensemble, x: np.ndarray) -> np.ndarray:
    """Measure ``x`` (a vector, or a batch of row vectors)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != ens.N:
        raise ValueError(f"expected dimension {ens.N} along the last axis, got {x.shape[-1]}")
    xs = x * ens.signs
    if ens.kind == GAUSSIAN:
        y = xs @ ens.dense.T
    elif ens.kind == PCE:
        y = _circular_convolve(ens.generator, xs)[..., ens.omega]
    else:
        y = np.sqrt(ens.N) * boe_transform(xs)[..., ens.omega]
    return y / np.sqrt(ens.m)


def materialize(ens: Ensemble, max_entries: int = 100_000_000) -> np.ndarray:
    """Dense ``m x N`` matrix ``M`` with ``M x == apply(ens, x)``."""
    if ens.m * ens.N > max_entries:
        raise ValueError(f"materializing {ens.m}x{ens.N} exceeds the cap of {max_entries} entries")
    if ens.kind == GAUSSIAN:
        A = ens.dense
    elif ens.kind == PCE:
        idx = (np.arange(ens.N)[:, None] - np.arange(ens.N)[None, :]) % ens.N
        A = ens.generator[idx][ens.omega]
    else:
        W = boe_transform(np.eye(ens.N)).T  # row k = k-th transform basis function
        A = np.sqrt(ens.N) * W[ens.omega]
    return A * ens.signs[None, :] / np.sqrt(ens.m)
