"""Acceptance suite: one test per release criterion, each printing a
single PASS/FAIL line (run with ``pytest -s tests/test_acceptance.py``).

Three sub-criteria are known to fail and are asserted anyway rather than
weakened; the README's acceptance-status section summarizes why:

* self-noise slope for the order-2 scheme (measures ~-1.42 on the pinned
  oversampling window against a -1.5 threshold),
* the [2, 8] level-to-level refinement bracket (a binary split halves
  cell area per level on a 2-manifold, centering the ratio at 2, not 4),
* the full-sphere Gaussian-width check (any feasible cloud on a
  19-dimensional sphere under-covers it, biasing the sup estimator low
  by far more than its Monte Carlo error).
"""

import math

import numpy as np
import pytest

import manifold1bit as m1b
from manifold1bit import (
    apply,
    approximation_error,
    beta_spec,
    build_condenser,
    condense,
    emit_csv,
    estimate_gaussian_width,
    msq_spec,
    pseudo_distance,
    quantize_bits,
    run_experiment,
    sample_ensemble,
    sample_manifold,
    sigma_delta_spec,
    solve_tangent_lsqi,
    state_matrix,
    verify_state_relation,
)
from manifold1bit.harness import parse_config

from conftest import RD_SWEEP_CFG


def _criterion(name: str, ok: bool, detail: str = ""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" :: {detail}" if detail else ""))
    assert ok, f"{name}: {detail}"


def test_state_relation_exactness():
    m = 200
    schemes = [msq_spec(), sigma_delta_spec(1), sigma_delta_spec(2),
               sigma_delta_spec(3), sigma_delta_spec(4),
               beta_spec(1.2, 10), beta_spec(1.5, 10)]
    worst = {}
    for idx, spec in enumerate(schemes):
        H = state_matrix(spec, m)
        rng = np.random.default_rng(1000 + idx)
        Y = rng.uniform(-1.0, 1.0, (1000, m))
        Q, U = quantize_bits(spec, Y)
        resid = np.abs(Y - Q - U @ H.T.astype(np.longdouble)).max()
        # spot-check through the public single-vector API as well
        res = m1b.quantize(spec, Y[0])
        resid = max(float(resid), verify_state_relation(Y[0], res, H))
        worst[spec.label] = float(resid)
    top = max(worst.values())
    _criterion("state-relation exactness (1000 draws, every scheme)",
               top <= 1e-10, f"worst residual {top:.3g} ({worst})")


def test_sd1_stability_exact():
    rng = np.random.default_rng(77)
    Y = rng.uniform(-1.0, 1.0, (1000, 200))
    _, U = quantize_bits(sigma_delta_spec(1), Y)
    top = float(np.abs(U).max())
    _criterion("order-1 stability (|y|<=1 => |u|<=1, 1000 seeds)",
               top <= 1.0, f"max state {top}")


def test_condenser_correctness():
    c = build_condenser(sigma_delta_spec(2), 5, 1)
    ok_v = c.v.tolist() == [1, 2, 3, 2, 1]
    ok_g = abs(c.gamma - 9 / math.sqrt(19)) < 1e-15
    cc = build_condenser(sigma_delta_spec(2), 45, 5)
    rng = np.random.default_rng(5)
    ok_axioms = True
    for _ in range(10_000):
        a, b, z = rng.normal(size=(3, 45))
        dab = pseudo_distance(cc, a, b)
        dba = pseudo_distance(cc, b, a)
        if dab < 0 or abs(dab - dba) > 1e-12:
            ok_axioms = False
            break
        if dab > pseudo_distance(cc, a, z) + pseudo_distance(cc, z, b) + 1e-12:
            ok_axioms = False
            break
    _criterion("condenser profile, gamma and pseudo-metric axioms (1e4 triples)",
               ok_v and ok_g and ok_axioms)


def test_self_noise_decay_slopes():
    p = 10
    x = sample_manifold("sphere", 1, 20, seed=42, mu=0.05, d=2)[0]
    slopes = {}
    for r, lams in [(1, [8, 16, 32, 64]), (2, [9, 17, 33, 65])]:
        spec = sigma_delta_spec(r)
        means = []
        for lam in lams:
            m = p * lam
            cond = build_condenser(spec, m, p)
            vals = []
            for s in range(50):
                ens = sample_ensemble("gaussian", m, 20, seed=31000 + s)
                y = apply(ens, x)
                q, _ = quantize_bits(spec, y, return_state=False)
                vals.append(np.linalg.norm(condense(cond, y - q)))
            means.append(np.mean(vals))
        slopes[r] = float(np.polyfit(np.log(lams), np.log(means), 1)[0])
    ok = slopes[1] <= -0.5 and slopes[2] <= -1.5
    _criterion("self-noise log-log slopes (r=1 <= -0.5, r=2 <= -1.5, 50 seeds)",
               ok, f"measured {slopes}")


def test_lsqi_grid_oracle():
    rng = np.random.default_rng(314)
    N, p, lam = 12, 8, 9
    m = p * lam
    ens = sample_ensemble("gaussian", m, N, seed=2718)
    cond = build_condenser(sigma_delta_spec(1), m, p)
    step = 1e-3
    worst_gap, worst_kkt = 0.0, 0.0
    for trial in range(100):
        d = 1 + trial % 2
        c = rng.normal(size=N)
        c *= rng.uniform(0.85, 0.98) / np.linalg.norm(c)
        B, _ = np.linalg.qr(rng.normal(size=(N, d)))
        scale = 5.0 if trial % 3 == 0 else 1.0
        q = scale * rng.choice([-1.0, 1.0], size=m)
        sol = solve_tangent_lsqi(c, B, ens, cond, q)
        M = condense(cond, apply(ens, B.T)).T
        b = condense(cond, q - apply(ens, c))
        a = -(B.T @ c)
        R = math.sqrt(max(1.0 - float(c @ c) + float(a @ a), 0.0))
        # polar grid over the feasible disk, boundary ring included: a
        # cartesian grid cannot localize boundary optima because its
        # radial quantization noise swamps the curvature along the arc
        if d == 1:
            T = np.unique(np.concatenate([
                np.arange(a[0] - R, a[0] + R, step), [a[0] - R, a[0] + R]]))[:, None]
        else:
            chunks = []
            for r in np.concatenate([np.arange(0.0, R, step), [R]]):
                n_ang = max(1, int(np.ceil(2 * np.pi * r / step)))
                theta = np.arange(n_ang) * (2 * np.pi / n_ang)
                chunks.append(a + r * np.stack([np.cos(theta), np.sin(theta)], axis=1))
            T = np.concatenate(chunks)
        obj = np.einsum("ij,ij->i", T @ M.T - b, T @ M.T - b)
        t_grid = T[int(np.argmin(obj))]
        t_sol = B.T @ (sol.x - c)
        worst_gap = max(worst_gap, float(np.linalg.norm(t_sol - t_grid)))
        if sol.multiplier > 0:
            worst_kkt = max(worst_kkt, abs(np.linalg.norm(sol.x) - 1.0))
        else:
            g = M.T @ (M @ t_sol - b)
            worst_kkt = max(worst_kkt,
                            float(np.linalg.norm(g)) / max(1.0, np.linalg.norm(M.T @ b)))
    ok = worst_gap <= 2e-3 and worst_kkt <= 1e-8
    _criterion("constrained least-squares vs dense grid (100 instances)",
               ok, f"worst solution gap {worst_gap:.2e}, worst KKT defect {worst_kkt:.2e}")


def test_gmra_refinement_law(sphere_gmra):
    fresh = sample_manifold("sphere", 1000, 20, seed=91, mu=0.05, d=2,
                            frame_seed=RD_SWEEP_CFG.seed)
    means = {j: approximation_error(sphere_gmra, j, fresh).mean for j in range(4, 11)}
    ratios = {j: means[j] / means[j + 1] for j in range(4, 10)}
    ok = all(2.0 <= v <= 8.0 for v in ratios.values())
    _criterion("refinement law: consecutive mean-error ratios in [2, 8] for j=4..10",
               ok, "ratios " + ", ".join(f"{j}->{j+1}: {v:.3f}" for j, v in ratios.items()))


def test_figure_reproduction(sphere_gmra):
    rows = run_experiment(RD_SWEEP_CFG, gmra=sphere_gmra)
    curves = {}
    for row in rows:
        curves.setdefault((int(row.r_or_beta), row.j), {})[row.lam] = row.mean_rel_err
    assert set(curves) == {(2, 6), (2, 12), (4, 6), (4, 12)}
    details = []
    ok_decay = True
    for key, pts in curves.items():
        lo, hi = min(pts), max(pts)
        ok_decay &= pts[hi] <= 0.5 * pts[lo]
        details.append(f"r={key[0]} j={key[1]}: {pts[lo]:.4f}->{pts[hi]:.5f}")
    lam_max = max(curves[(2, 6)])
    ok_floor = (curves[(2, 12)][lam_max] < curves[(2, 6)][lam_max]
                and curves[(4, 12)][lam_max] < curves[(4, 6)][lam_max])
    ok_order = curves[(4, 12)][lam_max] <= 1.1 * curves[(2, 12)][lam_max]
    _criterion("rate-distortion figure: decay, floor ordering, scheme ordering",
               ok_decay and ok_floor and ok_order, "; ".join(details))


def test_ensemble_consistency():
    worst = 0.0
    rng = np.random.default_rng(9)
    for kind in ["pce", "boe"]:
        ens = sample_ensemble(kind, 13, 28, seed=4)
        M = m1b.materialize(ens)
        for _ in range(50):
            x = rng.normal(size=28)
            worst = max(worst, float(np.abs(apply(ens, x) - M @ x).max()))
    X = rng.normal(size=(50, 33))
    iso = float(np.abs(np.linalg.norm(m1b.boe_transform(X), axis=1)
                       - np.linalg.norm(X, axis=1)).max())
    ok = worst <= 1e-10 and iso <= 1e-10
    _criterion("structured ensembles: operator vs matrix, pre-selection isometry",
               ok, f"max operator gap {worst:.2e}, isometry defect {iso:.2e}")


def test_gaussian_width_estimator():
    target = math.sqrt(2) * math.gamma(10.5) / math.gamma(10)
    cloud = sample_manifold("sphere", 300000, 20, seed=77, mu=0.0, d=19)
    est = estimate_gaussian_width(cloud, 200, seed=88)
    sphere_ok = abs(est.estimate - target) <= 3 * est.stderr
    single = estimate_gaussian_width(cloud[:1], 400, seed=89)
    single_ok = abs(single.estimate) <= 3 * single.stderr
    _criterion(
        "gaussian width: full-sphere cloud vs analytic value; singleton vs 0",
        sphere_ok and single_ok,
        f"sphere {est.estimate:.3f}+-{est.stderr:.3f} vs {target:.3f} "
        f"({'ok' if sphere_ok else 'off by '+format(abs(est.estimate-target)/est.stderr, '.0f')+' stderr'}); "
        f"singleton {single.estimate:.3f}+-{single.stderr:.3f} ({'ok' if single_ok else 'off'})",
    )


_DET_CFG = """
ambient_dim = 12
manifold = sphere
intrinsic_dim = 2
n_train = 2000
n_test = 10
j_max = 5
levels = 3, 4
schemes = sd1, sd2
p = 5
lambdas = 4, 8
ensemble = gaussian
seed = 424242
mu = 0.05
"""


class _FakeTime:
    def __init__(self):
        self.t = 0.0

    def perf_counter(self):
        self.t += 0.001
        return self.t


def test_csv_determinism(tmp_path, monkeypatch):
    cfg = parse_config(_DET_CFG)
    blobs = []
    for run in range(2):
        monkeypatch.setattr("manifold1bit.harness.time", _FakeTime())
        rows = run_experiment(cfg)
        path = str(tmp_path / f"run{run}.csv")
        emit_csv(rows, path)
        blobs.append(open(path, "rb").read())
    _criterion("pipeline determinism: byte-identical CSVs for identical configs",
               blobs[0] == blobs[1], f"{len(blobs[0])} bytes each")
