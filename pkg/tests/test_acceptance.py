"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line."""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from qmod import measures, modulus
from qmod.cli import main
from qmod.distortion import outer_dilatation
from qmod.example_family import ExampleFamilyConfig, equicontinuity_profile, example_distortion_check
from qmod.geometry import hyp_distance, make_neighborhood
from qmod.mobius import apply, random_motion, trivial_group

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _ring_run(n, count, cells):
    t = time.perf_counter()
    fam, box = modulus.ring_family_and_box(n, math.e, count=count, cells=cells)
    res = modulus.modulus_solve(box, fam, n)
    return res.value, time.perf_counter() - t


def test_criterion_01_ring_modulus_baseline(report_criterion):
    v2, t2 = _ring_run(2, 512, 256)
    e2 = abs(v2 / (2 * math.pi) - 1)
    v3, t3 = _ring_run(3, 2048, 128)
    e3 = abs(v3 / (4 * math.pi) - 1)
    v3_512, _ = _ring_run(3, 512, 128)
    ok = e2 <= 0.05 and t2 < 60 and e3 <= 0.08 and t3 < 300
    assert report_criterion(
        1, ok,
        f"n=2 err {e2:.4f} in {t2:.2f}s (512 rays, 256^2); n=3 err {e3:.4f} in {t3:.2f}s "
        f"(2048 rays, 128^3; with 512 rays err {abs(v3_512 / (4 * math.pi) - 1):.4f})")


def test_criterion_02_isometry_suite(report_criterion):
    rng = np.random.default_rng(2)
    worst, failures = 0.0, 0
    for k in range(10_000):
        n = 2 + k % 3
        T = random_motion(n, rng)
        x, y = _ball_points(rng, 2, n, 0.9)
        err = abs(hyp_distance(apply(T, x), apply(T, y)) - hyp_distance(x, y))
        worst = max(worst, err)
        failures += err >= 1e-9
    assert report_criterion(2, failures == 0, f"10000 trials, worst error {worst:.2e}, failures {failures}")


def _ball_points(rng, k, n, radius):
    u = rng.normal(size=(k, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return u * radius * rng.uniform(size=(k, 1)) ** (1.0 / n)


def test_criterion_03_weighted_infimum_oracle(frozen, report_criterion):
    worst_oracle, worst_extremizer = 0.0, 0.0
    for case in frozen["weighted_inf"]:
        space = modulus.DiscreteMeasureSpace(case["mu"], case["phi"])
        value, alpha = modulus.weighted_inf_integral(space, case["q"])
        worst_oracle = max(worst_oracle, abs(value - case["oracle"]) / value)
        worst_extremizer = max(worst_extremizer, abs(space.objective(alpha, case["q"]) - value) / value)
    ok = len(frozen["weighted_inf"]) == 200 and worst_oracle <= 1e-3 and worst_extremizer <= 1e-10
    assert report_criterion(3, ok, f"200 spaces, oracle rel gap {worst_oracle:.2e}, "
                                   f"extremizer rel gap {worst_extremizer:.2e}")


def test_criterion_04_fubini_sandwich(report_criterion):
    rows, ok = [], True
    for n in (2, 3):
        nbhd = make_neighborhood(trivial_group(n), np.zeros(n), 0.5)
        c = nbhd.center.rep
        for r0 in (0.25, 0.5):
            fields = [measures.constant_field(1.0, c), measures.indicator_annulus(c, r0 / 4, r0 / 2),
                      measures.log_field(c, 2 * math.e * r0)]
            for k, Q in enumerate(fields):
                res = measures.fubini_sandwich(nbhd, r0, Q, seed=100 + k)
                ok = ok and res.inside and res.volume.rel_err < 0.01
                rows.append(res.volume.rel_err)
    assert report_criterion(4, ok, f"{len(rows)} cases inside bracket, max MC rel err {max(rows):.2e}")


def test_criterion_05_extremal_weight_sandwich(report_criterion):
    r1, r2, ok, count, tightest = 0.3, 0.9, True, 0, math.inf
    for n in (2, 3):
        nbhd = make_neighborhood(trivial_group(n), np.zeros(n), 1.0)
        c = nbhd.center.rep
        for Q in (measures.constant_field(1.0, c), measures.log_field(c, 2 * math.e * r2)):
            consts = measures.fubini_constants(nbhd, r2, [measures.constant_field(1.0, c), Q], budget=100_000)
            e0 = modulus.eta0_weight(modulus.q_profile_of(nbhd, Q), r1, r2, n)
            w = r2 - r1
            etas = {"eta0": e0,
                    "uniform": lambda r: np.full(np.shape(r), 1.0 / w),
                    "triangular": lambda r: np.maximum(0.0, 2 / w * (1 - np.abs(2 * (np.asarray(r) - 0.6) / w)))}
            out = modulus.sandwich_margins(nbhd, Q, r1, r2, etas, consts)
            for row in out["rows"].values():
                ok = ok and row["ordered"]
                count += 1
                tightest = min(tightest, row["middle"] / row["left"], row["right"] / row["middle"])
    assert report_criterion(5, ok, f"{count} orderings, tightest ratio {tightest:.6f}")


def test_criterion_06_example_distortion_bound(report_criterion):
    worst_excess, worst_glue, ok = -math.inf, 0.0, True
    for n in (2, 3):
        for m in (2, 3, 10, 100):
            rep = example_distortion_check(ExampleFamilyConfig(n=n, m=m), 100_000, seed=m)
            worst_excess = max(worst_excess, rep.max_excess)
            worst_glue = max(worst_glue, rep.glue_mismatch)
            ok = ok and rep.max_excess <= 1e-9 and rep.glue_mismatch < 1e-12
    assert report_criterion(6, ok, f"max K_O^(n-1) - Q {worst_excess:.2e}, gluing mismatch {worst_glue:.2e}")


def test_criterion_07_divergence_criterion(tmp_path, report_criterion):
    import json
    out = tmp_path / "out"
    assert main(["run", str(CONFIGS / "divergence_q1.json"), "--out", str(out)]) == 0
    assert main(["run", str(CONFIGS / "divergence_convergent.json"), "--out", str(out)]) == 0
    q1 = json.loads((out / "divergence_q1.json").read_text())
    conv = json.loads((out / "divergence_convergent.json").read_text())
    rows = [line.split(",") for line in (out / "divergence_q1.csv").read_text().splitlines()[1:]]
    tail = [float(r[2]) for r in rows[-10:]]
    per_halving_ok = min(tail) >= 0.5
    ok = (q1["outputs"]["verdict"] == "divergent" and per_halving_ok
          and conv["outputs"]["verdict"] == "convergent")
    assert report_criterion(
        7, ok,
        f"Q1 verdict {q1['outputs']['verdict']}, increments per halving over the last 10 halvings "
        f"{min(tail):.3f}..{max(tail):.3f} (need >= 0.5); counterexample verdict {conv['outputs']['verdict']}")


def test_criterion_08_equicontinuity(report_criterion):
    for n in (2, 3):
        tab = equicontinuity_profile(ExampleFamilyConfig(n=n), range(2, 51), [0.5, 0.25, 0.1, 0.05, 0.01],
                                     directions=64 if n == 2 else 256)
        smallest_ok = tab.displacement[-1] <= tab.bound[-1] + 1e-9
        ok = tab.monotone and smallest_ok
        if not ok:
            break
    assert report_criterion(8, ok, f"m=2..50, nonincreasing {tab.monotone}, at delta=0.01 "
                                   f"{tab.displacement[-1]:.3e} <= {tab.bound[-1]:.3e}")


def test_criterion_09_dilatation_branches(report_criterion):
    branch_ok = (outer_dilatation(np.eye(3)) == 1.0 and outer_dilatation(np.zeros((3, 3))) == 1.0
                 and outer_dilatation(np.diag([1.0, 0.0])) == math.inf
                 and outer_dilatation(np.array([[1.0, 2.0], [2.0, 4.0]])) == math.inf)
    rng = np.random.default_rng(9)
    low = math.inf
    for k in range(10_000):
        n = 2 + k % 3
        J = rng.normal(size=(n, n))
        if abs(np.linalg.det(J)) < 1e-12:
            continue
        low = min(low, outer_dilatation(J))
    ok = branch_ok and low >= 1.0
    assert report_criterion(9, ok, f"branches {branch_ok}, min K_O over 10000 random matrices {low:.6f}")


@pytest.mark.parametrize("name", ["fubini_n2.json"])
def test_criterion_10_determinism(tmp_path, name, report_criterion):
    bodies = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["run", str(CONFIGS / name), "--out", str(out), "--seed", "17"]) == 0
        bodies.append((out / name.replace(".json", ".csv")).read_bytes())
    others = []
    for cfg in ("ring_modulus_n2.json", "example7_distortion.json"):
        pair = []
        for run in ("c", "d"):
            out = tmp_path / run
            assert main(["run", str(CONFIGS / cfg), "--out", str(out)]) == 0
            pair.append((out / cfg.replace(".json", ".csv")).read_bytes())
        others.append(pair[0] == pair[1])
    ok = bodies[0] == bodies[1] and all(others)
    assert report_criterion(10, ok, f"byte-identical CSVs for fubini (seed 17), ring modulus, example distortion: {ok}")
