"""Regenerate tests/data/frozen_oracles.json from the independent oracles."""

import json
import math
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))
import oracles  # noqa: E402


def weighted_inf_cases(count=200, seed=7):
    rng = np.random.default_rng(seed)
    cases = []
    for i in range(count):
        k = int(rng.integers(1, 9))
        mu = rng.uniform(0.05, 2.0, size=k)
        phi = rng.uniform(0.1, 5.0, size=k)
        q = [1.5, 2.0, 3.0][i % 3]
        cases.append({"mu": mu.tolist(), "phi": phi.tolist(), "q": q,
                      "oracle": oracles.simplex_search(mu, phi, q)})
    return cases


def singular_cases(count=50, seed=11):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        J = rng.normal(size=(3, 3))
        out.append({"J": J.tolist(), "norm": oracles.largest_singular_value_bisection(J),
                    "det": oracles.det_by_permutations(J)})
    return out


def volume_cases():
    out = []
    for n in (2, 3):
        for r0 in (0.25, 0.5):
            out.append({"n": n, "r0": r0, "field": "constant",
                        "volume": oracles.radial_volume(n, r0, lambda t: np.ones_like(t))})
            out.append({"n": n, "r0": r0, "field": "log_fmo_C2",
                        "volume": oracles.radial_volume(n, r0, lambda t: np.log(2.0 / t))})
    return out


def main():
    data = {
        "weighted_inf": weighted_inf_cases(),
        "singular": singular_cases(),
        "volume": volume_cases(),
        "ring": [{"n": n, "ratio": math.e, "value": oracles.ring_modulus(math.e, n)} for n in (2, 3, 4)],
    }
    path = ROOT / "tests" / "data" / "frozen_oracles.json"
    path.write_text(json.dumps(data, indent=1) + "\n")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
