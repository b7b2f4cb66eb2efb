"""Exit criteria, one test per criterion at its stated tolerance.

A PASS/FAIL line per criterion is printed in the pytest terminal summary.
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, random_dataset, random_joint, window_joint
from ditraffic import (
    Coupling,
    DeviceProfile,
    EventDataset,
    GeneratorConfig,
    JointDistribution,
    VariableSelector,
    di_matrix,
    entropy_eval_count,
    estimate_joint,
    evaluate,
    full_di_oracle,
    generate,
    marginalize,
    paper_scenario_config,
    pairwise_di_from_joint,
    train,
)
from ditraffic.cli import main
from ditraffic.predictor import build_model, compute_di_matrices

SEEDS = range(20)


def record(name, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, detail


def test_c01_di_bounds():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    raw = [pairwise_di_from_joint(random_joint(rng, sparse=n % 3 == 0)).raw_di_bits for n in range(1000)]
    elapsed = time.perf_counter() - t0
    lo, hi = min(raw), max(raw)
    ok = lo >= -1e-9 and hi <= 2 + 1e-9 and elapsed < 5
    record("C1 DI in [0, 2] over 1000 exact tables", ok, f"min={lo:.3g} max={hi:.6f} time={elapsed:.2f}s")


def test_c02_deterministic_endpoint():
    joint = window_joint({(a, b, a, b): 0.25 for a in (0, 1) for b in (0, 1)})
    di = pairwise_di_from_joint(joint).di_bits
    record("C2 copy of uniform pair gives 2 bits", abs(di - 2.0) <= 1e-12, f"DI={di!r}")


def test_c03_no_information_endpoint():
    rng = np.random.default_rng(3)
    exact = []
    for _ in range(100):
        px, py = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
        # mask = x pair | y pair << 2
        exact.append(pairwise_di_from_joint(JointDistribution(np.outer(py, px).ravel())).di_bits)
    exact_ok = max(exact) <= 1e-12

    below = 0
    worst = 0.0
    for seed in SEEDS:
        L = 12
        cfg = GeneratorConfig(
            L, 10_000, (DeviceProfile("X", frozenset(range(1, L + 1))), DeviceProfile("Y", frozenset(range(1, L + 1)))), seed
        )
        ds = generate(cfg)
        m = max(di_matrix(ds, "X", "Y").max(), di_matrix(ds, "Y", "X").max())
        worst = max(worst, m)
        below += m < 0.05
    ok = exact_ok and below >= 19
    record(
        "C3 independence gives 0 bits",
        ok,
        f"exact max={max(exact):.2e}; estimated max-over-cells < 0.05 in {below}/20 seeds (worst {worst:.4f})",
    )


def test_c04_oracle_equivalence():
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    gaps = []
    for _ in range(100):
        joint = JointDistribution(rng.dirichlet(np.ones(16)))
        gaps.append(abs(full_di_oracle(joint) - pairwise_di_from_joint(joint).raw_di_bits))
    elapsed = time.perf_counter() - t0
    ok = max(gaps) <= 1e-10 and elapsed < 2
    record("C4 brute-force DI equals closed form", ok, f"max gap={max(gaps):.2e} time={elapsed:.2f}s")


@pytest.fixture(scope="module")
def scenario_runs():
    t0 = time.perf_counter()
    runs = []
    for seed in SEEDS:
        ds = generate(paper_scenario_config(10_000, seed=seed))
        runs.append({pair: di_matrix(ds, *pair) for pair in [("X", "Y"), ("Y", "X"), ("X", "Z"), ("X", "T")]})
    return runs, time.perf_counter() - t0


def test_c05a_x_to_y_exceeds_y_to_x(scenario_runs):
    runs, elapsed = scenario_runs
    max_wins = sum(r["X", "Y"].max() > r["Y", "X"].max() for r in runs)
    sum_wins = sum(r["X", "Y"].total() > r["Y", "X"].total() for r in runs)
    ok = max_wins >= 19 and sum_wins >= 19 and elapsed < 60
    record(
        "C5a max and sum of DI(X->Y) exceed DI(Y->X)",
        ok,
        f"max holds {max_wins}/20, sum holds {sum_wins}/20, time={elapsed:.1f}s",
    )


def test_c05b_x_to_z_exceeds_x_to_t(scenario_runs):
    runs, elapsed = scenario_runs
    wins = sum(r["X", "Z"].max() > r["X", "T"].max() for r in runs)
    record("C5b max DI(X->Z) > max DI(X->T)", wins >= 19 and elapsed < 60, f"holds {wins}/20, time={elapsed:.1f}s")


def test_c05c_peak_lags(scenario_runs):
    runs, elapsed = scenario_runs
    z = sum(r["X", "Z"].peak_lag() == 3 for r in runs)
    t = sum(r["X", "T"].peak_lag() == 2 for r in runs)
    ok = z >= 19 and t >= 19 and elapsed < 60
    record("C5c DI(X->Z) peaks at lag 3, DI(X->T) at lag 2", ok, f"Z {z}/20, T {t}/20")


def test_c06_marginalization_consistency():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(50):
        ds = random_dataset(rng, devices=3, events=int(rng.integers(1, 200)), slots=6, p=rng.uniform(0.05, 0.95))
        pool = [VariableSelector(d, s) for d in ds.device_ids for s in range(1, 7)]
        n = int(rng.integers(1, 7))
        sel = [pool[j] for j in rng.choice(len(pool), n, replace=False)]
        keep = sorted(rng.choice(n, int(rng.integers(1, n + 1)), replace=False).tolist())
        a = marginalize(estimate_joint(ds, sel), keep).probs
        b = estimate_joint(ds, [sel[j] for j in keep]).probs
        worst = max(worst, float(np.max(np.abs(a - b))))
    record("C6 marginal of estimate equals direct estimate", worst <= 1e-12, f"max gap={worst:.2e}")


def test_c07_prediction_recall():
    model = train(generate(paper_scenario_config(10_000, seed=7)))
    report = evaluate(model, generate(paper_scenario_config(2_000, seed=2_000_007)), confidence_floor=0.0)
    z, t = report.per_device["Z"], report.per_device["T"]
    ok = abs(z.recall - 0.80) <= 0.05 and abs(t.recall - 0.20) <= 0.05
    record(
        "C7 recall Z = 0.80 +/- 0.05, T = 0.20 +/- 0.05",
        ok,
        f"recall Z={z.recall:.3f} T={t.recall:.3f} (precision Z={z.precision:.3f} T={t.precision:.3f})",
    )


def test_c08_threshold_monotonicity():
    ds = generate(paper_scenario_config(10_000, seed=8))
    mats = compute_di_matrices(ds)
    eps = [0, 0.01, 0.05, 0.2, 1.0]
    models = [build_model(mats, ds.device_ids, ds.slots_per_event, e) for e in eps]
    sizes = [sum(len(cs) for cs in m.causality_sets.values()) for m in models]
    nested = all(
        set(hi.causality_sets[d].entries) <= set(lo.causality_sets[d].entries)
        for lo, hi in zip(models, models[1:])
        for d in ds.device_ids
    )
    record("C8 causality sets nest as threshold rises", nested, f"entry counts {sizes}")


def ten_device_config(seed):
    profiles = [
        DeviceProfile("d0", frozenset({1, 2, 3, 4}), 0.5),
        DeviceProfile("d1", frozenset({3, 4, 5, 6, 7}), 0.4),
        DeviceProfile("d2", frozenset({6, 7, 8, 9}), 0.6),
        DeviceProfile("d3", frozenset({1, 5, 9, 12}), 0.5),
        DeviceProfile("d4", frozenset(range(1, 13)), 0.3),
        DeviceProfile("d5", coupling=Coupling("d0", 2, 0.9)),
        DeviceProfile("d6", coupling=Coupling("d0", 4, 0.5)),
        DeviceProfile("d7", coupling=Coupling("d1", 1, 0.7)),
        DeviceProfile("d8", coupling=Coupling("d5", 3, 0.6)),
        DeviceProfile("d9", coupling=Coupling("d2", 2, 0.3)),
    ]
    return GeneratorConfig(12, 10_000, tuple(profiles), seed)


def test_c09_complexity_audit():
    counts = {L: entropy_eval_count(L) for L in (2, 5, 12)}
    counts_ok = all(c == 5 * L * (L - 1) // 2 for L, c in counts.items())
    ds = generate(ten_device_config(9))
    t0 = time.perf_counter()
    train(ds)
    elapsed = time.perf_counter() - t0
    ok = counts_ok and elapsed < 120
    record("C9 entropy count 5L(L-1)/2 and M=10 training time", ok, f"counts={counts} train={elapsed:.1f}s")


def _pipeline(root):
    data, out = root / "data", root / "out"
    assert main(["generate", "--scenario", "paper", "--events", "3000", "--seed", "11", "-o", str(data)]) == 0
    assert main(["train", "--data", str(data / "events.csv"), "-o", str(out)]) == 0
    assert main(["predict", "--model", str(out / "model.json"), "--trigger", "X", "--slot", "3", "--json", str(out / "pred.json")]) == 0
    files = sorted(p for p in root.rglob("*") if p.suffix in {".csv", ".json"})
    return {p.relative_to(root): p.read_bytes() for p in files}


def test_c10_determinism(tmp_path):
    a = _pipeline(tmp_path / "a")
    b = _pipeline(tmp_path / "b")
    ok = a.keys() == b.keys() and all(a[k] == b[k] for k in a)
    record("C10 pipeline outputs byte-identical across runs", ok, f"{len(a)} files compared")
