"""Entropy-evaluation counts per DI matrix and training time against device count."""

import time

from ditraffic import DeviceProfile, GeneratorConfig, entropy_eval_count, generate, stated_entropy_eval_count, train

print(f"{'L':>4}{'measured':>10}{'5L(L-1)/2':>11}{'5L(L-1)^2':>11}")
for L in (2, 3, 5, 8, 12, 16, 24):
    print(f"{L:>4}{entropy_eval_count(L):>10}{5 * L * (L - 1) // 2:>11}{stated_entropy_eval_count(L):>11}")

print(f"\n{'M':>4}{'pairs':>7}{'train s':>9}{'s/pair':>9}")
for M in (2, 4, 6, 8, 10, 14):
    profiles = tuple(DeviceProfile(f"d{m}", frozenset(range(1 + m % 4, 13 - m % 3))) for m in range(M))
    ds = generate(GeneratorConfig(12, 10_000, profiles, seed=M))
    t0 = time.perf_counter()
    train(ds)
    dt = time.perf_counter() - t0
    pairs = M * (M - 1)
    print(f"{M:>4}{pairs:>7}{dt:>9.2f}{dt / pairs:>9.4f}")
