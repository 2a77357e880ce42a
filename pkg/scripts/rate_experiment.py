"""Coded rate against its information-theoretic target as N grows.

Two series: plain rANS on the dyadic table [2048, 1024, 512, 512] (target
H = 1.75 bits), and bits-back on the demo latent model (target -ELBO of the
same sample, plus the marginal cross-entropy as a lower reference,
reached by coding with the exact posterior).
"""

import argparse
import math
import random
from collections import Counter

from flipkit.ans import CategoricalTable
from flipkit.bbans import exact_posterior, host_codec, load_demo_model, negative_elbo
from flipkit.selftest import bbans_rate, coded_rate, sample_marginal


def empirical_bits(t: CategoricalTable, xs) -> float:
    total = 1 << t.precision
    return sum(c * -math.log2(t.freqs[s] / total) for s, c in Counter(xs).items()) / len(xs)


def main():
    ap = argparse.ArgumentParser(description="rANS and bits-back rate versus N")
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 1000, 10_000, 100_000])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = random.Random(args.seed)

    t = CategoricalTable(12, (2048, 1024, 512, 512))
    print(f"dyadic rANS, H = {t.entropy():.4f}")
    print(f"{'N':>8}  {'rate':>8}  {'empirical':>9}  {'overhead':>9}  {'64/N':>8}")
    for n in args.sizes:
        xs = rng.choices(range(t.n), weights=t.freqs, k=n)
        rate, emp = coded_rate(t, xs), empirical_bits(t, xs)
        print(f"{n:>8}  {rate:8.4f}  {emp:9.4f}  {rate - emp:9.5f}  {64 / n:8.5f}")

    model = load_demo_model()
    exact = exact_posterior(model)
    print("\nbits-back, demo model (K = 4, V = 8, r = 12)")
    print(f"{'N':>8}  {'rate':>8}  {'-ELBO':>8}  {'gap':>8}  {'exact Q':>8}  {'xent':>8}")
    for n in args.sizes:
        xs = sample_marginal(model, n, rng)
        rate, pred = bbans_rate(host_codec(model), model, xs), negative_elbo(model, xs)
        ex = bbans_rate(host_codec(exact), exact, xs)
        print(f"{n:>8}  {rate:8.4f}  {pred:8.4f}  {rate - pred:+8.4f}  {ex:8.4f}  "
              f"{negative_elbo(exact, xs):8.4f}")


if __name__ == "__main__":
    main()
