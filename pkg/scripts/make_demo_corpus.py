"""Write N symbols drawn from a latent model's marginal, one integer per line.

    python3 scripts/make_demo_corpus.py 100000 corpus.txt --seed 9
"""

import argparse
import random

from flipkit.bbans import load_demo_model, load_model
from flipkit.selftest import sample_marginal


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("n", type=int)
    ap.add_argument("output")
    ap.add_argument("--model", default="demo", help="model JSON path, or 'demo'")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    model = load_demo_model() if args.model == "demo" else load_model(args.model)
    xs = sample_marginal(model, args.n, random.Random(args.seed))
    with open(args.output, "w") as f:
        f.writelines(f"{x}\n" for x in xs)
    print(f"wrote {len(xs)} symbols (V = {model.V}) to {args.output}")


if __name__ == "__main__":
    main()
