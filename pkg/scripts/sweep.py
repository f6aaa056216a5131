"""MAP over a grid of theta and subspace dimension k on the synthetic benchmark."""

import argparse

import numpy as np

from ds2l.data import generate_synthetic, split
from ds2l.model import Hyperparams, project, train
from ds2l.retrieval import evaluate_projections


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--thetas", type=float, nargs="+", default=[1e-5, 1e-3, 1e-1, 1, 10, 1e3, 1e5])
    ap.add_argument("--ks", type=int, nargs="+", default=[5, 10, 15])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ds = generate_synthetic(n_per_class=40, c=5, d1=20, d2=15, noise_sigma=0.1, seed=7)
    tr, te = split(ds, 0.75, seed=7)
    print("theta," + ",".join(f"k={k}" for k in args.ks))
    for theta in args.thetas:
        row = []
        for k in args.ks:
            m = train(tr, Hyperparams(k=k, theta=theta), seed=args.seed)
            ev = evaluate_projections(project(m, te.modality1, 1), project(m, te.modality2, 2), te.labels)
            row.append(ev["MAP_AVG"])
        print(f"{theta:g}," + ",".join(f"{v:.4f}" for v in row))


if __name__ == "__main__":
    main()
