"""Compare the numba and pure-numpy update kernels.

Each backend runs in its own interpreter (the backend is fixed at import
time by ``MWE_BACKEND``). Both train the same planted corpus with the same
seed, so besides throughput the script reports how far the final
parameters drift apart through floating-point summation order alone.

    python3 benchmarks/bench_kernels.py [--tuples-per-relation N] [--dim D] [--epochs E]
"""
import argparse
import json
import os
import subprocess
import sys
import tempfile
import time

import numpy as np

WORKER = """
import json, sys, time
import numpy as np
from mwe import _accel, kernels
from mwe.corpus import encode_corpus
from mwe.oracle import SynthSpec, synth_corpus
from mwe.trainer import TrainConfig, train
from mwe.vocab import build_vocab

tpr, d, s, epochs, out = int(sys.argv[1]), int(sys.argv[2]), int(sys.argv[3]), int(sys.argv[4]), sys.argv[5]
raw, _ = synth_corpus(SynthSpec(tuples_per_relation=tpr, seed=0))
vocab, rels = build_vocab(raw, 1)
corpus = encode_corpus(raw, vocab, rels)
kernels.warmup()
cfg = TrainConfig(d=d, s=s, eta0=0.075, epochs=epochs, seed=0)
t0 = time.perf_counter()
params, report = train(corpus, cfg, rel_names=rels.relations)
elapsed = time.perf_counter() - t0
np.save(out, np.concatenate([t.ravel() for t in params.tensors()]))
positives = sum(e.positives for e in report.epochs)
print(json.dumps({"backend": _accel.BACKEND, "seconds": elapsed, "positives": positives,
                  "final_loss": report.mean_losses[-1]}))
"""


def run_backend(backend, args, out):
    env = dict(os.environ, MWE_BACKEND=backend)
    argv = [sys.executable, "-c", WORKER, str(args.tuples_per_relation), str(args.dim),
            str(args.local_dim), str(args.epochs), out]
    t0 = time.perf_counter()
    res = subprocess.run(argv, env=env, capture_output=True, text=True, check=True)
    info = json.loads(res.stdout.strip().splitlines()[-1])
    info["wall"] = time.perf_counter() - t0
    return info


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tuples-per-relation", type=int, default=16_667)
    ap.add_argument("--dim", type=int, default=32)
    ap.add_argument("--local-dim", type=int, default=4)
    ap.add_argument("--epochs", type=int, default=2)
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        results = {}
        for backend in ("numba", "numpy"):
            path = os.path.join(tmp, backend + ".npy")
            results[backend] = run_backend(backend, args, path)
            results[backend]["params"] = np.load(path)

    print("backend\tpositives/s\ttrain_s\twall_s\tfinal_loss")
    for name, r in results.items():
        rate = r["positives"] / r["seconds"]
        print(f"{r['backend']}\t{rate:,.0f}\t{r['seconds']:.2f}\t{r['wall']:.2f}\t{r['final_loss']:.6f}")
    speedup = results["numpy"]["seconds"] / results["numba"]["seconds"]
    diff = np.abs(results["numba"]["params"] - results["numpy"]["params"]).max()
    print(f"speedup\t{speedup:.1f}x")
    print(f"max_param_diff\t{diff:.3e}")


if __name__ == "__main__":
    main()
