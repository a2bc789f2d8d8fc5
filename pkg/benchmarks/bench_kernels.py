"""Time the numpy and Cython kernels on the hot paths of training.

    python benchmarks/bench_kernels.py [--repeat N]

Reports the median time of a full learn step (forward on S and S', masked
backward, Adam) at minibatch 128 on the default network, and of a single
greedy forward as used by epsilon-greedy action selection.
"""

import argparse
import statistics
import timeit

import numpy as np

from dqlap import _backend
from dqlap.agent import AgentConfig, Batch, DDQNAgent
from dqlap.network import build


def bench(backend, repeat):
    rng = np.random.default_rng(0)
    agent = DDQNAgent(31, AgentConfig(), backend=backend)
    batch = Batch(rng.random((128, 31)), rng.integers(0, 2, 128), rng.choice([-1.0, 1.0], 128),
                  rng.random((128, 31)), np.zeros(128, dtype=bool))
    net = build(31, backend=backend)
    state = rng.random(31)

    def median(fn, number):
        return statistics.median(timeit.repeat(fn, number=number, repeat=repeat)) / number

    return {
        "learn step (batch 128)": median(lambda: agent.learn_step(batch), 200),
        "single forward": median(lambda: net.forward(state), 2000),
        "forward (batch 900)": median(lambda: net.forward(batch.states.repeat(7, axis=0)[:900]), 200),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=7)
    args = ap.parse_args()
    backends = ["python"]
    try:
        _backend.get("cython")
        backends.append("cython")
    except ImportError:
        print("compiled kernels not built; timing the numpy backend only")
    results = {b: bench(b, args.repeat) for b in backends}
    width = max(len(k) for k in results["python"])
    print(f"{'kernel':<{width}}  " + "  ".join(f"{b:>10}" for b in backends)
          + ("  speedup" if len(backends) > 1 else ""))
    for key in results["python"]:
        cells = "  ".join(f"{results[b][key] * 1e6:8.1f}us" for b in backends)
        extra = f"  {results['python'][key] / results['cython'][key]:6.2f}x" if len(backends) > 1 else ""
        print(f"{key:<{width}}  {cells}{extra}")


if __name__ == "__main__":
    main()
