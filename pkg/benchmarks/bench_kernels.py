"""Compare the compiled and pure-Python density-matrix kernels.

Times one training step (the 2N + 1 shifted parameter rows over the three
class-summed inputs) for each circuit, and checks both backends agree.

    python3 benchmarks/bench_kernels.py [--repeat 20]
"""

import argparse
import time

import numpy as np

from qsd import _kernels_py, kernels
from qsd.ansatz import Discriminator
from qsd.experiments import Objective, TrainConfig, initial_parameters, training_set
from qsd.optim import shifted_parameters


def step_rows(cfg):
    thetas = initial_parameters(cfg)
    return np.vstack([thetas[None, :], shifted_parameters(thetas)])


def time_backend(obj, rows, run_program, repeat):
    original = kernels.run_program
    kernels.run_program = run_program
    try:
        obj.breakdown(rows)
        start = time.perf_counter()
        for _ in range(repeat):
            cost = obj.breakdown(rows)[0]
        return (time.perf_counter() - start) / repeat, cost
    finally:
        kernels.run_program = original


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--noise", type=float, default=0.01)
    args = parser.parse_args()
    if kernels.BACKEND != "cython":
        print("compiled extension unavailable; only the Python backend can be timed")
    print(f"{'circuit':<8}{'rows':>6}{'cython ms':>12}{'python ms':>12}{'speedup':>10}{'max diff':>12}")
    for circuit in ("short", "long"):
        cfg = TrainConfig(circuit=circuit, noise=args.noise)
        obj = Objective(cfg.kind, cfg.noise, training_set(cfg), cfg.cost_params)
        rows = step_rows(cfg)
        t_py, c_py = time_backend(obj, rows, _kernels_py.run_program, args.repeat)
        if kernels.BACKEND == "cython":
            t_cy, c_cy = time_backend(obj, rows, kernels.run_program, args.repeat)
            diff = float(np.max(np.abs(c_cy - c_py)))
            print(f"{circuit:<8}{len(rows):>6}{t_cy * 1e3:>12.2f}{t_py * 1e3:>12.2f}{t_py / t_cy:>10.1f}{diff:>12.1e}")
        else:
            print(f"{circuit:<8}{len(rows):>6}{'-':>12}{t_py * 1e3:>12.2f}{'-':>10}{'-':>12}")


if __name__ == "__main__":
    main()
