"""Compiled vs pure-Python kernels: wall time and agreement.

    python benchmarks/bench_kernels.py [--repeat N]

Times the probe trace kernel (one default-size trace beside a victim)
and one forward + backward pass of the conv block on a training-sized
batch, for every available implementation.
"""

import argparse
import timeit

import numpy as np

from linkprint import kernels, rng as rngmod
from linkprint.linksim import LinkConfig
from linkprint.probe import ProbeConfig, run_trace, trace_draws
from linkprint.victims import stock_profiles


def trace_case():
    link, probe = LinkConfig(), ProbeConfig()
    profile = stock_profiles().by_code("F")
    victim_rng, probe_rng = rngmod.trace_streams(0, 0, 0)
    draws = trace_draws(link, profile, probe, victim_rng, probe_rng)
    return {name: (lambda name=name: run_trace(link, profile, probe, draws, impl=name))
            for name in kernels.IMPLEMENTATIONS}


def conv_case(dtype):
    rng = np.random.default_rng(0)
    n, length, c, width = 210, 100, 8, 5
    X = rng.random((n, length)).astype(dtype)
    W = rng.normal(size=(c, width)).astype(dtype)
    b, beta = np.zeros(c, dtype), np.zeros(c, dtype)
    gamma, rv = np.ones(c, dtype), np.ones(c, dtype)
    dA = rng.normal(size=(n, c, length - width + 1)).astype(dtype)

    def step(mod):
        zhat, a, _, _, inv = mod.forward(X, W, b, gamma, beta, b, rv, True, 1e-5)
        return (a,) + tuple(mod.backward(X, W, gamma, zhat, a, inv, dA))

    return {name: (lambda mod=mod: step(mod)) for name, mod in kernels.CONV_IMPLEMENTATIONS.items()}


def bench(title, case, repeat):
    outs, times = {}, {}
    for name, fn in case.items():
        outs[name] = fn()
        times[name] = min(timeit.repeat(fn, number=1, repeat=repeat))
    ref = outs["python"]
    print(f"{title}")
    for name in case:
        diff = max(float(np.max(np.abs(np.asarray(x, float) - np.asarray(r, float))))
                   for x, r in zip(outs[name], ref))
        speed = times["python"] / times[name]
        print(f"  {name:8s} {times[name] * 1e3:9.2f} ms  x{speed:6.1f}  max |diff| {diff:.2e}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    print(f"selected backend: {kernels.BACKEND}")
    bench("probe trace (defaults, victim F)", trace_case(), args.repeat)
    bench("conv block float64 (210 x 100, fwd + bwd)", conv_case("float64"), args.repeat)
    bench("conv block float32 (210 x 100, fwd + bwd)", conv_case("float32"), args.repeat)


if __name__ == "__main__":
    main()
