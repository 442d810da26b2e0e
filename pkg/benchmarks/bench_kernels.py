#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Covers the two hot kernels (ChaCha block generation, Jacobi sweeps) and an
end-to-end attack round loop. Both backends produce bit-identical results,
so this is purely a throughput comparison.

Usage: python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from anonvoice import kernels
from anonvoice.attacks import AuthAttackConfig, AuthStrategy, auth_attack
from anonvoice.channel import SynthesisChannel, synth_population
from anonvoice.identity import GenerationMethod, GeneratorConfig, fit_generator


def _time(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_chacha(n_blocks):
    key_words = np.frombuffer(bytes(range(32)), dtype="<u4")
    nonces = np.zeros(n_blocks, dtype=np.uint64)
    counters = np.arange(n_blocks, dtype=np.uint64)
    results = {}
    for backend in kernels.available_backends():
        with kernels.use_backend(backend):
            seconds = _time(lambda: kernels.chacha_blocks(key_words, nonces, counters))
        results[backend] = seconds
        rate = n_blocks * 64 / seconds / 1e6
        print(f"  chacha {n_blocks} blocks [{backend:8s}]: {seconds * 1e3:8.1f} ms "
              f"({rate:7.0f} MB/s)")
    return results


def bench_jacobi(size):
    rng = np.random.default_rng(0)
    matrix = rng.normal(size=(size, size))
    matrix = (matrix + matrix.T) / 2.0
    results = {}
    for backend in kernels.available_backends():
        with kernels.use_backend(backend):
            seconds = _time(lambda: kernels.jacobi_eigh(matrix), repeats=2)
        results[backend] = seconds
        print(f"  jacobi {size}x{size}   [{backend:8s}]: {seconds * 1e3:8.1f} ms")
    return results


def bench_attack(n_trials):
    population, _ = synth_population(40, 30, 1.0, 0.05, 64, seed=11)
    dev, _ = synth_population(100, 5, 1.0, 0.05, 64, seed=101)
    generator = fit_generator(dev, None, GeneratorConfig(gmm_seed=5))
    config = AuthAttackConfig(
        strategy=AuthStrategy.VICTIM_ORIGINAL_VOICE,
        method=GenerationMethod.PCA_GMM,
        n_trials=n_trials,
        channel=SynthesisChannel(0.03, seed=7),
        seed=1,
    )
    reference = None
    for backend in kernels.available_backends():
        with kernels.use_backend(backend):
            start = time.perf_counter()
            report = auth_attack(population, generator, config)
            seconds = time.perf_counter() - start
        if reference is None:
            reference = report.per_trial
        else:
            assert report.per_trial == reference, "backends disagree"
        print(f"  auth attack {n_trials} trials [{backend:8s}]: {seconds:6.2f} s "
              f"({n_trials / seconds:6.0f} trials/s)")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()
    print(f"active backend: {kernels.backend()}; available: {kernels.available_backends()}")
    print("chacha block generation:")
    bench_chacha(20_000 if args.quick else 200_000)
    print("jacobi eigendecomposition:")
    bench_jacobi(96 if args.quick else 256)
    print("end-to-end impersonation attack (identical outputs asserted):")
    bench_attack(500 if args.quick else 5_000)


if __name__ == "__main__":
    main()
