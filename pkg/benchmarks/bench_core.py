"""Benchmark the compiled kernel core against the NumPy fallback.

Times covariance+gradient assembly and the end-to-end log-marginal-
likelihood gradient (the quantity evaluated once per leapfrog step inside
the NUTS sampler) over a grid of problem sizes.

Usage:
    python benchmarks/bench_core.py [--repeats 200]
"""

import argparse
import time

import numpy as np

from gpbo._core import _ref
from gpbo.gp import Dataset
from gpbo.kernels import KernelFamily
from gpbo.priors import PriorSpec, UnconstrainedPosterior

try:
    from gpbo._core import _fast
except ImportError:
    _fast = None


def time_call(fn, repeats):
    fn()  # warm up
    started = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - started) / repeats


def bench_assembly(repeats):
    rows = []
    rng = np.random.default_rng(0)
    for n, d in [(16, 2), (32, 5), (64, 5), (128, 10), (256, 10)]:
        X = rng.random((n, d))
        ell = rng.uniform(0.2, 1.5, d)
        t_ref = time_call(
            lambda: _ref.matern52_matrix_with_gradients(X, ell, 1.0, True), repeats
        )
        t_fast = (
            time_call(
                lambda: _fast.matern52_matrix_with_gradients(X, ell, 1.0, True),
                repeats,
            )
            if _fast is not None
            else float("nan")
        )
        rows.append(("matern52 K+grads", n, d, t_ref, t_fast))
    return rows


def bench_lml_gradient(repeats):
    """End-to-end posterior gradient via each backend (monkey-swap)."""
    import gpbo._core as core
    import gpbo.gp as gp_mod

    rows = []
    rng = np.random.default_rng(1)
    for n, d in [(16, 2), (32, 5), (64, 5), (128, 10)]:
        from gpbo.kernels import KernelSpec

        spec = KernelSpec(KernelFamily.MATERN52, ard=True, d=d)
        X = rng.random((n, d))
        y = rng.standard_normal(n)
        data = Dataset.standardize(X, y)
        post = UnconstrainedPosterior(spec, PriorSpec(), data)
        z = post.prior_mode_z()

        timings = {}
        for label, impl in (("python", _ref), ("compiled", _fast)):
            if impl is None:
                timings[label] = float("nan")
                continue
            saved = core.lml_grad_contract
            saved_se = core.se_matrix_with_gradients
            saved_m52 = core.matern52_matrix_with_gradients
            core.lml_grad_contract = impl.lml_grad_contract
            core.se_matrix_with_gradients = impl.se_matrix_with_gradients
            core.matern52_matrix_with_gradients = impl.matern52_matrix_with_gradients
            try:
                timings[label] = time_call(lambda: post.value_and_grad(z), repeats)
            finally:
                core.lml_grad_contract = saved
                core.se_matrix_with_gradients = saved_se
                core.matern52_matrix_with_gradients = saved_m52
        rows.append(("posterior grad", n, d, timings["python"], timings["compiled"]))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    if _fast is None:
        print("compiled backend not available; timing the fallback only\n")

    rows = bench_assembly(args.repeats) + bench_lml_gradient(args.repeats)
    header = f"{'benchmark':<18} {'n':>5} {'d':>3} {'python':>12} {'compiled':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label, n, d, t_ref, t_fast in rows:
        speedup = t_ref / t_fast if t_fast == t_fast else float("nan")
        print(
            f"{label:<18} {n:>5} {d:>3} {t_ref * 1e6:>10.1f}us "
            f"{t_fast * 1e6:>10.1f}us {speedup:>7.1f}x"
        )


if __name__ == "__main__":
    main()
