"""Compare the compiled kernels with the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends are called on identical inputs; outputs are checked for
agreement before timings are printed.
"""

import argparse
import timeit

import numpy as np

from adshap import _core
from adshap._core import _fallback
from adshap.detectors import default_config, fit


def cases(rng):
    train = rng.normal(size=(200, 9))
    query = rng.normal(size=(2000, 9))
    det = fit(default_config("IFOREST"), train)
    forest = (det.feature_, det.threshold_split_, det.left_, det.right_, det.leaf_value_, det.roots_)
    # a SHAP batch for one instance is ~2000 coalitions x 50 centroids
    hybrid = rng.normal(size=(20000, 9))
    return {
        "knn_query k=5 (2000 x 200)": (lambda m: m.knn_query(query, train, 5, False)),
        "knn_query k=20 self (200 x 200)": (lambda m: m.knn_query(train, train, 20, True)),
        "iforest_path_lengths 100 trees (20000 rows)": (lambda m: m.iforest_path_lengths(hybrid, *forest)),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _core.BACKEND != "cython":
        print("compiled extension not available; only the fallback can be timed")
    from importlib import import_module

    impls = {"numpy": _fallback}
    if _core.BACKEND == "cython":
        impls["cython"] = import_module("adshap._core._kernels")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<46}" + "".join(f"{k:>12}" for k in impls) + f"{'speedup':>10}")
    for name, call in cases(rng).items():
        outs = [call(m) for m in impls.values()]
        outs = [o if isinstance(o, tuple) else (o,) for o in outs]
        for o in outs[1:]:
            for a, b in zip(outs[0], o):
                np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)
        t = {k: min(timeit.repeat(lambda m=m: call(m), number=1, repeat=args.repeat)) for k, m in impls.items()}
        speed = f"{t['numpy'] / t['cython']:>9.1f}x" if "cython" in t else f"{'':>10}"
        print(f"{name:<46}" + "".join(f"{v * 1e3:>10.1f}ms" for v in t.values()) + speed)


if __name__ == "__main__":
    main()
