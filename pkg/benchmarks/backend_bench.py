#!/usr/bin/env python3
"""Time the compiled rational backend against the pure-Python fallback.

The package picks gmpy2's mpq at import time when it is installed and falls
back to fractions.Fraction otherwise; LIPCHECK_PURE_RATIONAL=1 forces the
fallback.  Because the choice is frozen at import, the only honest way to
compare both inside one run is to re-invoke this script in a subprocess with
the override set.  That is what the default mode does:

    python3 benchmarks/backend_bench.py

Workloads (all exact arithmetic, all seeded):

* validate   -- triangle-inequality sweep over a 48-point catalog truncation
* lip-norm   -- Lipschitz norm of every battery combination of a family
* free-lp    -- free-space norm LP solves with dual witnesses on random spaces

Pass --json to emit a single machine-readable line instead of the table;
the comparison mode uses that internally.
"""

import argparse
import json
import os
import random
import subprocess
import sys
import time

from lipcheck.embeddings import standard_battery, standard_family
from lipcheck.freespace import free_element, free_norm_lp
from lipcheck.lipfun import combine, lip_norm
from lipcheck.metric import catalog, make_space, truncate, validate
from lipcheck.rational import BACKEND, rat

BENCH_SEED = 20260815
VALIDATE_N = 48
VALIDATE_REPEAT = 3
LIP_FAMILY_N = 24
FREE_SPACE_POINTS = 8
FREE_ELEMENTS = 24


def _random_space(rng, n):
    # Seed a symmetric rational matrix, then take its min-plus closure so the
    # triangle inequality holds by construction.
    d = [[rat(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            d[i][j] = d[j][i] = rat(rng.randint(1, 12), rng.randint(1, 3))
    for k in range(n):
        for i in range(n):
            for j in range(n):
                via = d[i][k] + d[k][j]
                if via < d[i][j]:
                    d[i][j] = via
    return make_space(d, name="bench-random")


def bench_validate():
    model = catalog("example48")
    space = truncate(model, VALIDATE_N)
    start = time.perf_counter()
    for _ in range(VALIDATE_REPEAT):
        report = validate(space)
        assert report.passed
    return time.perf_counter() - start


def bench_lip_norm():
    built = standard_family("thm34", N=LIP_FAMILY_N)
    fns = built.functions
    coeffs_set = standard_battery(len(fns))
    start = time.perf_counter()
    acc = rat(0)
    for coeffs in coeffs_set:
        g = combine(fns, coeffs)
        acc += lip_norm(g)
    assert acc > 0
    return time.perf_counter() - start


def bench_free_lp():
    rng = random.Random(BENCH_SEED)
    jobs = []
    for _ in range(FREE_ELEMENTS):
        space = _random_space(rng, FREE_SPACE_POINTS)
        rows = rng.sample(range(1, FREE_SPACE_POINTS), 4)
        weights = {r: rat(rng.randint(-8, 8), rng.randint(1, 5)) for r in rows}
        if all(w == 0 for w in weights.values()):
            weights[rows[0]] = rat(1)
        jobs.append(free_element(space, weights))
    start = time.perf_counter()
    for elem in jobs:
        result = free_norm_lp(elem)
        assert result.value >= 0
    return time.perf_counter() - start


WORKLOADS = (
    ("validate", bench_validate),
    ("lip-norm", bench_lip_norm),
    ("free-lp", bench_free_lp),
)


def run_suite():
    timings = {}
    for name, fn in WORKLOADS:
        timings[name] = fn()
    return {"backend": BACKEND, "seed": BENCH_SEED, "timings": timings}


def run_comparison():
    here = run_suite()
    env = dict(os.environ)
    env["LIPCHECK_PURE_RATIONAL"] = "1"
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--json"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    pure = json.loads(proc.stdout)
    if here["backend"] == pure["backend"]:
        print("gmpy2 is not installed; both runs used the %s backend."
              % here["backend"])
    print("workload     %10s [s] %10s [s]   ratio" % (here["backend"], pure["backend"]))
    for name, _ in WORKLOADS:
        a = here["timings"][name]
        b = pure["timings"][name]
        ratio = b / a if a > 0 else float("inf")
        print("%-12s %14.4f %14.4f   %5.2fx" % (name, a, b, ratio))
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--json",
        action="store_true",
        help="run the suite under the current backend and print one JSON line",
    )
    args = parser.parse_args(argv)
    if args.json:
        print(json.dumps(run_suite(), sort_keys=True))
        return 0
    return run_comparison()


if __name__ == "__main__":
    sys.exit(main())
