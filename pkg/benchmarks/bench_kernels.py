"""Time the hot kernels under the numba and numpy backends and check they agree.

Usage: python benchmarks/bench_kernels.py [--n 200000] [--repeat 5]

The numpy run happens in a child process with ARTIFACT_DISABLE_NUMBA=1,
since the backend is fixed at import time.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np


def measure(n, repeat):
    from artifact import kernels as kn

    rng = np.random.default_rng(0)
    t = np.sort(rng.uniform(1e-6, 10.0, n))
    x = np.concatenate(([0.0], np.cumsum(rng.uniform(0.5, 1.5, n - 1)))) / n
    y = np.sin(x)
    W, J = kn.cumint_weights(x)
    P = 1.0 + x
    S = np.cumsum(y) / n
    qw = kn.total_weights(W, J, n)
    cases = {
        "phi_power": lambda: kn.phi_family(kn.PHI_POWER, 3.0, 3.0, t),
        "phi_inv_mc": lambda: kn.phi_inv_family(kn.PHI_MC, 2.0, 2.0, t / 11.0),
        "phi_inv_rational": lambda: kn.phi_inv_family(kn.PHI_RATIONAL, 3.0, 2.0, t),
        "cumint_weights": lambda: kn.cumint_weights(x),
        "cumint_apply": lambda: kn.cumint_apply(W, J, y),
        "delta_bisect": lambda: kn.delta_bisect(kn.PHI_POWER, 2.0, 2.0, P, S, qw, 0.5, -10.0, 10.0),
    }
    out = {"backend": kn.backend(), "times": {}, "checks": {}}
    for name, fn in cases.items():
        fn()  # compile / warm up
        out["times"][name] = min(timeit.repeat(fn, number=1, repeat=repeat))
        res = fn()
        parts = res if isinstance(res, tuple) else (res,)
        v = np.concatenate([np.atleast_1d(np.asarray(a, dtype=float)).ravel() for a in parts])
        out["checks"][name] = [float(np.sum(v)), float(v[0]), float(v[-1])]
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.child:
        print(json.dumps(measure(args.n, args.repeat)))
        return 0
    runs = []
    for disable in ("0", "1"):
        env = dict(os.environ, ARTIFACT_DISABLE_NUMBA=disable)
        res = subprocess.run([sys.executable, __file__, "--child", "--n", str(args.n), "--repeat", str(args.repeat)],
                             env=env, capture_output=True, text=True, check=True)
        runs.append(json.loads(res.stdout.strip().splitlines()[-1]))
    a, b = runs
    print(f"{'kernel':<18} {a['backend'] + ' [s]':>14} {b['backend'] + ' [s]':>14} {'speedup':>9} {'max rel diff':>13}")
    worst = 0.0
    for name in a["times"]:
        ca, cb = np.array(a["checks"][name]), np.array(b["checks"][name])
        rel = float(np.max(np.abs(ca - cb) / np.maximum(1e-300, np.abs(cb))))
        worst = max(worst, rel)
        print(f"{name:<18} {a['times'][name]:>14.6f} {b['times'][name]:>14.6f} "
              f"{b['times'][name] / a['times'][name]:>9.2f} {rel:>13.2e}")
    print(f"backends agree to {worst:.2e} (relative)")
    return 0 if worst < 1e-9 else 1


if __name__ == "__main__":
    sys.exit(main())
