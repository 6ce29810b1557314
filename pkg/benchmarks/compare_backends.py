#!/usr/bin/env python3
"""Benchmark the compiled pulse-integrator kernel against the numpy fallback.

Times one dark-state pulse simulation per intensity for every available
backend and prints a comparison table.  The physics output (per-pulse
loss) is printed too, as a cross-check that the backends agree.

    python benchmarks/compare_backends.py [--repeats N] [--csv PATH]
"""

import argparse
import csv
import time

from toptrap._kernels import available_backends
from toptrap.bloch import (
    DensityMatrix,
    PulseSpec,
    _hamiltonian,
    build_level_system,
    stretched_sigma_minus_detuning,
)

INTENSITIES = (1.0, 10.0, 100.0, 1000.0)


def run(repeats: int):
    sys_ = build_level_system(24.0, detuning=stretched_sigma_minus_detuning(24.0))
    rho0 = DensityMatrix.stretched().matrix
    backends = available_backends()
    rows = []
    for intensity in INTENSITIES:
        pulse = PulseSpec.with_impurity("pi", 2e-4, intensity=intensity)
        h = _hamiltonian(sys_, pulse)
        timings = {}
        eps_by_backend = {}
        for name, fn in backends.items():
            fn(h, sys_.decay_rates, sys_.refill, rho0, pulse.duration)  # warm up
            t0 = time.perf_counter()
            for _ in range(repeats):
                _, eps, n_steps = fn(h, sys_.decay_rates, sys_.refill, rho0, pulse.duration)
            timings[name] = (time.perf_counter() - t0) / repeats
            eps_by_backend[name] = eps
        rows.append(
            {
                "intensity_over_Isat": intensity,
                "epsilon": eps_by_backend[min(eps_by_backend)],
                "n_steps": n_steps,
                **{f"ms_{name}": 1e3 * t for name, t in timings.items()},
            }
        )
    return backends, rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=10)
    parser.add_argument("--csv", default=None, help="also write the table to CSV")
    args = parser.parse_args()

    backends, rows = run(args.repeats)
    names = list(backends)
    header = ["I/Isat", "epsilon", "steps"] + [f"{n} (ms)" for n in names]
    if len(names) == 2:
        header.append("speedup")
    print("  ".join(f"{h:>12s}" for h in header))
    for row in rows:
        cells = [
            f"{row['intensity_over_Isat']:12.1f}",
            f"{row['epsilon']:12.3e}",
            f"{row['n_steps']:12d}",
        ]
        cells += [f"{row[f'ms_{n}']:12.2f}" for n in names]
        if len(names) == 2:
            cells.append(f"{row['ms_python'] / row['ms_cython']:11.1f}x")
        print("  ".join(cells))
    if len(names) < 2:
        print("\n(compiled backend not available; showing fallback only)")

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        print(f"\nwrote {args.csv}")


if __name__ == "__main__":
    main()
