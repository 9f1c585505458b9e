"""Personalized-threshold benchmark: linear vs Gaussian kernel.

For each scenario and training size, fits the kernel machine with the ramp
surrogate (width 0.1), selecting the penalty by 5-fold cross-validation on
the standard 61-point grid, and reports mean test error over replications.
Desk-scale by default; raise --reps/--sizes to match the full study.
"""

import argparse

from mcid.simulate import SimulationScenario, run_replications


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenarios", nargs="+", default=["pers1", "pers2", "pers3"])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 250])
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=2)
    args = ap.parse_args()

    print(f"{'scenario':>9} {'n':>5} {'kernel':>9} {'mean MCE':>9} {'se':>8} {'fails':>6}")
    for sid in args.scenarios:
        for n in args.sizes:
            sc = SimulationScenario(sid, n_train=n, n_test=2000)
            for method in ("personalized-linear", "personalized-gaussian"):
                rep = run_replications(sc, method, reps=args.reps, base_seed=args.seed,
                                       delta=0.1, lam="cv", n_jobs=args.jobs)
                kernel = method.split("-")[1]
                print(f"{sid:>9} {n:>5} {kernel:>9} {rep.mean_mce:>9.4f} "
                      f"{(rep.se_mce or 0.0):>8.4f} {len(rep.failures):>6}")


if __name__ == "__main__":
    main()
