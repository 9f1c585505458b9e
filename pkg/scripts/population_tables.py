"""Population-threshold benchmark across training sizes.

Reproduces the synthetic study: for each scenario and training size, fits the
exact empirical-risk threshold over 100 replications and reports the mean
estimate and mean test error next to the ideal baseline.
"""

import argparse

from mcid.simulate import SimulationScenario, run_replications, true_threshold


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[250, 500, 1000])
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    for sid in ("pop1", "pop2"):
        print(f"\n=== {sid} (ideal threshold {true_threshold(sid):+.3f}) ===")
        print(f"{'n':>6} {'mean c':>9} {'se':>8} {'mean MCE':>9} {'se':>8} {'ideal MCE':>10}")
        for n in args.sizes:
            sc = SimulationScenario(sid, n_train=n, n_test=2000)
            fit = run_replications(sc, "population", reps=args.reps,
                                   base_seed=args.seed, n_jobs=args.jobs)
            ideal = run_replications(sc, "ideal", reps=args.reps,
                                     base_seed=args.seed, n_jobs=args.jobs)
            print(f"{n:>6} {fit.mean_mcid:>+9.4f} {fit.se_mcid:>8.4f} "
                  f"{fit.mean_mce:>9.4f} {fit.se_mce:>8.4f} {ideal.mean_mce:>10.4f}")


if __name__ == "__main__":
    main()
