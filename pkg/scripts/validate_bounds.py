"""Compare the analytic peak-AoI and delay bounds against simulated queues.

Prints, for each load level and threshold, the empirical violation frequency
next to the fixed-exponent bound, the exponent-optimized bound and the delay
bound. Usage: python3 scripts/validate_bounds.py [--packets 100000] [--seed 100]
"""

import argparse
import sys

import numpy as np

from stinqos import harq, simkit, snc
from stinqos.scenario import scenario_from_dict


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description="simulated violation frequencies against the analytic bounds")
    p.add_argument("--packets", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=100)
    p.add_argument("--loads", type=float, nargs="+", default=[0.3, 0.5, 0.7])
    p.add_argument("--theta", type=float, default=0.1)
    args = p.parse_args(argv)

    s = scenario_from_dict({})
    model, hcfg = s.model(), s.harq_config()
    errs = harq.round_error_probs(model, hcfg)
    n = hcfg.sub_block_len
    print(f"round error probabilities {np.array2string(errs, precision=3)}")
    for i, lam in enumerate(args.loads):
        trace = simkit.simulate_aoi_queue(lam, model, hcfg, simkit.SimConfig(seed=args.seed + i, n_packets=args.packets))
        print(f"\nlambda={lam}  mean peak AoI sim {trace.steady('peak_aoi').mean():.3f}  formula {snc.mean_peak_aoi(errs, hcfg, lam):.3f}")
        print(f"{'a_th':>8} {'empirical':>10} {'bound':>10} {'optimized':>10}")
        peak = trace.steady("peak_aoi")
        for a in np.linspace(np.quantile(peak, 0.5), np.quantile(peak, 0.999), 8) * n:
            emp = simkit.empirical_peak_aoi_violation(trace, [a], n)[0]
            fixed = snc.peak_aoi_harq(None, hcfg, lam, snc.AoiQosQuery(args.theta, a, n), errs=errs).value
            opt = snc.optimized_peak_aoi_harq(errs, hcfg, lam, a, n).value
            print(f"{a:8.0f} {emp:10.2e} {fixed:10.2e} {opt:10.2e}")
        print(f"{'d_th':>8} {'empirical':>10} {'bound':>10}")
        for d in (2, 4, 6, 8, 10):
            emp = simkit.empirical_delay_violation(trace, [d], hcfg.round_duration)[0]
            print(f"{d:8d} {emp:10.2e} {snc.harq_delay_bound(errs, hcfg, lam, d).value:10.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
