"""How fast E[V^2(T)] approaches its stationary limit, and the step-size order.

    python scripts/convergence_study.py [--alpha 0.75] [--beta 0.3] [--h 0.05]

For long memory the gap to the limit decays like T^(1 - 2 alpha), so
``gap * T^(2 alpha - 1)`` settles to a constant; the last column extrapolates
the horizon needed for a given relative gap.
"""

import argparse

import numpy as np

from lmvol.moments import covariance_surface, power_law_model, solve_second_moment
from lmvol.autocov import gamma


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--alpha", type=float, default=0.75)
    ap.add_argument("--beta", type=float, default=0.3)
    ap.add_argument("--h", type=float, default=0.05)
    ap.add_argument("--target", type=float, default=0.02, help="relative gap for the horizon estimate")
    args = ap.parse_args()

    m = power_law_model(args.alpha, beta=args.beta)
    lim = solve_second_moment(m, 1.0, args.h).limit
    expo = 2 * args.alpha - 1
    print(f"limit {lim:.9f}, margin {m.verdict.margin:.6f}")
    print(f"{'T':>7} {'E[V^2](T)':>12} {'rel gap':>9} {'gap*T^e':>9} {'T for target':>13}")
    sol = solve_second_moment(m, 1600.0, args.h)
    for T in (50, 100, 200, 400, 800, 1600):
        f = sol.values[int(round(T / args.h))]
        gap = 1 - f / lim
        const = gap * T**expo
        need = (const / args.target) ** (1 / expo) if expo > 0 else float("nan")
        print(f"{T:7.0f} {f:12.6f} {gap:9.4f} {const:9.4f} {need:13.0f}")

    print("\nstep halving at T=200")
    vals = [solve_second_moment(m, 200.0, h).values[-1] for h in (0.1, 0.05, 0.025, 0.0125)]
    for (h, v), nxt in zip(zip((0.1, 0.05, 0.025, 0.0125), vals), vals[1:] + [None]):
        print(f"  h={h:<7g} f={v:.10f}" + (f"  diff={v - nxt:.3e}" if nxt is not None else ""))
    d = np.abs(np.diff(vals))
    print("  error ratios", np.round(d[:-1] / d[1:], 3))

    print("\ncovariance surface vs limiting autocovariance")
    for t in (50.0, 150.0, 600.0):
        s = solve_second_moment(m, t, args.h)
        row = [covariance_surface(m, t, dl, args.h, s) / gamma(m, dl) - 1 for dl in (0.0, 1.0, 5.0, 10.0)]
        print(f"  t={t:<6g}" + " ".join(f"{x:+.3f}" for x in row))


if __name__ == "__main__":
    main()
