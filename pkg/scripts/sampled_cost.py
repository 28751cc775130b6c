"""Shot-noise behaviour of the sampled cost estimator.

For a fixed random ansatz state, prints the mean error, the RMS error and the
mean reported standard error at several shot counts.

    python3 scripts/sampled_cost.py --m 2 --seeds 50
"""

import argparse

import numpy as np

from poisson_vqa.ansatz import AnsatzSpec, ansatz_state, init_parameters
from poisson_vqa.lattice import build_system
from poisson_vqa.simulator import ShotPlan
from poisson_vqa.vqa import CostModel, cost_exact, cost_sampled_state


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--m", type=int, default=2)
    parser.add_argument("--layers", type=int, default=2)
    parser.add_argument("--seeds", type=int, default=50)
    parser.add_argument("--debias", action="store_true")
    args = parser.parse_args()

    system = build_system(args.m, "x")
    model = CostModel.from_system(system, debias=args.debias)
    spec = AnsatzSpec(args.m, args.layers)
    psi = ansatz_state(spec, init_parameters(spec, 0))
    exact = cost_exact(model, psi)
    print(f"exact cost {exact:.6f}")
    print(f"{'shots':>8} {'bias':>10} {'rms':>10} {'stderr':>10}")
    for shots in (10**3, 10**4, 10**5, 10**6):
        est = [cost_sampled_state(model, psi, ShotPlan(shots, s)) for s in range(args.seeds)]
        err = np.array([e.value for e in est]) - exact
        se = np.mean([e.stderr for e in est])
        print(f"{shots:>8} {err.mean():>10.2e} {np.sqrt(np.mean(err**2)):>10.2e} {se:>10.2e}")


if __name__ == "__main__":
    main()
