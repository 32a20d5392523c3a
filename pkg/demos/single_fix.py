"""One localization fix, end to end.

Generates a noisy measurement set on the bundled ten-anchor network,
weights the links, solves the joint position/power problem, and compares
the estimate against the ground truth.
"""

import numpy as np

import uwloc
from uwloc.config import bundled_scenario_path, parse_scenario

if __name__ == "__main__":
    config = parse_scenario(bundled_scenario_path())
    scenario = config.scenario
    env = scenario.environment

    rng = np.random.default_rng(7)
    model = uwloc.NoiseModel(kind="zero_mean_gaussian", sigma_db=3.0)
    measurements = uwloc.generate_measurements(scenario, model, rng)

    weights = uwloc.link_weights(measurements, env)
    print("link weights (closer anchors get more):")
    distances = scenario.distances_m()
    for i in np.argsort(distances):
        print(f"  anchor {i}: d = {distances[i]:7.0f} m   w = {weights[i]:.4f}")

    system = uwloc.build_system(measurements, weights, scenario.anchors_m, env)
    estimate = uwloc.solve(system)

    error = np.linalg.norm(estimate.position_m - scenario.target_m)
    print(f"\ntrue position      : {scenario.target_m}")
    print(f"estimated position : {np.round(estimate.position_m, 1)}")
    print(f"position error     : {error:.1f} m")
    print(f"true power         : {env.transmit_power_dbm:.2f} dBm")
    print(f"estimated power    : {estimate.transmit_power_dbm:.2f} dBm")
    print(f"multiplier         : {estimate.multiplier:.3e}  ({estimate.iterations} bisection steps)")
    print(f"stationarity       : {estimate.kkt_stationarity:.2e} (relative)")
