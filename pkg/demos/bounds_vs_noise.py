"""Estimation bounds as the noise level grows.

Tabulates the position bound with and without knowledge of the transmit
power, plus the power bound, on the bundled network.  Both scale linearly
in the noise standard deviation; not knowing the power roughly doubles
the position bound on this geometry.
"""

from uwloc import fim_known_power, fim_unknown_power
from uwloc.config import bundled_scenario_path, parse_scenario

if __name__ == "__main__":
    scenario = parse_scenario(bundled_scenario_path()).scenario
    print(f"{'sigma (dB)':>10}  {'bound, power known (m)':>23}  {'power unknown (m)':>18}  {'power bound (dB)':>17}")
    for sigma in (1.0, 2.0, 3.0, 5.0, 7.0, 9.0):
        known = fim_known_power(scenario, sigma)
        unknown = fim_unknown_power(scenario, sigma)
        print(
            f"{sigma:10.1f}  {known.crlb_t_m:23.1f}  {unknown.crlb_t_m:18.1f}"
            f"  {unknown.crlb_p_db:17.3f}"
        )
    print("\nFisher matrix condition estimate at sigma = 1 dB:"
          f" {fim_unknown_power(scenario, 1.0).condition_estimate:.2e}")
