"""Seawater absorption versus center frequency.

Prints the absorption coefficient over the 1-50 kHz band used for
kilometer-scale acoustic links, plus the per-kilometer loss it implies.
"""

import numpy as np

from uwloc import absorption_coefficient

if __name__ == "__main__":
    print(f"{'f (kHz)':>8}  {'alpha (dB/m)':>12}  {'loss over 1 km (dB)':>20}")
    for f in (1, 3, 5, 9, 15, 25, 35, 50):
        alpha = absorption_coefficient(f)
        print(f"{f:8.0f}  {alpha:12.4e}  {alpha * 1000.0:20.2f}")

    grid = np.linspace(1.0, 50.0, 200)
    values = np.array([absorption_coefficient(f) for f in grid])
    steepest = grid[np.argmax(np.diff(values))]
    print(f"\nabsorption grows monotonically; steepest increase near {steepest:.0f} kHz")
