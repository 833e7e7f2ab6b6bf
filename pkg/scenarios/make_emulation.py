"""Write a synthetic emulation CSV for the compare walkthrough.

Runs fixed.json, shifts each BS's RSRP by a known offset, adds seeded
Gaussian noise and jitters the clock by 0.2 s. Usage:

    python3 make_emulation.py > emulation.csv
"""

import csv
import random
import sys
from datetime import timedelta
from pathlib import Path

from uavsim.engine import run
from uavsim.scenario import load_scenario

OFFSETS_DB = {"LW1": -2.0, "LW2": -3.5, "LW3": -1.0, "LW4": -4.0}
NOISE_DB = 0.5


def main() -> None:
    scenario = load_scenario(Path(__file__).with_name("fixed.json"))
    rng = random.Random(2024)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["timestamp", "uav_lat", "uav_lon", "uav_alt"] + [f"RSRP_{b}" for b in scenario.bs_ids])
    for rec in run(scenario):
        p = rec.position
        t = (rec.t + timedelta(seconds=0.2)).isoformat().replace("+00:00", "Z")
        rsrp = [rec.samples[b].rsrp_dbm + OFFSETS_DB[b] + rng.gauss(0.0, NOISE_DB) for b in scenario.bs_ids]
        w.writerow([t, f"{p.lat_deg:.7f}", f"{p.lon_deg:.7f}", f"{p.alt_m:.2f}"] + [f"{r:.2f}" for r in rsrp])


if __name__ == "__main__":
    main()
