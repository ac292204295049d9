"""Regenerate the bundled MTJ calibration table.

The table is a coarse sample of an anchor model chosen to sit in the
experimentally reported range for CoFeB/MgO junctions: RA(AP, 2 nm) about
9 kOhm um^2, a 600% TMR, about 0.12 nm decay length per e-fold, and an AP
resistance that falls by roughly half at 0.5 V. Values are rounded to three
significant figures to mimic digitization.

    python3 scripts/make_mtj_table.py src/spinann/data/mtj_calibration.csv
"""

import math
import sys

import numpy as np

from spinann.mtj import NM, write_calibration_table

AREA_REF = 1e-14  # m^2, 0.01 um^2
RA_AP_2NM = 9040e-12  # ohm m^2
DECAY = 0.12 * NM
TMR = 6.0
K1, K2 = 4.0, 0.8  # 1/V^2, 1/V^4


def anchor_r(t, v, theta):
    r_ap0 = RA_AP_2NM / AREA_REF * math.exp((t - 2.0 * NM) / DECAY)
    r_ap = r_ap0 / (1.0 + K1 * v**2 - K2 * v**4)
    r_p = r_ap0 / (1.0 + TMR)
    g = math.cos(theta / 2) ** 2 / r_p + math.sin(theta / 2) ** 2 / r_ap
    return 1.0 / g


def sig3(x):
    return float(f"{x:.3g}")


def main(path):
    rows = []
    for t_nm in (1.6, 1.8, 2.0, 2.2, 2.4):
        for v_mv in (10, 50, 100, 200, 300, 400, 500):
            for theta in (0.0, math.pi):
                rows.append((t_nm * NM, v_mv * 1e-3, theta, sig3(anchor_r(t_nm * NM, v_mv * 1e-3, theta))))
        rows.append((t_nm * NM, 0.01, math.pi / 2, sig3(anchor_r(t_nm * NM, 0.01, math.pi / 2))))
    write_calibration_table(np.array(rows), path)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "mtj_calibration.csv")
