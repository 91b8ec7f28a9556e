#!/usr/bin/env python
"""Write the curve files of the presets used by the experiments.

The ellipse is fitted at run time, so its file depends on the numpy FFT and
is not checked in; run this script to create it.
"""
from pathlib import Path

from ovalcount import fileio, geometry
from ovalcount.geometry import OvalCurve

curvedir = Path(__file__).parent

# non-symmetric oval: h = 1 + 0.05 cos 2t + 0.02 sin 2t + 0.02 cos 3t
CUSTOM_OVAL = [1.0, 0.0, 0.0, 0.05, 0.02, 0.02, 0.0]


def main():
    curves = {
        "disk.json": geometry.disk(),
        "ellipse_2_1.json": geometry.ellipse(2, 1),
        "custom_oval.json": OvalCurve.from_coeffs(CUSTOM_OVAL, preset="custom-oval"),
    }
    for fname, curve in curves.items():
        fileio.write_curve(curvedir / fname, curve)
        print(f"{fname}: order {curve.order}, symmetric={curve.symmetry_flag}")


if __name__ == "__main__":
    main()
