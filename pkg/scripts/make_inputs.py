"""Write the JSON inputs used by the CLI examples into data/."""

import argparse
from pathlib import Path

import numpy as np

from caratheodory import serialize as ser
from caratheodory.herglotz import HerglotzMeasure, random_measure
from caratheodory.kernels import RationalFunction, SampleSet, constant, point_mass_counterexample


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(exist_ok=True)
    rng = np.random.default_rng(args.seed)

    mobius = RationalFunction([[[1]], [[1]]], [1, -1])
    pts = 0.7 * np.exp(2j * np.pi * np.arange(8) / 8)
    files = {
        "constant_one.json": ser.function_to_json(constant(1.0)),
        "minus_one.json": ser.function_to_json(constant(-1.0)),
        "counterexample.json": ser.function_to_json(point_mass_counterexample()),
        "mobius.json": ser.function_to_json(mobius),
        "mobius_samples.json": ser.samples_to_json(SampleSet.from_points(pts).with_values(mobius)),
        "counterexample_samples.json": ser.samples_to_json(
            SampleSet.from_points(pts[:3]).with_values(point_mass_counterexample())),
        "mobius_samples_no_origin.json": ser.samples_to_json(
            SampleSet.from_points(pts, include_origin=False).with_values(mobius)),
        "unit_atom.json": ser.measure_to_json(HerglotzMeasure.from_cells([0.0, 2 * np.pi], [0.0], [(0.0, 1.0)])),
        "two_atom.json": ser.measure_to_json(random_measure(rng, 2, n_atoms=2, n_cells=32)),
    }
    for name, obj in files.items():
        (out / name).write_text(ser.dumps(obj), encoding="utf-8")
    (out / "malformed.json").write_text('{"kind": "constant", "value": [1, \n', encoding="utf-8")
    print(f"wrote {len(files) + 1} files to {out}/")


if __name__ == "__main__":
    main()
