"""Moment error of the recovered measure as the largest radius grows.

For each cutoff radius 1 - 2^-n the recovery is rerun on the radii up to that
cutoff and the first trigonometric moments are compared with the truth.
"""

import argparse
from dataclasses import dataclass

import numpy as np

from caratheodory.herglotz import default_radii, random_measure, recover, trig_moments


@dataclass
class Config:
    dim: int = 2
    atoms: int = 2
    k_max: int = 8
    n_max: int = 12
    seed: int = 0


def run(cfg: Config):
    mu = random_measure(np.random.default_rng(cfg.seed), cfg.dim, n_atoms=cfg.atoms)
    truth = trig_moments(mu, cfg.k_max)
    rows = []
    for n in range(6, cfg.n_max + 1):
        rec = recover(mu, radii=default_radii(3, n))
        dev = np.linalg.norm(trig_moments(rec, cfg.k_max) - truth, 2, axis=(1, 2))
        rows.append((n, 1 - 2.0 ** -n, float(dev.max()), len(rec.atom_t)))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for f, v in vars(Config()).items():
        ap.add_argument(f"--{f.replace('_', '-')}", type=type(v), default=v)
    cfg = Config(**vars(ap.parse_args()))
    print(f"{'n':>3} {'r_max':>12} {'max moment dev':>15} {'atoms':>6}")
    for n, r, dev, atoms in run(cfg):
        print(f"{n:>3} {r:>12.8f} {dev:>15.3e} {atoms:>6}")


if __name__ == "__main__":
    main()
