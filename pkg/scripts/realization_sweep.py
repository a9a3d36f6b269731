"""Held-out error and defects of synthesized realizations versus state dimension."""

import argparse
from dataclasses import dataclass

import numpy as np

from caratheodory.kernels import gram_assemble, SampleSet
from caratheodory.realization import holdout_points, random_realization, realize


@dataclass
class Config:
    dim: int = 2
    d_max: int = 8
    trials: int = 10
    radius: float = 0.7
    seed: int = 0


def run(cfg: Config):
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for d in range(1, cfg.d_max + 1):
        err = iso = 0.0
        min_eig = np.inf
        for _ in range(cfg.trials):
            phi = random_realization(rng, cfg.dim, d)
            m = max(3, (d + 1) // cfg.dim + 2)
            pts = cfg.radius * np.exp(1j * (2 * np.pi * np.arange(m) / m + rng.uniform(0, 2 * np.pi)))
            R = realize(phi, pts)
            h = holdout_points(pts)
            rel = [np.linalg.norm(a - b, 2) / max(1.0, np.linalg.norm(b, 2)) for a, b in zip(R(h), phi(h))]
            err, iso = max(err, max(rel)), max(iso, R.isometry_defect)
            min_eig = min(min_eig, gram_assemble(R, SampleSet.from_points(h)).min_eigenvalue)
        rows.append((d, err, iso, min_eig))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    for f, v in vars(Config()).items():
        ap.add_argument(f"--{f.replace('_', '-')}", type=type(v), default=v)
    cfg = Config(**vars(ap.parse_args()))
    print(f"{'d':>3} {'holdout err':>12} {'isometry':>10} {'gram min eig':>13}")
    for d, err, iso, eig in run(cfg):
        print(f"{d:>3} {err:>12.2e} {iso:>10.2e} {eig:>13.2e}")


if __name__ == "__main__":
    main()
