"""SVG renders: a STIT with three directions, and STIT next to PHT.

    python scripts/render_figures.py --out results/figures
"""
from __future__ import annotations

import argparse
import math
from pathlib import Path

from tessforest.directions import DirectionalDistribution
from tessforest.geometry import Box
from tessforest.render import write_svg
from tessforest.rng import RngStream
from tessforest.tessellation import sample_pht, sample_stit


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/figures")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--lam", type=float, default=12.0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    W = Box.cube(2)

    angles = [0.0, math.pi / 3, 2 * math.pi / 3]
    three = DirectionalDistribution.discrete([[math.cos(a), math.sin(a)] for a in angles])
    write_svg(sample_stit(W, three, args.lam, RngStream(args.seed)), out / "stit_three_directions.svg")

    for pname in ("axis", "isotropic"):
        phi = DirectionalDistribution.from_dict({"kind": pname}, 2)
        write_svg(sample_stit(W, phi, args.lam, RngStream(args.seed, (1,))), out / f"stit_{pname}.svg")
        write_svg(sample_pht(W, phi, args.lam, RngStream(args.seed, (2,))), out / f"pht_{pname}.svg")
    print(f"wrote SVGs to {out}")


if __name__ == "__main__":
    main()
