#!/usr/bin/env python3
"""Writes configs/matrix/*.json: H x T x drift grid used by the acceptance run."""
import itertools
import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "configs" / "matrix"
DRIFTS = {
    "linear": {"family": "linear", "A": [[-1.0]], "K": 1.0, "L": -1.0},
    "cubic": {"family": "clipped_cubic", "rho": 1.0},
}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for i, (H, T, drift) in enumerate(itertools.product([0.6, 0.7, 0.8], [0.5, 1.0, 2.0], DRIFTS)):
        cfg = {
            "model": {"H": H, "T": T, "d": 1, "drift": DRIFTS[drift], "sigma": {"value": 1.0}},
            "coupling": {"theta0": 1.0, "n": 256, "refine_levels": 8},
            "run": {
                "n_paths": 10000,
                "seed": 7000 + i,
                "x": [0.25],
                "y": [-0.25],
                "p": 2.0,
                "test_functions": [
                    {"family": "bump", "a": 0.1, "center": [0.0], "s": 0.5},
                    {"family": "clipped_exp", "w": [0.8], "lo": 0.2, "hi": 5.0},
                ],
            },
        }
        name = f"H{H}_T{T}_{drift}.json"
        (OUT / name).write_text(json.dumps(cfg, indent=2) + "\n")


if __name__ == "__main__":
    main()
