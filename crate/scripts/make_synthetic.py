"""Regenerates the bundled synthetic datasets under data/synthetic."""

import math
import pathlib
import random

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data" / "synthetic"


def sine_vs_square(rng, label, n=64):
    phase = rng.uniform(0, 2 * math.pi)
    out = []
    for t in range(n):
        s = math.sin(2 * math.pi * t / 16 + phase)
        v = s if label == 1 else (1.0 if s >= 0 else -1.0)
        out.append(v + rng.gauss(0, 0.2))
    return out


def three_trends(rng, label, n=48):
    slope = {1: 0.05, 2: -0.05, 3: 0.0}[label]
    return [slope * t + rng.gauss(0, 0.3) for t in range(n)]


def long_bumps(rng, label, n=700):
    centre = (175 if label == 1 else 525) + rng.randint(-40, 40)
    return [2.0 * math.exp(-((t - centre) / 30.0) ** 2) + rng.gauss(0, 0.15) for t in range(n)]


def write(name, gen, classes, per_class):
    rng = random.Random(name)
    d = ROOT / name
    d.mkdir(parents=True, exist_ok=True)
    for split in ("TRAIN", "TEST"):
        rows = []
        for label in classes:
            for _ in range(per_class):
                rows.append([label] + gen(rng, label))
        rng.shuffle(rows)
        lines = ["\t".join([str(r[0])] + [f"{v:.6f}" for v in r[1:]]) for r in rows]
        (d / f"{name}_{split}.tsv").write_text("\n".join(lines) + "\n")


write("SineVsSquare", sine_vs_square, [1, 2], 10)
write("ThreeTrends", three_trends, [1, 2, 3], 6)
write("LongBumps", long_bumps, [1, 2], 5)
