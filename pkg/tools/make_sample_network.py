"""Build the bundled sample road network: a 32x32 urban grid (1024 vertices)
with 1984 grid edges plus 134 deterministic diagonal shortcuts (2118 edges).

Run from the repo root:  python tools/make_sample_network.py
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

OUT = Path(__file__).parent.parent / "src" / "infrasim" / "data" / "manhattan_sample.csv"

GRID = 32
LON_MIN, LON_MAX = -73.998, -73.950
LAT_MIN, LAT_MAX = 40.755, 40.810
M_PER_DEG_LON = 84_800.0
M_PER_DEG_LAT = 111_000.0
N_DIAGONALS = 134


def main() -> None:
    rng = np.random.default_rng(20_240_117)
    lon = np.linspace(LON_MIN, LON_MAX, GRID)
    lat = np.linspace(LAT_MIN, LAT_MAX, GRID)

    def vid(r: int, c: int) -> str:
        return f"v{r * GRID + c:04d}"

    lines = ["#format=road-network/1", "# sample urban grid network: 1024 vertices, 2118 edges"]
    coords: dict[str, tuple[float, float]] = {}
    for r in range(GRID):
        for c in range(GRID):
            coords[vid(r, c)] = (lon[c], lat[r])
            lines.append(f"V,{vid(r, c)},{lon[c]:.6f},{lat[r]:.6f}")

    def dist(u: str, v: str) -> float:
        (x1, y1), (x2, y2) = coords[u], coords[v]
        dx = (x2 - x1) * M_PER_DEG_LON
        dy = (y2 - y1) * M_PER_DEG_LAT
        return math.hypot(dx, dy)

    pairs: list[tuple[str, str]] = []
    for r in range(GRID):
        for c in range(GRID - 1):
            pairs.append((vid(r, c), vid(r, c + 1)))
    for r in range(GRID - 1):
        for c in range(GRID):
            pairs.append((vid(r, c), vid(r + 1, c)))
    cells = [(r, c) for r in range(GRID - 1) for c in range(GRID - 1)]
    chosen = rng.choice(len(cells), size=N_DIAGONALS, replace=False)
    for idx in sorted(chosen):
        r, c = cells[idx]
        pairs.append((vid(r, c), vid(r + 1, c + 1)))

    speeds = rng.uniform(12.0, 45.0, len(pairs))
    importance = rng.uniform(0.5, 3.0, len(pairs))
    for i, (u, v) in enumerate(pairs):
        lines.append(
            f"E,e{i:04d},{u},{v},{dist(u, v):.1f},{speeds[i]:.1f},{importance[i]:.2f}"
        )

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text("\n".join(lines) + "\n", encoding="utf-8")
    n_v = sum(1 for l in lines if l.startswith("V,"))
    n_e = sum(1 for l in lines if l.startswith("E,"))
    print(f"wrote {OUT}: {n_v} vertices, {n_e} edges")


if __name__ == "__main__":
    main()
