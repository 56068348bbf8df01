"""CSV artifacts: header row, full double precision, deterministic bytes."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def _format(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format(v) for v in row) + "\n")


def write_trajectory_csv(path, traj, decimate: int = 1) -> None:
    """Snapshot rows ``t, theta_1..theta_n``; decimate keeps every k-th row."""
    n = traj.theta.shape[1]
    header = ["t"] + [f"theta_{i + 1}" for i in range(n)]
    rows = ((traj.times[m], *traj.theta[m])
            for m in range(0, len(traj.times), decimate))
    write_csv(path, header, rows)


def write_coupled_gap_csv(path, run) -> None:
    """Coupled-run artifact ``t, sup_gap_sq`` (worst particle per time)."""
    gaps = run.max_gap_sq
    write_csv(path, ["t", "sup_gap_sq"],
              ((run.times[m], gaps[m]) for m in range(len(run.times))))


def write_density_csv(path, traj) -> None:
    """Density trajectory rows ``t, atom, k, c_k, s_k``."""
    n_times, n_atoms, k_max = traj.c.shape

    def rows():
        for m in range(n_times):
            for a in range(n_atoms):
                for k in range(k_max):
                    yield (traj.times[m], a, k + 1, traj.c[m, a, k],
                           traj.s[m, a, k])

    write_csv(path, ["t", "atom", "k", "c_k", "s_k"], rows())


def write_profile_csv(path, profile, points: int = 512) -> None:
    """Sampled stationary density ``theta, q(theta)``."""
    theta = np.linspace(0.0, 2 * np.pi, points, endpoint=False)
    q = profile.density(theta)
    write_csv(path, ["theta", "q"], zip(theta, q))
