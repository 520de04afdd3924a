"""Pointwise statistics over runs of equal length."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..optimizers import Trajectory


@dataclass(frozen=True, eq=False)
class AggregateStats:
    """Per-iteration mean and population standard deviation across runs.

    ``evals`` maps iteration ``t`` to the objective evaluations consumed up
    to it (``2 k t`` for SZGD); for GD and the proximal method it equals
    ``t``.
    """

    label: str
    t: np.ndarray
    mean_f: np.ndarray
    std_f: np.ndarray
    mean_dist: np.ndarray
    std_dist: np.ndarray
    evals: np.ndarray
    runs: int

    def __len__(self) -> int:
        return len(self.t)


def aggregate(trajectories, label: str | None = None) -> AggregateStats:
    """Aggregate completed trajectories of equal length.

    Raises ``ValueError`` on empty input or mismatched lengths.
    """
    trajs: list[Trajectory] = list(trajectories)
    if not trajs:
        raise ValueError("aggregate needs at least one trajectory")
    lengths = {len(tr.f_values) for tr in trajs}
    if len(lengths) != 1:
        raise ValueError(f"trajectories have mismatched lengths {sorted(lengths)}")
    F = np.stack([tr.f_values for tr in trajs])
    if all(tr.distances is not None for tr in trajs):
        D = np.stack([tr.distances for tr in trajs])
    else:
        D = np.full_like(F, np.nan)
    t = np.arange(F.shape[1])
    per_step = trajs[0].evals_per_step() if trajs[0].algorithm == "szgd" else 1
    if label is None:
        first = trajs[0]
        label = f"k = {first.k}" if first.algorithm == "szgd" else {"gd": "GD"}.get(first.algorithm, first.algorithm)
    return AggregateStats(
        label, t, F.mean(axis=0), F.std(axis=0), D.mean(axis=0), D.std(axis=0),
        t * per_step, len(trajs),
    )
