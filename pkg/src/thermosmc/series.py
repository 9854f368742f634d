"""Recorded closed-loop trajectory and its CSV form."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["SCALAR_COLUMNS", "TimeSeries", "SeriesRecorder", "export_csv", "read_csv", "read_profiles_csv"]

SCALAR_COLUMNS = ("t_s", "T0_C", "TL_C", "ze0_K", "zeL_K", "u0", "u1", "I0_A", "I1_A",
                  "Ipsi0_A", "Ipsi1_A", "M0", "M1", "l2_err", "V1", "V2")

# attribute name for each CSV column
_ATTR = dict(zip(SCALAR_COLUMNS, ("t", "T0", "TL", "ze0", "zeL", "u0", "u1", "I0", "I1",
                                  "Ipsi0", "Ipsi1", "M0", "M1", "l2_err", "V1", "V2")))


def _empty() -> np.ndarray:
    return np.zeros(0)


@dataclass
class TimeSeries:
    """One record per control step; arrays share a common length.

    ``psi0``/``psi1`` hold the matched disturbance in input units, ``w`` holds the
    optional diagnostic W-components (V3..V8) keyed by name. Profile snapshots
    are stored every ``profile_stride`` control steps at the nodes ``zeta``.
    """

    t: np.ndarray = field(default_factory=_empty)
    T0: np.ndarray = field(default_factory=_empty)
    TL: np.ndarray = field(default_factory=_empty)
    ze0: np.ndarray = field(default_factory=_empty)
    zeL: np.ndarray = field(default_factory=_empty)
    u0: np.ndarray = field(default_factory=_empty)
    u1: np.ndarray = field(default_factory=_empty)
    I0: np.ndarray = field(default_factory=_empty)
    I1: np.ndarray = field(default_factory=_empty)
    Ipsi0: np.ndarray = field(default_factory=_empty)
    Ipsi1: np.ndarray = field(default_factory=_empty)
    M0: np.ndarray = field(default_factory=_empty)
    M1: np.ndarray = field(default_factory=_empty)
    l2_err: np.ndarray = field(default_factory=_empty)
    V1: np.ndarray = field(default_factory=_empty)
    V2: np.ndarray = field(default_factory=_empty)
    psi0: np.ndarray = field(default_factory=_empty)
    psi1: np.ndarray = field(default_factory=_empty)
    w: dict = field(default_factory=dict)
    zeta: np.ndarray = field(default_factory=_empty)
    profile_t: np.ndarray = field(default_factory=_empty)
    profiles: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def __len__(self) -> int:
        return len(self.t)

    @property
    def V(self) -> np.ndarray:
        return self.V1 + self.V2

    def scalar_table(self) -> np.ndarray:
        return np.column_stack([getattr(self, _ATTR[c]) for c in SCALAR_COLUMNS]) if len(self) else \
            np.zeros((0, len(SCALAR_COLUMNS)))

    def window(self, t_a: float, t_b: float) -> np.ndarray:
        """Boolean mask of records with ``t_a <= t <= t_b``."""
        return (self.t >= t_a - 1e-9) & (self.t <= t_b + 1e-9)


class SeriesRecorder:
    """Append-only builder used by the simulation loop."""

    _fields = ("t", "T0", "TL", "ze0", "zeL", "u0", "u1", "I0", "I1", "Ipsi0", "Ipsi1",
               "M0", "M1", "l2_err", "V1", "V2", "psi0", "psi1")

    def __init__(self, zeta: np.ndarray | None = None):
        self._rows: dict[str, list] = {k: [] for k in self._fields}
        self._w: dict[str, list] = {}
        self._profile_t: list = []
        self._profiles: list = []
        self.zeta = np.zeros(0) if zeta is None else np.asarray(zeta, dtype=float)

    def append(self, **values) -> None:
        for k in self._fields:
            self._rows[k].append(float(values[k]))

    def append_w(self, comps: dict) -> None:
        for k, v in comps.items():
            self._w.setdefault(k, []).append(float(v))

    def snapshot(self, t: float, profile: np.ndarray) -> None:
        self._profile_t.append(float(t))
        self._profiles.append(np.array(profile, dtype=float))

    def __len__(self) -> int:
        return len(self._rows["t"])

    def build(self) -> TimeSeries:
        arrays = {k: np.asarray(v, dtype=float) for k, v in self._rows.items()}
        profiles = np.array(self._profiles) if self._profiles else np.zeros((0, len(self.zeta)))
        return TimeSeries(**arrays, w={k: np.asarray(v) for k, v in self._w.items()},
                          zeta=self.zeta, profile_t=np.asarray(self._profile_t, dtype=float),
                          profiles=profiles)


def _fmt(x: float) -> str:
    return repr(float(x))


def export_csv(series: TimeSeries, path, profile_path=None) -> tuple[Path, Path | None]:
    """Write the scalar log (16 columns) and, when snapshots exist, the profile file.

    The profile file has one row per ``(t, zeta)`` pair and defaults to
    ``<stem>_profiles.csv`` next to ``path``.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCALAR_COLUMNS)
        for row in series.scalar_table():
            writer.writerow([_fmt(x) for x in row])
    if len(series.profile_t) == 0:
        return path, None
    ppath = Path(profile_path) if profile_path is not None else path.with_name(path.stem + "_profiles.csv")
    with ppath.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("t_s", "zeta_m", "T_C"))
        for t, prof in zip(series.profile_t, series.profiles):
            for zeta, temp in zip(series.zeta, prof):
                writer.writerow((_fmt(t), _fmt(zeta), _fmt(temp)))
    return path, ppath


def read_csv(path) -> TimeSeries:
    """Parse a scalar log written by :func:`export_csv`."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != SCALAR_COLUMNS:
            raise ValueError(f"unexpected header {header}")
        rows = [[float(x) for x in r] for r in reader]
    table = np.array(rows, dtype=float).reshape(-1, len(SCALAR_COLUMNS))
    kwargs = {_ATTR[c]: table[:, j].copy() for j, c in enumerate(SCALAR_COLUMNS)}
    return TimeSeries(**kwargs)


def read_profiles_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(times, zeta, profiles)`` from a profile companion file."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    times = np.unique(data[:, 0])
    zeta = data[data[:, 0] == times[0], 1]
    return times, zeta, data[:, 2].reshape(len(times), len(zeta))
