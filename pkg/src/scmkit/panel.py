"""Long-format panel ingestion, study validation and design matrices.

A panel is a units x times grid of outcome values. Missing cells are kept as
NaN until :func:`validate` drops incomplete donors. Every read of the grid
goes through :meth:`PanelDataset._read`, so subclasses can observe exactly
which cells a computation touched.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateCell,
    EmptyDonorPool,
    InvalidStudySpec,
    MalformedHeader,
    NoPostPeriods,
    TooFewPrePeriods,
    TreatedIncomplete,
    TreatedMissing,
    UnparsableValue,
)

__all__ = [
    "PanelDataset",
    "StudySpec",
    "ValidatedStudy",
    "load_long_csv",
    "dumps_long_csv",
    "write_long_csv",
    "validate",
    "design_matrices",
    "outcome_matrices",
]

HEADER = ("unit", "time", "value")
V_MODES = ("uniform", "nested")


class PanelDataset:
    """Immutable units x times grid of optional outcome values."""

    __slots__ = ("units", "times", "outcome_name", "_grid", "_unit_pos", "_time_pos")

    def __init__(
        self,
        units: Sequence[str],
        times: Sequence[int],
        values,
        outcome_name: str = "value",
    ):
        units = tuple(str(u) for u in units)
        times = tuple(int(t) for t in times)
        if len(set(units)) != len(units):
            raise ValueError("unit identifiers must be unique")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("times must be strictly increasing")
        grid = np.array(values, dtype=float).reshape(len(units), len(times))
        grid.flags.writeable = False
        self.units = units
        self.times = times
        self.outcome_name = outcome_name
        self._grid = grid
        self._unit_pos = {u: i for i, u in enumerate(units)}
        self._time_pos = {t: i for i, t in enumerate(times)}

    # -- single choke point for grid reads --------------------------------

    def _read(self, unit_pos: int, time_slice: slice) -> np.ndarray:
        return np.array(self._grid[unit_pos, time_slice])

    def _derive(self, units, times, grid) -> "PanelDataset":
        return PanelDataset(units, times, grid, self.outcome_name)

    # -- accessors ----------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.units), len(self.times)

    def unit_index(self, unit: str) -> int:
        return self._unit_pos[unit]

    def time_index(self, time: int) -> int:
        return self._time_pos[time]

    def _window(self, start: int | None, end: int | None) -> slice:
        lo = 0 if start is None else int(np.searchsorted(self.times, start, side="left"))
        hi = len(self.times) if end is None else int(np.searchsorted(self.times, end, side="right"))
        return slice(lo, hi)

    def window_times(self, start: int | None = None, end: int | None = None) -> tuple[int, ...]:
        return self.times[self._window(start, end)]

    def series(self, unit: str, start: int | None = None, end: int | None = None) -> np.ndarray:
        """Values of ``unit`` for times in the closed window [start, end]."""
        return self._read(self._unit_pos[unit], self._window(start, end))

    def cell(self, unit: str, time: int) -> float | None:
        ti = self._time_pos[time]
        value = float(self._read(self._unit_pos[unit], slice(ti, ti + 1))[0])
        return None if math.isnan(value) else value

    def missing_times(self, unit: str, start: int | None = None, end: int | None = None) -> list[int]:
        window = self._window(start, end)
        row = self._read(self._unit_pos[unit], window)
        return [t for t, v in zip(self.times[window], row) if math.isnan(v)]

    @property
    def values(self) -> np.ndarray:
        full = slice(0, len(self.times))
        if not self.units:
            return np.empty((0, len(self.times)))
        return np.vstack([self._read(i, full) for i in range(len(self.units))])

    def subset(
        self,
        units: Iterable[str] | None = None,
        start: int | None = None,
        end: int | None = None,
    ) -> "PanelDataset":
        """Restrict to ``units`` (kept in this dataset's order) and a time window."""
        if units is None:
            keep = list(self.units)
        else:
            wanted = set(units)
            unknown = wanted.difference(self.units)
            if unknown:
                raise KeyError(f"units not in dataset: {sorted(unknown)}")
            keep = [u for u in self.units if u in wanted]
        window = self._window(start, end)
        times = self.times[window]
        grid = np.empty((len(keep), len(times)))
        for row, unit in enumerate(keep):
            grid[row] = self._read(self._unit_pos[unit], window)
        return self._derive(keep, times, grid)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PanelDataset):
            return NotImplemented
        return (
            self.units == other.units
            and self.times == other.times
            and self.outcome_name == other.outcome_name
            and np.array_equal(self._grid, other._grid, equal_nan=True)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return (
            f"PanelDataset(units={len(self.units)}, times={self.times[:1]}..{self.times[-1:]}, "
            f"outcome_name={self.outcome_name!r})"
        )


def load_long_csv(path: str | Path, outcome_name: str | None = None) -> PanelDataset:
    """Read a ``unit,time,value`` CSV into a :class:`PanelDataset`.

    Units keep their first-appearance order and times are sorted. Absent
    (unit, time) rows and empty values become missing cells.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"data file not found: {path}")
    cells: dict[tuple[str, int], float] = {}
    units: dict[str, None] = {}
    times: set[int] = set()
    with path.open("r", encoding="utf-8-sig", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != HEADER:
            raise MalformedHeader(f"{path}: expected header 'unit,time,value', got {header!r}")
        for row in reader:
            line = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise UnparsableValue(line, f"expected 3 fields, got {len(row)}")
            unit, raw_time, raw_value = (f.strip() for f in row)
            if not unit:
                raise UnparsableValue(line, "empty unit identifier")
            try:
                time = int(raw_time)
            except ValueError:
                raise UnparsableValue(line, f"time {raw_time!r} is not an integer") from None
            if raw_value == "":
                value = math.nan
            else:
                try:
                    value = float(raw_value)
                except ValueError:
                    raise UnparsableValue(line, f"value {raw_value!r} is not a number") from None
                if not math.isfinite(value):
                    raise UnparsableValue(line, f"value {raw_value!r} is not finite")
            if (unit, time) in cells:
                raise DuplicateCell(unit, time)
            cells[(unit, time)] = value
            units.setdefault(unit)
            times.add(time)
    unit_list = list(units)
    time_list = sorted(times)
    grid = np.full((len(unit_list), len(time_list)), np.nan)
    upos = {u: i for i, u in enumerate(unit_list)}
    tpos = {t: i for i, t in enumerate(time_list)}
    for (unit, time), value in cells.items():
        grid[upos[unit], tpos[time]] = value
    return PanelDataset(unit_list, time_list, grid, outcome_name or path.stem)


def dumps_long_csv(dataset: PanelDataset) -> str:
    """Canonical CSV text: unit-major, times ascending, shortest round-trip floats."""
    out = io.StringIO()
    out.write("unit,time,value\n")
    grid = dataset.values
    for i, unit in enumerate(dataset.units):
        if "," in unit or "\n" in unit:
            raise ValueError(f"unit id {unit!r} cannot be written unquoted")
        for j, time in enumerate(dataset.times):
            v = grid[i, j]
            out.write(f"{unit},{time},{'' if math.isnan(v) else repr(float(v))}\n")
    return out.getvalue()


def write_long_csv(dataset: PanelDataset, path: str | Path) -> None:
    Path(path).write_text(dumps_long_csv(dataset), encoding="utf-8", newline="")


@dataclass(frozen=True)
class StudySpec:
    """What to estimate: treated unit, last untreated period and donor list."""

    treated: str
    t0: int
    donors: tuple[str, ...]
    mspe_cutoff: float = 10.0
    grid_step: float = 0.01
    solver_tol: float = 1e-10
    v_mode: str = "uniform"
    placebo_t0: int | None = None
    start: int | None = None
    end: int | None = None
    max_iter: int = 100_000
    # Open question in the method: whether the real treated unit may serve as a
    # donor in placebo runs. Off by default.
    placebo_pool_includes_treated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "donors", tuple(str(d) for d in self.donors))
        if not self.donors:
            raise InvalidStudySpec("donor list is empty")
        if len(set(self.donors)) != len(self.donors):
            raise InvalidStudySpec("donor list contains duplicates")
        if self.treated in self.donors:
            raise InvalidStudySpec(f"treated unit {self.treated!r} is also listed as a donor")
        if not self.mspe_cutoff > 0:
            raise InvalidStudySpec("mspe_cutoff must be positive")
        if not self.grid_step > 0:
            raise InvalidStudySpec("grid_step must be positive")
        if not self.solver_tol > 0:
            raise InvalidStudySpec("solver_tol must be positive")
        if self.v_mode not in V_MODES:
            raise InvalidStudySpec(f"v_mode must be one of {V_MODES}, got {self.v_mode!r}")
        if self.max_iter < 1:
            raise InvalidStudySpec("max_iter must be >= 1")


@dataclass(frozen=True)
class ValidatedStudy:
    """A complete panel restricted to the treated unit and its resolved donors."""

    dataset: PanelDataset
    spec: StudySpec
    dropped_units: tuple[tuple[str, str], ...] = ()
    pre_periods: range = field(default=range(0))
    post_periods: range = field(default=range(0))

    @property
    def treated(self) -> str:
        return self.spec.treated

    @property
    def t0(self) -> int:
        return self.spec.t0

    @property
    def donors(self) -> tuple[str, ...]:
        return tuple(u for u in self.dataset.units if u != self.spec.treated)

    @property
    def times(self) -> tuple[int, ...]:
        return self.dataset.times

    @property
    def pre_times(self) -> tuple[int, ...]:
        return self.dataset.times[self.pre_periods.start : self.pre_periods.stop]

    @property
    def post_times(self) -> tuple[int, ...]:
        return self.dataset.times[self.post_periods.start : self.post_periods.stop]

    def with_spec(self, **changes) -> "ValidatedStudy":
        """Re-validate this study's (complete) dataset under a modified spec."""
        return validate(self.dataset, replace(self.spec, **changes))


def validate(dataset: PanelDataset, spec: StudySpec) -> ValidatedStudy:
    """Resolve the donor pool and check the study window.

    Donors with any missing value inside the study window are dropped (never
    imputed) and recorded with a reason. Only cells inside the window are read.
    """
    if spec.treated not in dataset.units:
        raise TreatedMissing(f"treated unit {spec.treated!r} not in dataset")
    window = dataset.window_times(spec.start, spec.end)
    if not window:
        raise TooFewPrePeriods("study window contains no periods")
    if spec.t0 >= window[-1]:
        raise NoPostPeriods(f"t0={spec.t0} leaves no post-treatment period (last period {window[-1]})")
    n_pre = sum(1 for t in window if t <= spec.t0)
    if n_pre < 2:
        raise TooFewPrePeriods(f"t0={spec.t0} leaves {n_pre} pre-treatment period(s); need at least 2")
    start, end = window[0], window[-1]

    missing = dataset.missing_times(spec.treated, start, end)
    if missing:
        raise TreatedIncomplete(f"treated unit {spec.treated!r} has missing values at {missing}")

    wanted = set(spec.donors)
    kept: list[str] = []
    dropped: list[tuple[str, str]] = []
    for unit in dataset.units:
        if unit not in wanted:
            continue
        gaps = dataset.missing_times(unit, start, end)
        if gaps:
            dropped.append((unit, f"missing values at {gaps}"))
        else:
            kept.append(unit)
    for unit in spec.donors:
        if unit not in dataset.units:
            dropped.append((unit, "not in dataset"))
    if not kept:
        raise EmptyDonorPool("no donor remains after dropping incomplete units", unit=spec.treated)

    data = dataset.subset([spec.treated, *kept], start, end)
    return ValidatedStudy(
        dataset=data,
        spec=spec,
        dropped_units=tuple(dropped),
        pre_periods=range(0, n_pre),
        post_periods=range(n_pre, len(window)),
    )


def outcome_matrices(study: ValidatedStudy) -> tuple[np.ndarray, np.ndarray]:
    """Treated path (T,) and donor paths (T, J) over all study periods."""
    ds = study.dataset
    y1 = ds.series(study.treated)
    donors = study.donors
    y0 = np.empty((len(ds.times), len(donors)))
    for j, unit in enumerate(donors):
        y0[:, j] = ds.series(unit)
    return y1, y0


def design_matrices(study: ValidatedStudy) -> tuple[np.ndarray, np.ndarray]:
    """Pre-treatment outcome paths: X1 (T_pre,) and X0 (T_pre, J)."""
    ds = study.dataset
    last_pre = study.pre_times[-1]
    x1 = ds.series(study.treated, end=last_pre)
    donors = study.donors
    x0 = np.empty((len(x1), len(donors)))
    for j, unit in enumerate(donors):
        x0[:, j] = ds.series(unit, end=last_pre)
    return x1, x0
