"""Pseudo-periodic learning and two-dimensional anomaly classification.

Time folds as ``t = n*P + tau``: ``n`` counts periods, ``tau`` indexes one of
``p`` slots inside a period. Each slot keeps running statistics across periods
(the topological direction); neighbouring slots in the same period give the
local direction. A value is scored by its standardized deviation in both
directions, combined in quadrature into Delta and banded at sqrt(2),
2*sqrt(2) and 3*sqrt(2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable

from .chain import convex_update
from .errors import DomainError, UndefinedResult

WEEK = 604800
BANDS = ("normal", "yellow", "orange", "red")
_EPS = 4 * 2.220446049250313e-16


@dataclass
class SlotStats:
    """Running statistics of one slot across periods.

    ``mean``/``m2`` are a Welford accumulator over every retained sample
    (population variance ``m2 / count``). ``sliding`` is the iteratively
    weighted mean with forgetting factor c, ``sliding_var`` its companion
    variance; both start from the first sample.
    """

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    sliding: float | None = None
    sliding_var: float = 0.0
    last_period: int = -1

    def push(self, x: float, c: float, period: int | None = None):
        self.count += 1
        d = x - self.mean
        self.mean += d / self.count
        self.m2 += d * (x - self.mean)
        if self.sliding is None:
            self.sliding = x
        else:
            d = x - self.sliding
            self.sliding = float(convex_update(self.sliding, x, c))
            self.sliding_var = c * (self.sliding_var + (1.0 - c) * d * d)
        if period is not None:
            self.last_period = max(self.last_period, period)

    def pop(self, x: float):
        """Remove one sample from the Welford accumulator (the sliding mean is
        not reversible and is left alone)."""
        if self.count <= 0:
            raise UndefinedResult("pop from an empty slot")
        if self.count == 1:
            self.count, self.mean, self.m2 = 0, 0.0, 0.0
            return
        old = (self.count * self.mean - x) / (self.count - 1)
        self.m2 = max(0.0, self.m2 - (x - old) * (x - self.mean))
        self.mean = old
        self.count -= 1
        if self.count == 1:
            self.m2 = 0.0  # drop rounding residue; one sample has no spread

    @property
    def variance(self) -> float:
        return self.m2 / self.count if self.count else 0.0

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass
class PeriodicModel:
    period: int = WEEK
    slots: int = 336
    forgetting: float = 0.8
    horizon: int | None = None  # periods retained; None keeps everything
    origin: int = 0
    stats: list[SlotStats] = field(default_factory=list)
    cells: dict[tuple[int, int], list[float]] = field(default_factory=dict)
    stream_mean: float | None = None  # iteratively weighted mean along time
    latest_period: int = -1

    def __post_init__(self):
        if self.period <= 0 or self.slots <= 0:
            raise DomainError("period and slot count must be positive")
        if self.period % self.slots:
            raise DomainError(f"{self.slots} slots do not evenly divide period {self.period}")
        if not 0.0 < self.forgetting < 1.0:
            raise DomainError("forgetting factor must lie in (0, 1)")
        if self.horizon is not None and self.horizon < 1:
            raise DomainError("horizon must be at least one period")
        if not self.stats:
            self.stats = [SlotStats() for _ in range(self.slots)]
        if len(self.stats) != self.slots:
            raise DomainError("stats length must equal the slot count")
        self._periods = [set() for _ in range(self.slots)]
        for (n, tau) in self.cells:
            self._periods[tau].add(n)

    @property
    def slot_width(self) -> int:
        return self.period // self.slots

    def periods_in_slot(self, tau: int) -> set[int]:
        return self._periods[tau]

    def value(self, n: int, tau: int) -> float:
        vals = self.cells.get((n, tau))
        if not vals:
            raise UndefinedResult(f"no sample at period {n}, slot {tau}")
        return math.fsum(vals) / len(vals)


def slot(t, model: PeriodicModel) -> tuple[int, int]:
    """Fold a timestamp into (period index, slot index)."""
    s = t - model.origin
    if s < 0:
        raise DomainError(f"timestamp {t} precedes the origin {model.origin}")
    n = int(s // model.period)
    tau = int((s - n * model.period) // model.slot_width)
    return n, min(tau, model.slots - 1)


def _evict(model: PeriodicModel):
    cutoff = model.latest_period - model.horizon
    for key in [k for k in model.cells if k[0] <= cutoff]:
        n, tau = key
        for v in model.cells.pop(key):
            model.stats[tau].pop(v)
        model._periods[tau].discard(n)


def update(model: PeriodicModel, t, value: float) -> PeriodicModel:
    """Route one sample into its slot and update every running statistic."""
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"non-finite sample {value!r}")
    n, tau = slot(t, model)
    if model.horizon is not None and n <= model.latest_period - model.horizon:
        return model  # already outside the memory horizon
    model.cells.setdefault((n, tau), []).append(value)
    model._periods[tau].add(n)
    model.stats[tau].push(value, model.forgetting, n)
    model.stream_mean = value if model.stream_mean is None else float(
        convex_update(model.stream_mean, value, model.forgetting))
    if n > model.latest_period:
        model.latest_period = n
        if model.horizon is not None:
            _evict(model)
    return model


def _mean_std(values: list[float]) -> tuple[float, float]:
    m = math.fsum(values) / len(values)
    var = math.fsum((v - m) ** 2 for v in values) / len(values)
    return m, math.sqrt(var)


def local_average(model: PeriodicModel, n: int, tau: int, window: int) -> tuple[float, float]:
    """Mean and population deviation over slots ``tau .. tau+window-1`` (mod p)
    inside period ``n``."""
    if window < 1:
        raise DomainError("window must cover at least one slot")
    vals = []
    for k in range(window):
        vals.extend(model.cells.get((n, (tau + k) % model.slots), ()))
    if not vals:
        raise UndefinedResult(f"no data in window at period {n}, slot {tau}")
    return _mean_std(vals)


def band_of_squared(dsq: float) -> str:
    # squared thresholds 2, 8, 18; a few ulps of slack so that points placed
    # exactly on a boundary land in the upper band
    for k, name in ((3, "red"), (2, "orange"), (1, "yellow")):
        if dsq >= 2 * k * k * (1 - _EPS):
            return name
    return "normal"


def classify(delta: float) -> str:
    return band_of_squared(delta * delta)


def _ratio(d: float, s: float) -> float:
    if s > 0:
        return d / s
    return 0.0 if d == 0 else math.inf


def combine(delta_t: float, sigma_t: float, delta_p: float, sigma_p: float) -> float:
    """Quadrature combination of the two standardized deviations."""
    return math.hypot(_ratio(delta_t, sigma_t), _ratio(delta_p, sigma_p))


@dataclass(frozen=True)
class DeviationReport:
    n: int
    tau: int
    value: float
    delta_t: float
    delta_p: float
    sigma_t: float
    sigma_p: float
    mean_t: float
    mean_p: float
    delta: float
    band: str
    normal: bool  # component-wise criterion: |dT| < 2 sT and |dP| < 2 sP
    provisional: bool
    sliding_t: float | None = None


def deviation(model: PeriodicModel, n: int, tau: int, neighbours: int = 6,
              min_periods: int = 3) -> DeviationReport:
    """Score the value at (n, tau) against what the rest of the data expects.

    The topological reference is slot ``tau`` with this cell's own samples
    removed; the local reference is the ``neighbours`` slots on either side of
    ``tau`` within period ``n``. Excluding the point under test keeps a spike
    from inflating the scale it is measured against. Reports resting on fewer
    than ``min_periods`` other periods are marked provisional.
    """
    if neighbours < 1:
        raise DomainError("need at least one neighbouring slot")
    own = model.cells.get((n, tau))
    if not own:
        raise UndefinedResult(f"no sample at period {n}, slot {tau}")
    chi = math.fsum(own) / len(own)

    ref = replace(model.stats[tau])
    for v in own:
        ref.pop(v)
    if ref.count == 0:
        raise UndefinedResult(f"slot {tau} has no history outside period {n}")
    mean_t, sigma_t = ref.mean, ref.std

    local = []
    for k in range(1, min(neighbours, (model.slots - 1) // 2 + 1) + 1):
        for j in {(tau - k) % model.slots, (tau + k) % model.slots} - {tau}:
            local.extend(model.cells.get((n, j), ()))
    if not local:
        raise UndefinedResult(f"no neighbouring data around slot {tau} in period {n}")
    mean_p, sigma_p = _mean_std(local)

    d_t, d_p = chi - mean_t, chi - mean_p
    z_t, z_p = _ratio(d_t, sigma_t), _ratio(d_p, sigma_p)
    dsq = z_t * z_t + z_p * z_p
    normal = all(abs(d) < 2 * s or (d == 0 and s == 0)
                 for d, s in ((d_t, sigma_t), (d_p, sigma_p)))
    others = len(model.periods_in_slot(tau) - {n})
    return DeviationReport(n, tau, chi, d_t, d_p, sigma_t, sigma_p, mean_t, mean_p,
                           math.sqrt(dsq), band_of_squared(dsq), normal,
                           others < min_periods, model.stats[tau].sliding)


def detect(model: PeriodicModel, neighbours: int = 6, periods: Iterable[int] | None = None,
           min_periods: int = 3) -> list[DeviationReport]:
    """Deviation reports for every scorable cell, ordered by (n, tau)."""
    wanted = None if periods is None else set(periods)
    out = []
    for n, tau in sorted(model.cells):
        if wanted is not None and n not in wanted:
            continue
        try:
            out.append(deviation(model, n, tau, neighbours, min_periods))
        except UndefinedResult:
            continue
    return out


# -- persistence
#   SERIES <name> period=<P> slots=<p> c=<c> horizon=<T|-> origin=<t0> stream=<x|-> latest=<n>
#   SERIES-SLOT <name> <tau> n=<count> mean=<m> m2=<m2> ewm=<x|-> ewv=<v> last=<n>
#   SERIES-CELL <name> <n> <tau> <v1> [<v2> ...]

def _opt(x):
    return "-" if x is None else repr(x)


def _kv(tokens, keys):
    out = {}
    for tok, key in zip(tokens, keys):
        k, sep, v = tok.partition("=")
        if not sep or k != key:
            raise ValueError(f"expected {key}=..., got {tok!r}")
        out[key] = v
    if len(tokens) != len(keys):
        raise ValueError(f"expected fields {', '.join(keys)}")
    return out


def format_series(name: str, model: PeriodicModel) -> list[str]:
    lines = [f"SERIES {name} period={model.period} slots={model.slots} "
             f"c={model.forgetting!r} horizon={'-' if model.horizon is None else model.horizon} "
             f"origin={model.origin} stream={_opt(model.stream_mean)} latest={model.latest_period}"]
    for tau, s in enumerate(model.stats):
        if s.count or s.sliding is not None:
            lines.append(f"SERIES-SLOT {name} {tau} n={s.count} mean={s.mean!r} m2={s.m2!r} "
                         f"ewm={_opt(s.sliding)} ewv={s.sliding_var!r} last={s.last_period}")
    for (n, tau) in sorted(model.cells):
        vals = " ".join(repr(v) for v in model.cells[(n, tau)])
        lines.append(f"SERIES-CELL {name} {n} {tau} {vals}")
    return lines


def parse_series_header(line: str) -> tuple[str, PeriodicModel]:
    tok = line.split()
    if len(tok) < 2 or tok[0] != "SERIES":
        raise ValueError("expected SERIES <name> ...")
    kv = _kv(tok[2:], ("period", "slots", "c", "horizon", "origin", "stream", "latest"))
    model = PeriodicModel(int(kv["period"]), int(kv["slots"]), float(kv["c"]),
                          None if kv["horizon"] == "-" else int(kv["horizon"]),
                          int(kv["origin"]))
    model.stream_mean = None if kv["stream"] == "-" else float(kv["stream"])
    model.latest_period = int(kv["latest"])
    return tok[1], model


def parse_series_slot(line: str) -> tuple[str, int, SlotStats]:
    tok = line.split()
    if len(tok) < 3 or tok[0] != "SERIES-SLOT":
        raise ValueError("expected SERIES-SLOT <name> <tau> ...")
    kv = _kv(tok[3:], ("n", "mean", "m2", "ewm", "ewv", "last"))
    s = SlotStats(int(kv["n"]), float(kv["mean"]), float(kv["m2"]),
                  None if kv["ewm"] == "-" else float(kv["ewm"]), float(kv["ewv"]),
                  int(kv["last"]))
    return tok[1], int(tok[2]), s


def parse_series_cell(line: str) -> tuple[str, int, int, list[float]]:
    tok = line.split()
    if len(tok) < 5 or tok[0] != "SERIES-CELL":
        raise ValueError("expected SERIES-CELL <name> <n> <tau> <values...>")
    return tok[1], int(tok[2]), int(tok[3]), [float(v) for v in tok[4:]]


def assemble_series(header: PeriodicModel, slots: dict[int, SlotStats],
                    cells: dict[tuple[int, int], list[float]]) -> PeriodicModel:
    for tau, s in slots.items():
        if not 0 <= tau < header.slots:
            raise ValueError(f"slot {tau} outside 0..{header.slots - 1}")
        header.stats[tau] = s
    for (n, tau), vals in cells.items():
        if not 0 <= tau < header.slots:
            raise ValueError(f"slot {tau} outside 0..{header.slots - 1}")
        header.cells[(n, tau)] = vals
        header._periods[tau].add(n)
    return header
