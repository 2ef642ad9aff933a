"""Monte Carlo mismatch statistics and PVT corner tables.

Every Monte Carlo sample draws its perturbations from a generator seeded by
``(seed, sample index)`` alone, so a sample's parameters never depend on
which worker evaluates it or in what order. Statistics use exactly rounded
sums and are therefore independent of evaluation order as well.

Corner behavior is table driven: the shipped tables hold the published
process, supply and temperature corners, and queries between numeric
anchors are interpolated piecewise-linearly.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping, NamedTuple, Sequence, Union

import numpy as np

from ._stats import mean_std
from .chain import large_signal_output, transimpedance_closed_form
from .distortion import WaveformSpec, simulate_transient, thd
from .errors import DataFormatError, DomainError, ExtrapolationError, PtiaError, SolverError
from .noise import input_referred_psd, integrate_rms
from .profile import Profile

# Parameters subject to mismatch. Chain keys name ChainParams fields; noise
# keys name the branches that are not shared with the chain.
CHAIN_MISMATCH = ("gm17", "gm16", "gm11", "gm12", "gm14", "gm2", "r_z", "v_th", "alpha_c")
NOISE_MISMATCH = ("gm26", "gm22", "gm23", "gm25", "gm29", "gm30")
PARAMETERS = CHAIN_MISMATCH + NOISE_MISMATCH
DEFAULT_SIGMA = 0.01

PROCESS_CORNERS = ("ss", "sf", "tt", "fs", "ff")
AXES = {"process": "process", "supply_V": "supply", "temperature_C": "temperature"}
_AXIS_HEADERS = {v: k for k, v in AXES.items()}

T0_KELVIN = 300.15
ZERO_CELSIUS = 273.15

Metric = Union[str, Callable[[Profile], float]]


@dataclass(frozen=True)
class VariationSpec:
    """Monte Carlo setup: sample count, seed and relative sigma per parameter.

    Parameters missing from ``sigmas`` are not perturbed.
    """

    n_samples: int
    seed: int = 0
    sigmas: Mapping[str, float] = field(default_factory=lambda: dict.fromkeys(PARAMETERS, DEFAULT_SIGMA))
    distribution: str = "gaussian"

    def __post_init__(self):
        if self.n_samples < 1:
            raise DomainError(f"n_samples must be at least 1, got {self.n_samples}")
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.distribution != "gaussian":
            raise DomainError(f"unsupported distribution {self.distribution!r}")
        unknown = sorted(set(self.sigmas) - set(PARAMETERS))
        if unknown:
            raise DomainError(f"no mismatch model for {', '.join(unknown)}")
        for name, sigma in self.sigmas.items():
            if not (sigma >= 0.0 and math.isfinite(sigma)):
                raise DomainError(f"sigma for {name} must be finite and >= 0, got {sigma}")
        object.__setattr__(self, "sigmas", {p: float(self.sigmas[p]) for p in PARAMETERS if p in self.sigmas})

    @classmethod
    def uniform(cls, sigma: float, n_samples: int, seed: int = 0) -> "VariationSpec":
        return cls(n_samples, seed, dict.fromkeys(PARAMETERS, sigma))

    def __hash__(self):
        return hash((self.n_samples, self.seed, tuple(self.sigmas.items()), self.distribution))


class MetricStats(NamedTuple):
    mean: float
    std_dev: float
    min: float
    max: float
    count: int


class MonteCarloResult(NamedTuple):
    stats: dict[str, MetricStats]
    values: dict[str, np.ndarray]  # per sample, NaN where rejected
    rejected: tuple[tuple[int, str], ...]

    @property
    def n_rejected(self) -> int:
        return len(self.rejected)

    def to_csv(self) -> str:
        names = list(self.values)
        lines = ["sample," + ",".join(names)]
        n = len(next(iter(self.values.values()))) if names else 0
        for i in range(n):
            lines.append(f"{i}," + ",".join(repr(float(self.values[m][i])) for m in names))
        return "\n".join(lines) + "\n"

    def summary_csv(self) -> str:
        lines = ["metric,mean,std_dev,min,max,count"]
        for name, s in self.stats.items():
            lines.append(f"{name},{s.mean!r},{s.std_dev!r},{s.min!r},{s.max!r},{s.count}")
        lines.append(f"rejected,,,,,{self.n_rejected}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# metrics


def _output_voltage(profile: Profile) -> float:
    return large_signal_output(profile.stimulus.i_dc, profile.chain, 1, profile.models)


def _gain(profile: Profile) -> float:
    return transimpedance_closed_form(profile.chain, 1)


def _irn_uv(profile: Profile) -> float:
    return 1e6 * integrate_rms(input_referred_psd(profile.noise), profile.band)


def _thd_pct(profile: Profile) -> float:
    wave = simulate_transient(profile.stimulus, profile.chain, 1, WaveformSpec(), profile.models)
    return 100.0 * thd(wave, profile.stimulus.f0)


METRICS: dict[str, Callable[[Profile], float]] = {
    "output_voltage_V": _output_voltage,
    "gain_ohm": _gain,
    "irn_uV": _irn_uv,
    "thd_pct": _thd_pct,
}


def _resolve_metrics(metrics: Sequence[Metric] | Mapping[str, Callable]) -> dict[str, Callable[[Profile], float]]:
    if isinstance(metrics, Mapping):
        return dict(metrics)
    out = {}
    for m in metrics:
        if callable(m):
            out[getattr(m, "__name__", f"metric{len(out)}")] = m
        elif m in METRICS:
            out[m] = METRICS[m]
        else:
            raise DomainError(f"unknown metric {m!r}; choose from {sorted(METRICS)}")
    if not out:
        raise DomainError("at least one metric is required")
    return out


def evaluate_metrics(profile: Profile, metrics: Sequence[Metric] = tuple(METRICS)) -> dict[str, float]:
    return {name: float(fn(profile)) for name, fn in _resolve_metrics(metrics).items()}


# ---------------------------------------------------------------------------
# Monte Carlo


def sample_factors(spec: VariationSpec, index: int) -> dict[str, float]:
    """Multiplicative factors ``1 + sigma * z`` for sample ``index``.

    One normal deviate is drawn per entry of :data:`PARAMETERS`, whether or not
    it is perturbed, so changing one sigma leaves the others' draws intact.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=spec.seed, spawn_key=(index,)))
    z = rng.standard_normal(len(PARAMETERS))
    return {p: 1.0 + spec.sigmas[p] * float(z[k]) for k, p in enumerate(PARAMETERS) if p in spec.sigmas}


def perturb(profile: Profile, factors: Mapping[str, float]) -> Profile:
    """Apply relative perturbations. alpha_c is clipped at its ideal value of 1."""
    chain_changes = {}
    for name in CHAIN_MISMATCH:
        if name in factors:
            value = getattr(profile.chain, name) * factors[name]
            if name == "alpha_c":
                value = min(value, 1.0)
            chain_changes[name] = value
    out = profile.with_chain(**chain_changes) if chain_changes else profile
    noise = out.noise
    for name in NOISE_MISMATCH:
        if name in factors:
            branch = int(name[2:])
            noise = noise.with_branch(branch, gm=noise.gm(branch) * factors[name])
    return replace(out, noise=noise)


def _run_sample(profile, spec, metric_fns, index):
    try:
        sample = perturb(profile, sample_factors(spec, index))
        return index, [float(fn(sample)) for fn in metric_fns.values()], None
    except PtiaError as exc:
        return index, None, f"{type(exc).__name__}: {exc}"


def summarize(values) -> MetricStats:
    values = np.asarray(values, dtype=np.float64)
    mean, std = mean_std(values)
    return MetricStats(mean, std, float(values.min()), float(values.max()), int(values.size))


def run_monte_carlo(
    spec: VariationSpec,
    base: Profile,
    metrics: Sequence[Metric] | Mapping[str, Callable] = ("thd_pct",),
    *,
    workers: int = 1,
    order: Sequence[int] | None = None,
) -> MonteCarloResult:
    """Evaluate ``metrics`` on ``spec.n_samples`` perturbed copies of ``base``.

    ``workers`` evaluates samples on a thread pool and ``order`` permutes the
    evaluation sequence; neither changes the result. Samples whose parameters
    become invalid or whose solve fails are excluded and listed in
    ``rejected``.
    """
    metric_fns = _resolve_metrics(metrics)
    if workers < 1:
        raise DomainError(f"workers must be at least 1, got {workers}")
    indices = list(range(spec.n_samples)) if order is None else [int(i) for i in order]
    if sorted(indices) != list(range(spec.n_samples)):
        raise DomainError("order must be a permutation of the sample indices")

    table = np.full((len(metric_fns), spec.n_samples), np.nan)
    rejected = []

    def run(i):
        return _run_sample(base, spec, metric_fns, i)

    if workers == 1:
        results = map(run, indices)
    else:
        pool = ThreadPoolExecutor(max_workers=workers)
        results = pool.map(run, indices)
    try:
        for index, vals, reason in results:
            if vals is None:
                rejected.append((index, reason))
            else:
                table[:, index] = vals
    finally:
        if workers != 1:
            pool.shutdown()

    rejected.sort()
    kept = np.ones(spec.n_samples, dtype=bool)
    kept[[i for i, _ in rejected]] = False
    if not kept.any():
        raise SolverError(f"all {spec.n_samples} samples were rejected; first: {rejected[0][1]}")
    stats = {name: summarize(table[k, kept]) for k, name in enumerate(metric_fns)}
    values = {name: table[k] for k, name in enumerate(metric_fns)}
    return MonteCarloResult(stats, values, tuple(rejected))


# ---------------------------------------------------------------------------
# corner tables


@dataclass(frozen=True)
class CornerTable:
    axis: str
    points: tuple
    metrics: Mapping[str, tuple[float, ...]]

    def __post_init__(self):
        if self.axis not in _AXIS_HEADERS:
            raise DomainError(f"axis must be one of {sorted(_AXIS_HEADERS)}, got {self.axis!r}")
        if not self.points:
            raise DomainError("corner table has no corner points")
        if self.axis == "process":
            points = tuple(str(p) for p in self.points)
            if len(set(points)) != len(points):
                raise DomainError("duplicate process corner")
        else:
            points = tuple(float(p) for p in self.points)
            if not all(math.isfinite(p) for p in points):
                raise DomainError("corner points must be finite")
            if any(b <= a for a, b in zip(points, points[1:])):
                raise DomainError(f"{self.axis} corners must be strictly increasing")
        object.__setattr__(self, "points", points)
        metrics = {}
        for name, values in self.metrics.items():
            values = tuple(float(v) for v in values)
            if len(values) != len(points):
                raise DomainError(f"metric {name!r} has {len(values)} values for {len(points)} corners")
            if not all(math.isfinite(v) for v in values):
                raise DomainError(f"metric {name!r} has a non-finite value")
            metrics[name] = values
        object.__setattr__(self, "metrics", metrics)

    def __hash__(self):
        return hash((self.axis, self.points, tuple(self.metrics.items())))

    @property
    def is_numeric(self) -> bool:
        return self.axis != "process"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([_AXIS_HEADERS[self.axis], *(_fmt_point(p) for p in self.points)])
        for name, values in self.metrics.items():
            writer.writerow([name, *(repr(v) for v in values)])
        return buf.getvalue()


def _fmt_point(p) -> str:
    if isinstance(p, str):
        return p
    return repr(p)


def corner_eval(table: CornerTable, query) -> dict[str, float]:
    """Metric values at ``query``.

    Anchor points return the stored row exactly. Numeric axes interpolate
    linearly between neighbouring anchors and refuse to extrapolate; process
    corners are lookup only.
    """
    if not table.is_numeric:
        try:
            k = table.points.index(str(query))
        except ValueError:
            raise KeyError(f"unknown process corner {query!r}; known: {', '.join(table.points)}") from None
        return {name: values[k] for name, values in table.metrics.items()}

    x = float(query)
    pts = table.points
    if not pts[0] <= x <= pts[-1]:
        raise ExtrapolationError(f"{table.axis} = {x!r} lies outside the table range [{pts[0]!r}, {pts[-1]!r}]")
    k = bisect.bisect_left(pts, x)
    if pts[k] == x:
        return {name: values[k] for name, values in table.metrics.items()}
    x0, x1 = pts[k - 1], pts[k]
    t = (x - x0) / (x1 - x0)
    return {name: v[k - 1] + (v[k] - v[k - 1]) * t for name, v in table.metrics.items()}


def parse_corner_table(text: str, source: str = "<string>") -> CornerTable:
    rows = [(n, r) for n, r in enumerate(csv.reader(io.StringIO(text)), start=1) if any(c.strip() for c in r)]
    if not rows:
        raise DataFormatError(f"{source}: empty corner table")
    line, header = rows[0]
    head = header[0].strip()
    if head not in AXES:
        raise DataFormatError(f"{source}: first header cell must be one of {sorted(AXES)}, got {head!r}", line=line)
    axis = AXES[head]
    raw_points = [c.strip() for c in header[1:]]
    if axis == "process":
        points = raw_points
    else:
        points = [_parse_number(c, source, line) for c in raw_points]
    metrics = {}
    for line, row in rows[1:]:
        if len(row) != len(header):
            raise DataFormatError(f"{source}: expected {len(header)} cells, got {len(row)}", line=line)
        name = row[0].strip()
        if name in metrics:
            raise DataFormatError(f"{source}: duplicate metric {name!r}", line=line)
        metrics[name] = [_parse_number(c, source, line) for c in row[1:]]
    try:
        return CornerTable(axis, tuple(points), metrics)
    except DomainError as exc:
        raise DataFormatError(f"{source}: {exc}") from exc


def _parse_number(cell: str, source: str, line: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise DataFormatError(f"{source}: {cell.strip()!r} is not a number", line=line) from None


def load_corner_table(source: str | Path) -> CornerTable:
    """Load a corner table by axis name (shipped tables) or from a CSV path."""
    if isinstance(source, str) and source in _AXIS_HEADERS:
        name = f"corners_{source}.csv"
        text = resources.files("ptia").joinpath("data", name).read_text(encoding="utf-8")
        return parse_corner_table(text, source=name)
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_corner_table(text, source=str(path))


# ---------------------------------------------------------------------------
# optional physical temperature model (exploratory, not fitted to any table)


def physical_temperature_profile(profile: Profile, temp_c: float, t0_kelvin: float = T0_KELVIN) -> Profile:
    """Profile at ``temp_c`` under a mobility-style ``(T/T0)^-1.5`` scaling.

    Transconductances and ``k_proc`` scale by the same factor and the noise
    temperature follows ``temp_c``. This is an exploratory model; it is not
    fitted to the published corner tables.
    """
    t = temp_c + ZERO_CELSIUS
    if not t > 0.0:
        raise DomainError(f"temperature must be above absolute zero, got {temp_c} degC")
    s = (t / t0_kelvin) ** -1.5
    chain_changes = {name: getattr(profile.chain, name) * s for name in ("gm17", "gm16", "gm11", "gm12", "gm14", "gm2", "k_proc")}
    out = profile.with_chain(**chain_changes)
    noise = out.noise
    for name in NOISE_MISMATCH:
        b = int(name[2:])
        noise = noise.with_branch(b, gm=noise.gm(b) * s)
    return replace(out, noise=replace(noise, temperature=t))
