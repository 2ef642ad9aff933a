"""Command-line front end.

Exit codes: 0 success, 1 usage, 2 configuration, 3 numeric, 4 data format.
Every file written is listed on standard output as ``wrote <path>``.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

from . import __version__
from . import calibration as cal
from . import svg
from .chain import SweepSpec, linear_fit, sweep, transimpedance_closed_form
from .control import SelectWord, decode, gain_index
from .distortion import Stimulus, WaveformSpec, simulate_transient, thd
from .errors import ConfigError, DataFormatError, DomainError, ExtrapolationWarning, PtiaError
from .noise import BandSpec, input_referred_psd, integrate_rms, psd_terms
from .profile import load_profile
from .variation import (
    METRICS,
    PARAMETERS,
    VariationSpec,
    corner_eval,
    evaluate_metrics,
    load_corner_table,
    physical_temperature_profile,
    run_monte_carlo,
)

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DATA = 0, 1, 2, 3, 4
FORMATS = ("csv", "svg")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return f"{x:#.4g}"


def _formats(text: str) -> tuple[str, ...]:
    parts = tuple(p.strip() for p in text.split(",") if p.strip())
    bad = [p for p in parts if p not in FORMATS]
    if bad or not parts:
        raise argparse.ArgumentTypeError(f"format must be csv, svg or csv,svg; got {text!r}")
    return parts


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _select(text: str) -> SelectWord:
    try:
        return SelectWord.from_string(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _global_options(parser: argparse.ArgumentParser, suppress: bool):
    default = (lambda value: argparse.SUPPRESS) if suppress else (lambda value: value)
    parser.add_argument("--profile", default=default(None), help="profile file (default: shipped calibrated profile)")
    parser.add_argument("--out", default=default("."), help="output directory (default: current directory)")
    parser.add_argument("--format", type=_formats, default=default(("csv",)), help="csv, svg or csv,svg")
    parser.add_argument("--seed", type=_seed, default=default(0), help="Monte Carlo seed (unsigned 64-bit)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ptia", description="Potentiostat transimpedance readout simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_options(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("gain", parents=[common], help="closed-form transimpedance for a select code")
    p.add_argument("code", type=_select, help="3-bit select code, e.g. 101")

    p = sub.add_parser("sweep", parents=[common], help="large-signal DC sweep")
    p.add_argument("--i-min", type=float, default=4.2e-6, help="first current (A)")
    p.add_argument("--i-max", type=float, default=180e-6, help="last current (A)")
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--scale", choices=("linear", "logarithmic"), default="linear")
    p.add_argument("--code", type=_select, default=SelectWord(0, 0, 0), help="select code (default 000)")

    p = sub.add_parser("noise", parents=[common], help="input-referred thermal noise")
    p.add_argument("--f-low", type=float, default=None, help="band start (Hz, default from profile)")
    p.add_argument("--f-high", type=float, default=None, help="band stop (Hz, default from profile)")

    p = sub.add_parser("thd", parents=[common], help="transient THD under a sinusoidal current")
    p.add_argument("--i-dc", type=float, required=True, help="stimulus mean (A)")
    p.add_argument("--i-amp", type=float, required=True, help="stimulus peak amplitude (A)")
    p.add_argument("--f0", type=float, default=1e3, help="stimulus frequency (Hz)")
    p.add_argument("--harmonics", type=int, default=9)
    p.add_argument("--periods", type=int, default=4)
    p.add_argument("--samples-per-period", type=int, default=64)
    p.add_argument("--code", type=_select, default=SelectWord(0, 0, 0))

    p = sub.add_parser("montecarlo", parents=[common], help="Monte Carlo mismatch statistics")
    p.add_argument("--samples", type=int, default=400)
    p.add_argument("--sigma", type=float, default=0.01, help="relative sigma for every mismatch parameter")
    p.add_argument("--metrics", default="thd_pct", help=f"comma list from {', '.join(METRICS)}")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("pvt", parents=[common], help="process, supply and temperature corners")
    p.add_argument("axis", choices=("process", "supply", "temperature"))
    p.add_argument("--at", action="append", default=None, help="corner to evaluate (repeatable)")
    p.add_argument("--table", default=None, help="corner CSV to use instead of the shipped table")
    p.add_argument("--physical", action="store_true",
                   help="temperature axis only: evaluate the exploratory (T/T0)^-1.5 model instead of the table")

    p = sub.add_parser("calibrate", parents=[common], help="fit a calibration curve to measurements")
    p.add_argument("data", help="CSV with conc_mM and i_A or v_V columns")
    p.add_argument("--target", choices=cal.TARGETS, default="voltage")
    p.add_argument("--name", default="curve", help="base name of the written files")
    p.add_argument("--peaks", action="store_true", help="also extract per-scan peak currents")

    p = sub.add_parser("convert", parents=[common], help="convert measurements to concentration")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--curve", help="curve file written by 'calibrate'")
    source.add_argument("--endpoint", action="store_true", help="use the 1.19 V / 1.67 V endpoint voltage curve")
    p.add_argument("values", type=float, nargs="+", help="measured values in the curve's unit")
    return parser


# ---------------------------------------------------------------------------


class _Writer:
    def __init__(self, out: str):
        self.out = Path(out)
        self.written: list[Path] = []

    def write(self, name: str, text: str) -> None:
        try:
            self.out.mkdir(parents=True, exist_ok=True)
            path = self.out / name
            path.write_text(text, encoding="utf-8", newline="\n")
        except OSError as exc:
            raise ConfigError(f"cannot write {self.out / name}: {exc.strerror or exc}") from exc
        self.written.append(path)
        print(f"wrote {path}")


def _spec(factory, *args, **kwargs):
    """Build a spec from command-line values; invalid values are usage errors."""
    try:
        return factory(*args, **kwargs)
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def cmd_gain(args, profile, writer):
    j = gain_index(args.code)
    r_t = transimpedance_closed_form(profile.chain, j)
    print(f"select={args.code} control={decode(args.code)} j={j}")
    print(f"transimpedance_ohm={r_t!r}")
    print(f"gain: {_fmt(r_t)} ohm")


def cmd_sweep(args, profile, writer):
    spec = _spec(SweepSpec, args.i_min, args.i_max, args.points, args.scale)
    j = gain_index(args.code)
    resp = sweep(spec, profile.chain, j, profile.models)
    fit = linear_fit(resp)
    if "csv" in args.format:
        writer.write("sweep.csv", resp.to_csv())
    if "svg" in args.format:
        writer.write("sweep.svg", svg.line_chart(
            resp.i_sen * 1e6, resp.v_out, title=f"DC sweep, j={j}", x_label="I_sen (uA)", y_label="V_out (V)"))
    print(
        f"sweep: {spec.n_points} points, V_out {_fmt(resp.v_out[0])}-{_fmt(resp.v_out[-1])} V, "
        f"slope {_fmt(fit.slope)} ohm, R^2 {fit.r_squared:.6f}, saturated {int(resp.saturated.sum())}"
    )


def cmd_noise(args, profile, writer):
    f_low = profile.band.f_low if args.f_low is None else args.f_low
    f_high = profile.band.f_high if args.f_high is None else args.f_high
    band = _spec(BandSpec, f_low, f_high)
    psd = input_referred_psd(profile.noise)
    rms = integrate_rms(psd, band)
    print("psd_V2_per_Hz,f_low_Hz,f_high_Hz,v_rms_V")
    print(f"{psd!r},{band.f_low!r},{band.f_high!r},{rms!r}")
    if "csv" in args.format:
        lines = ["term,psd_V2_per_Hz"] + [f"{k},{v!r}" for k, v in psd_terms(profile.noise).items()]
        writer.write("noise_terms.csv", "\n".join(lines) + "\n")
    print(f"noise: {_fmt(rms * 1e6)} uVrms over {_fmt(band.f_low)}-{_fmt(band.f_high)} Hz")


def cmd_thd(args, profile, writer):
    stim = _spec(Stimulus, args.i_dc, args.i_amp, args.f0)
    spec = _spec(WaveformSpec, args.periods, args.samples_per_period)
    if args.harmonics < 2:
        raise UsageError("--harmonics must be at least 2")
    j = gain_index(args.code)
    wave = simulate_transient(stim, profile.chain, j, spec, profile.models)
    value = thd(wave, stim.f0, args.harmonics)
    if "csv" in args.format:
        writer.write("waveform.csv", wave.to_csv())
    if "svg" in args.format:
        writer.write("waveform.svg", svg.line_chart(
            wave.t * 1e3, wave.v, title=f"Transient, j={j}", x_label="t (ms)", y_label="V_out (V)"))
    print(f"thd_fraction={value!r}")
    print(f"thd: {_fmt(100.0 * value)} % ({args.harmonics} harmonics, saturated samples {int(wave.saturated.sum())})")


def cmd_montecarlo(args, profile, writer):
    metrics = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    unknown = [m for m in metrics if m not in METRICS]
    if unknown or not metrics:
        raise UsageError(f"unknown metric(s) {', '.join(unknown)}; choose from {', '.join(METRICS)}")
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    spec = _spec(VariationSpec, args.samples, args.seed, dict.fromkeys(PARAMETERS, args.sigma))
    result = run_monte_carlo(spec, profile, metrics, workers=args.workers)
    if "csv" in args.format:
        writer.write("montecarlo_samples.csv", result.to_csv())
        writer.write("montecarlo_summary.csv", result.summary_csv())
    if "svg" in args.format:
        first = metrics[0]
        writer.write("montecarlo.svg", svg.line_chart(
            range(spec.n_samples), result.values[first], title=f"Monte Carlo {first}",
            x_label="sample", y_label=first))
    for name, s in result.stats.items():
        print(f"{name}: mean {_fmt(s.mean)}, std {_fmt(s.std_dev)}, min {_fmt(s.min)}, max {_fmt(s.max)}, n {s.count}")
    print(f"rejected: {result.n_rejected} of {spec.n_samples}")


def cmd_pvt(args, profile, writer):
    if args.physical:
        return _pvt_physical(args, profile, writer)
    table = load_corner_table(args.table) if args.table else load_corner_table(args.axis)
    if table.axis != args.axis:
        raise DataFormatError(f"table is for the {table.axis} axis, not {args.axis}")
    queries = args.at if args.at else list(table.points)
    if table.is_numeric:
        try:
            queries = [float(q) for q in queries]
        except ValueError:
            raise UsageError(f"{args.axis} corners must be numbers") from None
    rows = []
    for q in queries:
        try:
            rows.append((q, corner_eval(table, q)))
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    names = list(table.metrics)
    head = {"process": "process", "supply": "supply_V", "temperature": "temperature_C"}[table.axis]
    lines = [",".join([head, *names])]
    for q, m in rows:
        lines.append(",".join([q if isinstance(q, str) else repr(q), *(repr(m[n]) for n in names)]))
    if "csv" in args.format:
        writer.write(f"pvt_{args.axis}.csv", "\n".join(lines) + "\n")
    if "svg" in args.format and table.is_numeric and len(rows) > 1:
        writer.write(f"pvt_{args.axis}.svg", svg.line_chart(
            [q for q, _ in rows], [m[names[0]] for _, m in rows],
            title=f"{args.axis} corners", x_label=head, y_label=names[0]))
    for q, m in rows:
        print(f"{q}: " + ", ".join(f"{n} {_fmt(m[n])}" for n in names))


def _pvt_physical(args, profile, writer):
    if args.axis != "temperature":
        raise UsageError("--physical applies to the temperature axis only")
    try:
        temps = [float(q) for q in args.at] if args.at else [-40.0, -20.0, 0.0, 20.0, 40.0, 60.0, 80.0, 100.0]
    except ValueError:
        raise UsageError("temperatures must be numbers") from None
    names = list(METRICS)
    lines = ["temperature_C," + ",".join(names)]
    print("exploratory physical temperature model, not fitted to the corner tables")
    for t in temps:
        m = evaluate_metrics(_spec(physical_temperature_profile, profile, t))
        lines.append(f"{t!r}," + ",".join(repr(m[n]) for n in names))
        print(f"{t}: " + ", ".join(f"{n} {_fmt(m[n])}" for n in names))
    if "csv" in args.format:
        writer.write("pvt_temperature_physical.csv", "\n".join(lines) + "\n")


def cmd_calibrate(args, profile, writer):
    records = cal.parse_records(args.data)
    curve = cal.fit_records(records, args.target)
    writer.write(f"{args.name}.txt", cal.format_curve(curve))
    if args.peaks:
        peaks = cal.peak_currents(records)
        lines = ["scan,index,i_A"] + [f"{s},{r.index},{r.i_A!r}" for s, r in peaks.items()]
        writer.write(f"{args.name}_peaks.csv", "\n".join(lines) + "\n")
    print(
        f"curve: {curve.target} = {_fmt(curve.slope)} {curve.unit}/mM * c + {_fmt(curve.intercept)} {curve.unit}, "
        f"R^2 {curve.r_squared:.6f}, domain {_fmt(curve.c_min)}-{_fmt(curve.c_max)} mM, {len(records)} records"
    )


def cmd_convert(args, profile, writer):
    curve = cal.endpoint_voltage_curve() if args.endpoint else cal.load_curve(args.curve)
    for value in args.values:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ExtrapolationWarning)
            c = cal.convert(curve, value)
        note = " (extrapolated)" if any(issubclass(w.category, ExtrapolationWarning) for w in caught) else ""
        print(f"{_fmt(value)} {curve.unit} -> {_fmt(c)} mM{note}")


COMMANDS = {
    "gain": cmd_gain,
    "sweep": cmd_sweep,
    "noise": cmd_noise,
    "thd": cmd_thd,
    "montecarlo": cmd_montecarlo,
    "pvt": cmd_pvt,
    "calibrate": cmd_calibrate,
    "convert": cmd_convert,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        profile = load_profile(args.profile) if args.command != "convert" else None
        COMMANDS[args.command](args, profile, _Writer(args.out))
    except UsageError as exc:
        print(f"ptia {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"ptia: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataFormatError as exc:
        print(f"ptia: data format error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except PtiaError as exc:
        print(f"ptia: numeric error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
