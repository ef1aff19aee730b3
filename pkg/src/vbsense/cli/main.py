"""``vbsense`` command-line front end.

Every subcommand writes its tables (CSV), plots (SVG), a JSON summary and a
manifest.json with sha256 hashes of the outputs into ``--out-dir``.
Exit codes: 0 ok, 1 other errors, 2 configuration or input error,
3 fit failure, 4 numerical non-convergence.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .. import __version__
from ..errors import (ConfigError, EnergyOutOfRange, FitError, NoPolarization, NotConverged,
                      QuadratureNotConverged, SequenceSyntaxError, TraceFormatError,
                      VBSenseError)
from ..fitting import (get_model, lm_fit, seed_decay, seed_multi_lorentzian, seed_rabi_two_tone,
                       seed_saturation)
from ..ionrange import IonBeamSpec, implanted_histogram, most_probable_depth, simulate_ions
from ..plasmonics import ORIENTATIONS, enhancement_vs_thickness
from ..pulsed import REFERENCE_TEMPLATES, TEMPLATES, parse_sequence, run_sequence
from ..sensitivity import analytic_optimum_power, optimize_sensitivity, sensitivity_vs_mw_power
from ..spectra import LorentzianLine, OdmrSpectrum, add_shot_noise, power_broadened_line, synth_spectrum
from ..spin import resonance_frequencies_axial
from . import io, svg
from .config import load_config

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_FIT, EXIT_NUMERIC = 0, 1, 2, 3, 4


def _out_dir(args, cfg):
    path = Path(args.out_dir or cfg.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _seed(args, cfg):
    return cfg.seed if args.seed is None else args.seed


def _finish(args, cfg, out, outputs, summary):
    outputs = list(outputs) + [io.write_json(out / "summary.json", summary)]
    inputs = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out_dir", "threads")}
    inputs["config"] = cfg.as_dict()
    io.write_manifest(out, args.command, inputs, _seed(args, cfg), __version__, outputs)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


# --- simulate-odmr ---

def cmd_simulate_odmr(args, cfg):
    out = _out_dir(args, cfg)
    seed = _seed(args, cfg)
    cal = cfg.calibration(args.laser_power)
    contrast, fwhm = power_broadened_line(cal.response, args.mw_power)
    pair = resonance_frequencies_axial(cfg.spin, args.field_mt * 1e-3)
    lines = [LorentzianLine(pair.nu1, fwhm, contrast), LorentzianLine(pair.nu2, fwhm, contrast)]
    o = cfg.odmr
    grid = np.linspace(o.f_min_hz, o.f_max_hz, o.n_points)
    spec = add_shot_noise(synth_spectrum(lines, grid, cal.count_rate, o.dwell_s), seed)
    csv_path = io.write_csv(out / "spectrum.csv", ["freq_hz", "counts", "dwell_s"],
                            [spec.freqs, spec.counts, np.full(grid.size, o.dwell_s)])
    meta = dict(spec.metadata, field_t=args.field_mt * 1e-3, mw_power_w=args.mw_power,
                laser_mw=args.laser_power, count_rate=cal.count_rate,
                splitting_hz=pair.splitting)
    side = io.write_json(out / "spectrum.json", meta)
    plot = svg.line_plot(out / "spectrum.svg", [("counts", grid / 1e9, spec.counts, "points")],
                         "microwave frequency (GHz)", "counts per bin",
                         f"CW ODMR, B = {args.field_mt:g} mT")
    return _finish(args, cfg, out, [csv_path, side, plot],
                   {"nu1_hz": pair.nu1, "nu2_hz": pair.nu2, "splitting_hz": pair.splitting,
                    "contrast": contrast, "fwhm_hz": fwhm})


# --- fit ---

_DEFAULT_MODELS = {"odmr": "multi_lorentzian(2)", "saturation": "saturation",
                   "decay": "exp_decay", "rabi": "rabi_two_tone"}


def _initial_guess(model, trace, dwell):
    if model.model_id.startswith("multi_lorentzian"):
        n = (model.n_params - 1) // 3
        spec = OdmrSpectrum(trace.x, np.clip(trace.y, 0, None), dwell, float(np.max(trace.y)) / dwell)
        return seed_multi_lorentzian(spec, n)
    if model.model_id == "saturation":
        return seed_saturation(trace.x, trace.y)
    if model.model_id == "exp_decay":
        return seed_decay(trace.x, trace.y)
    if model.model_id == "echo_decay":
        return seed_decay(trace.x, trace.y, rate_mult=2.0)
    if model.model_id == "rabi_two_tone":
        return seed_rabi_two_tone(trace.x, trace.y)
    raise ConfigError(f"no automatic starting values for {model.model_id}; pass --p0")


def cmd_fit(args, cfg):
    out = _out_dir(args, cfg)
    trace = io.read_trace(args.trace, args.kind)
    try:
        model = get_model(args.model or _DEFAULT_MODELS[trace.kind])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    header, data = io.read_csv(args.trace)
    names = [io.split_header(h)[0] for h in header]
    dwell = float(data[0, names.index("dwell")]) if "dwell" in names else 1.0

    if args.p0:
        try:
            p0 = np.array([float(v) for v in args.p0.split(",")])
        except ValueError:
            raise ConfigError(f"--p0 must be a comma-separated list of numbers, got {args.p0!r}") from None
    else:
        p0 = _initial_guess(model, trace, dwell)
    if trace.sigma is not None:
        sigma, absolute = trace.sigma, True
    elif trace.kind == "odmr":
        sigma, absolute = np.sqrt(np.clip(trace.y, 1.0, None)), True
    else:
        sigma, absolute = np.ones_like(trace.y), False
    try:
        result = lm_fit(model, trace.x, trace.y, sigma, p0, absolute_sigma=absolute)
    except NotConverged as exc:
        r = exc.result
        print(f"fit did not converge after {r.n_iterations} iterations; "
              f"last chi2_red = {r.chi2_reduced:.6g}; last params = {r.as_dict()}", file=sys.stderr)
        raise
    report = result.to_json_dict()
    report.update(trace=str(Path(args.trace).name), kind=trace.kind, n_points=int(trace.x.size),
                  x_unit="SI", p0=[float(v) for v in p0])
    rep = io.write_json(out / "fit_report.json", report)
    scale = io.UNITS[trace.x_unit]
    xs = np.linspace(trace.x[0], trace.x[-1], 400)
    plot = svg.line_plot(out / "fit_overlay.svg",
                         [("data", trace.x / scale, trace.y, "points"),
                          (model.model_id, xs / scale, model(xs, result.params), "line")],
                         f"x ({trace.x_unit})", "signal", f"fit: {model.model_id}")
    return _finish(args, cfg, out, [rep, plot],
                   {"model_id": model.model_id, "params": result.as_dict(),
                    "chi2_reduced": result.chi2_reduced})


# --- sensitivity ---

def cmd_sensitivity(args, cfg):
    out = _out_dir(args, cfg)
    cal = cfg.calibration(args.laser_power)
    powers = np.geomspace(args.pmin, args.pmax, args.points)
    curve = sensitivity_vs_mw_power(cal.response, cal.count_rate, powers)
    opt = optimize_sensitivity(cal.response, cal.count_rate, (args.pmin, args.pmax))
    csv_path = io.write_csv(out / "sensitivity.csv", ["power_w", "eta_t_per_sqrthz"],
                            [curve[:, 0], curve[:, 1]])
    plot = svg.line_plot(out / "sensitivity.svg",
                         [(f"{args.laser_power:g} mW laser", np.log10(curve[:, 0]), curve[:, 1] * 1e6, "line")],
                         "log10(microwave power / W)", "eta_B (uT/sqrt(Hz))", "shot-noise sensitivity")
    return _finish(args, cfg, out, [csv_path, plot],
                   {"p_opt_w": opt.p_opt, "eta_opt_t_per_sqrthz": opt.eta_opt,
                    "boundary": opt.boundary, "p_opt_analytic_w": analytic_optimum_power(cal.response)})


# --- pulse-sim ---

def _sequence(spec):
    if spec in TEMPLATES:
        return parse_sequence(TEMPLATES[spec]), spec
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"sequence {spec!r} is neither a template ({sorted(TEMPLATES)}) nor a file")
    return parse_sequence(path.read_text()), path.name


def _sweep(text):
    try:
        start, stop, n = text.split(":")
        values = np.linspace(float(start), float(stop), int(n))
    except ValueError:
        raise ConfigError(f"--sweep expects start:stop:count in ns, got {text!r}") from None
    if values.size < 2 or np.any(values < 0):
        raise ConfigError("--sweep needs at least two nonnegative durations")
    return values


def cmd_pulse_sim(args, cfg):
    out = _out_dir(args, cfg)
    seq, name = _sequence(args.sequence)
    ref = None
    if args.reference:
        ref, _ = _sequence(args.reference)
    elif args.sequence in REFERENCE_TEMPLATES:
        ref = parse_sequence(REFERENCE_TEMPLATES[args.sequence])
    sweep = _sweep(args.sweep)
    sys_ = cfg.levels.system(args.laser_power)
    contrast = run_sequence(seq, sys_, cfg.bloch, sweep, seed=_seed(args, cfg),
                            n_members=args.members, reference=ref)
    csv_path = io.write_csv(out / "pulse.csv", ["sweep_ns", "contrast"], [sweep, contrast])
    plot = svg.line_plot(out / "pulse.svg", [(name, sweep, contrast, "line")],
                         "swept duration (ns)", "contrast", f"pulse sequence: {name}")
    return _finish(args, cfg, out, [csv_path, plot],
                   {"sequence": name, "phase_cycled": ref is not None, "points": int(sweep.size)})


# --- ion-range ---

def cmd_ion_range(args, cfg):
    out = _out_dir(args, cfg)
    beam = IonBeamSpec(args.energy, args.ions, _seed(args, cfg))
    hist = simulate_ions(beam, cfg.target, bin_width_nm=args.bin_width,
                         workers=max(1, args.threads))
    rest = implanted_histogram(hist)
    h_csv = io.write_csv(out / "histogram.csv", ["depth_nm", "vacancies"], [hist.centers_nm, hist.counts])
    i_csv = io.write_csv(out / "implanted.csv", ["depth_nm", "ions"], [rest.centers_nm, rest.counts])
    plot = svg.line_plot(out / "histogram.svg",
                         [("vacancies / max", hist.centers_nm, hist.counts / max(hist.counts.max(), 1), "line"),
                          ("stopped ions / max", rest.centers_nm, rest.counts / max(rest.counts.max(), 1), "line")],
                         "depth (nm)", "normalized counts", f"He+ at {args.energy:g} eV")
    ledger = hist.ledger
    closure = float(np.max(np.abs(ledger[:, :3].sum(axis=1) - beam.energy_ev)) / beam.energy_ev)
    return _finish(args, cfg, out, [h_csv, i_csv, plot],
                   {"most_probable_vacancy_depth_nm": most_probable_depth(hist),
                    "most_probable_ion_depth_nm": most_probable_depth(rest),
                    "mean_vacancy_depth_nm": hist.mean_depth_nm(),
                    "energy_closure_rel": closure})


# --- plasmon ---

def cmd_plasmon(args, cfg):
    out = _out_dir(args, cfg)
    model = cfg.enhancement
    if args.q0 is not None:
        from dataclasses import replace
        model = replace(model, q0=args.q0)
    t = np.linspace(args.tmin, args.tmax, args.points)
    curve = enhancement_vs_thickness(cfg.stack, args.depth, t, args.orientation, model,
                                     workers=max(1, args.threads))
    csv_path = io.write_csv(out / "enhancement.csv", ["thickness_nm", "enhancement"],
                            [curve[:, 0], curve[:, 1]])
    plot = svg.line_plot(out / "enhancement.svg", [(args.orientation, curve[:, 0], curve[:, 1], "line")],
                         "hBN thickness (nm)", "PL enhancement", "gold-film enhancement")
    k = int(np.argmax(curve[:, 1]))
    return _finish(args, cfg, out, [csv_path, plot],
                   {"peak_thickness_nm": float(curve[k, 0]), "peak_enhancement": float(curve[k, 1]),
                    "q0": model.q0})


def build_parser():
    p = argparse.ArgumentParser(prog="vbsense", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="TOML configuration file")
    p.add_argument("--seed", type=int, help="RNG seed (overrides the config)")
    p.add_argument("--out-dir", help="output directory (overrides the config)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for parallel sweeps")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate-odmr", help="synthesize a CW ODMR spectrum with shot noise")
    s.add_argument("--field-mt", type=float, default=0.0, help="axial field (mT)")
    s.add_argument("--mw-power", type=float, default=0.1, help="microwave power (W)")
    s.add_argument("--laser-power", type=float, default=5.0, help="laser power (mW)")
    s.set_defaults(func=cmd_simulate_odmr)

    s = sub.add_parser("fit", help="fit a measured trace (CSV with unit headers)")
    s.add_argument("trace")
    s.add_argument("--model", help="model id, e.g. multi_lorentzian(2), saturation, exp_decay")
    s.add_argument("--kind", choices=io.KINDS, help="trace kind (inferred from the x unit)")
    s.add_argument("--p0", help="comma-separated starting parameters")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("sensitivity", help="sensitivity versus microwave power")
    s.add_argument("--laser-power", type=float, default=5.0, help="laser power (mW)")
    s.add_argument("--pmin", type=float, default=1e-3, help="lowest microwave power (W)")
    s.add_argument("--pmax", type=float, default=10.0, help="highest microwave power (W)")
    s.add_argument("--points", type=int, default=121)
    s.set_defaults(func=cmd_sensitivity)

    s = sub.add_parser("pulse-sim", help="simulate a pulse sequence sweep")
    s.add_argument("--sequence", default="rabi",
                   help=f"template ({', '.join(sorted(TEMPLATES))}) or sequence file")
    s.add_argument("--reference", help="phase-cycling partner sequence (file or template)")
    s.add_argument("--sweep", default="0:500:51", help="start:stop:count of the swept duration (ns)")
    s.add_argument("--laser-power", type=float, default=5.0, help="laser power (mW)")
    s.add_argument("--members", type=int, default=256, help="detuning ensemble size")
    s.set_defaults(func=cmd_pulse_sim)

    s = sub.add_parser("ion-range", help="He+ implantation depth profile in hBN")
    s.add_argument("--energy", type=float, default=600.0, help="ion energy (eV)")
    s.add_argument("--ions", type=int, default=10_000)
    s.add_argument("--bin-width", type=float, default=0.5, help="histogram bin width (nm)")
    s.set_defaults(func=cmd_ion_range)

    s = sub.add_parser("plasmon", help="PL enhancement versus hBN thickness on gold")
    s.add_argument("--tmin", type=float, default=8.0, help="smallest thickness (nm)")
    s.add_argument("--tmax", type=float, default=200.0, help="largest thickness (nm)")
    s.add_argument("--points", type=int, default=97)
    s.add_argument("--depth", type=float, default=6.4, help="emitter depth below the top surface (nm)")
    s.add_argument("--orientation", choices=ORIENTATIONS, default="isotropic")
    s.add_argument("--q0", type=float, help="intrinsic quantum efficiency (overrides the config)")
    s.set_defaults(func=cmd_plasmon)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TraceFormatError, SequenceSyntaxError, EnergyOutOfRange) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (QuadratureNotConverged, NoPolarization) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (VBSenseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
