"""Command-line frontend.

One binary with four subcommand groups mirroring the library layout:

    toptrap field      simulate | timeavg | frequencies
    toptrap calibrate  synth-spectrum | fit-spectrum | fit-oscillation |
                       suggest | ybias-fit
    toptrap pol        chain | fidelity | projections | compensate |
                       pulse-average
    toptrap bloch      scan-intensity | kappa | infer | alignment-scan |
                       levels

Every command that writes files also writes a ``manifest.json`` recording
the command, inputs, and seed; re-running with the same inputs reproduces
the outputs byte for byte.  Exit codes: 0 success, 2 bad input, 3
numerical failure.  Set ``TOPTRAP_LOG`` (e.g. ``debug``) for verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import bloch, calibrate, fields, io, polarization
from .errors import ConfigParseError, SchemaError, ToptrapError
from .numerics import make_rng

log = logging.getLogger("toptrap")

EXIT_BAD_INPUT = 2
EXIT_NUMERICAL = 3


def _setup_logging():
    level = os.environ.get("TOPTRAP_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(message)s")


def _load_config(args):
    if getattr(args, "config", None):
        return io.load_config(args.config)
    return fields.TrapConfig(), fields.NonIdealities()


def _out_dir(args) -> Path | None:
    out = getattr(args, "out", None)
    if out is None:
        return None
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_table(out: Path, stem: str, header: list[str], rows, fmt: str):
    if fmt == "json":
        payload = [dict(zip(header, [float(v) for v in row])) for row in rows]
        io.write_json(out / f"{stem}.json", {"rows": payload})
    else:
        io.write_csv(out / f"{stem}.csv", header, rows)


def _finish(args, command: str, inputs=()):
    out = _out_dir(args)
    if out is not None:
        io.write_manifest(
            out, command, getattr(args, "config", None), inputs, getattr(args, "seed", None)
        )


def _parse_triple(text: str, name: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigParseError(f"{name} must be three comma-separated numbers")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ConfigParseError(f"{name}: {exc}") from exc


# ----------------------------------------------------------------- field

def cmd_field_simulate(args):
    cfg, ni = _load_config(args)
    out = _out_dir(args)
    r = _parse_triple(args.at, "--at")
    t_end = args.t_end if args.t_end else 2.0 * np.pi / cfg.Omega1
    times = np.linspace(0.0, t_end, args.n_samples)
    rows = fields.field_series(cfg, ni, r, times, dc_quad=args.dc_quad)
    _write_table(out, "field_series", ["t_s", "Bx_G", "By_G", "Bz_G", "Bmag_G"], rows, args.format)
    print(f"wrote {rows.shape[0]} samples over {t_end:.6g} s to {out}")
    _finish(args, "field simulate")


def cmd_field_timeavg(args):
    cfg, ni = _load_config(args)
    out = _out_dir(args)
    r = _parse_triple(args.at, "--at")
    analytic = fields.time_avg_magnitude_analytic(cfg, ni, r)
    numeric = fields.time_avg_magnitude_numeric(cfg, ni, r, dc_quad=args.dc_quad)
    # quadratic coefficients, analytic beside a finite-difference probe of
    # the brute-force average
    cx, cy, cz = fields._eq4_coefficients(cfg)
    h = 1e-3  # cm
    f0 = fields.time_avg_magnitude_numeric(cfg, ni, (0, 0, 0), rel_tol=1e-11)
    rows = []
    for idx, c_an in ((0, cx), (1, cy), (2, cz)):
        rp = [0.0, 0.0, 0.0]
        rp[idx] = h
        rm = [0.0, 0.0, 0.0]
        rm[idx] = -h
        c_num = (
            fields.time_avg_magnitude_numeric(cfg, ni, rp, rel_tol=1e-11)
            - 2.0 * f0
            + fields.time_avg_magnitude_numeric(cfg, ni, rm, rel_tol=1e-11)
        ) / h**2 / 2.0
        rows.append([idx, c_an, c_num])
    _write_table(out, "coefficients", ["axis_index", "analytic_G_per_cm2", "numeric_G_per_cm2"], rows, args.format)
    io.write_json(
        out / "timeavg.json",
        {
            "r_cm": list(r),
            "avg_analytic_G": analytic,
            "avg_numeric_G": numeric,
            "relative_difference": abs(analytic - numeric) / numeric,
        },
    )
    print(f"<|B|> analytic {analytic:.9g} G, numeric {numeric:.9g} G")
    _finish(args, "field timeavg")


def cmd_field_frequencies(args):
    cfg, _ = _load_config(args)
    wx, wy, wz = fields.trap_frequencies(cfg)
    payload = {
        "omega_x_rad_per_s": wx,
        "omega_y_rad_per_s": wy,
        "omega_z_rad_per_s": wz,
        "f_x_Hz": wx / (2 * np.pi),
        "f_y_Hz": wy / (2 * np.pi),
        "f_z_Hz": wz / (2 * np.pi),
    }
    for axis in "xyz":
        print(f"f_{axis} = {payload[f'f_{axis}_Hz']:.4f} Hz")
    out = _out_dir(args)
    if out is not None:
        io.write_json(out / "frequencies.json", payload)
        _finish(args, "field frequencies")


# ------------------------------------------------------------- calibrate

def cmd_cal_synth_spectrum(args):
    cfg, ni = _load_config(args)
    out = _out_dir(args)
    train = calibrate.RfPulseTrain(
        pulse_duration=args.pulse_duration,
        n_pulses=args.n_pulses,
        delay=args.delay,
        period=2.0 * np.pi / cfg.Omega1,
    )
    series = fields.center_field_series(cfg, ni, args.z0, [args.delay], mode="exact")
    b_mag = float(series[0, 1])
    center = fields.zeeman_frequency(b_mag, cfg.constants)
    if args.noise_mg > 0:
        rng = make_rng(args.seed)
        center += rng.normal(0.0, args.noise_mg * 1e-3 * fields.zeeman_slope(cfg.constants))
        b_mag = center / fields.zeeman_slope(cfg.constants)
    grid = center + np.linspace(-args.span, args.span, args.n_points)
    ds = calibrate.synth_strobe_spectrum(b_mag, train, grid, rabi=args.rabi, constants=cfg.constants)
    _write_table(out, "spectrum", ["freq_Hz", "survival"], np.column_stack([ds.frequency, ds.survival]), args.format)
    print(f"spectrum at delay {args.delay:.3e} s, |B| = {b_mag:.6f} G")
    _finish(args, "calibrate synth-spectrum")


def cmd_cal_fit_spectrum(args):
    out = _out_dir(args)
    ds = io.read_spectrum_csv(args.infile)
    center, width, sigma = calibrate.fit_spectrum_peak(ds)
    payload = {"center_Hz": center, "fwhm_Hz": width, "center_sigma_Hz": sigma}
    io.write_json(out / "spectrum_fit.json", payload)
    print(f"center {center:.1f} Hz, FWHM {width:.1f} Hz, sigma {sigma:.2g} Hz")
    _finish(args, "calibrate fit-spectrum", [args.infile])


def cmd_cal_fit_oscillation(args):
    cfg, _ = _load_config(args)
    out = _out_dir(args)
    delays, centers, sigmas = io.read_oscillation_samples(args.infile)
    fit = calibrate.fit_field_oscillation(delays, centers, sigmas, cfg.Omega1, cfg.constants)
    payload = {
        "a0_Hz": fit.a0,
        "a_s1_Hz": fit.a_s1,
        "a_c1_Hz": fit.a_c1,
        "a_s2_Hz": fit.a_s2,
        "a_c2_Hz": fit.a_c2,
        "covariance": fit.covariance.tolist(),
        "rms_variation_mG": fit.rms_variation_mG,
    }
    io.write_json(out / "oscillation_fit.json", payload)
    model = np.column_stack(
        [
            delays,
            fit.a0
            + fit.a_s1 * np.sin(cfg.Omega1 * delays)
            + fit.a_c1 * np.cos(cfg.Omega1 * delays)
            + fit.a_s2 * np.sin(2 * cfg.Omega1 * delays)
            + fit.a_c2 * np.cos(2 * cfg.Omega1 * delays),
        ]
    )
    _write_table(out, "oscillation_model", ["delay_s", "model_Hz"], model, args.format)
    print(f"rms variation {fit.rms_variation_mG:.2f} mG")
    _finish(args, "calibrate fit-oscillation", [args.infile])


def cmd_cal_suggest(args):
    cfg, _ = _load_config(args)
    out = _out_dir(args)
    with open(args.infile) as fh:
        doc = json.load(fh)
    try:
        fit = calibrate.OscillationFit(
            a0=doc["a0_Hz"],
            a_s1=doc["a_s1_Hz"],
            a_c1=doc["a_c1_Hz"],
            a_s2=doc["a_s2_Hz"],
            a_c2=doc["a_c2_Hz"],
            covariance=np.asarray(doc["covariance"]),
            rms_variation_mG=doc["rms_variation_mG"],
        )
    except KeyError as exc:
        raise SchemaError(f"{args.infile}: missing key {exc}") from exc
    settings = calibrate.TrapSettings(B1p=cfg.B1p, z0=args.z0)
    adj = calibrate.compensation_step(fit, cfg, settings)
    io.write_json(
        out / "adjustments.json",
        {"dBEx_G": adj.dBEx, "dBEz_G": adj.dBEz, "dDelta": adj.dDelta, "dB1p_Gpcm": adj.dB1p},
    )
    print(
        f"dBEx {adj.dBEx:+.4f} G, dBEz {adj.dBEz:+.4f} G, "
        f"dDelta {adj.dDelta:+.2e}, dB1p {adj.dB1p:+.4f} G/cm"
    )
    _finish(args, "calibrate suggest", [args.infile])


def cmd_cal_ybias_fit(args):
    out = _out_dir(args)
    ds = io.read_positions_csv(args.infile)
    if args.position_sigma > 0:
        ds.sigma = np.full(ds.BQp.size, args.position_sigma)
    bey, sigma = calibrate.fit_ybias(ds, args.b2p)
    io.write_json(out / "ybias_fit.json", {"BEy_G": bey, "sigma_G": sigma, "B2p_Gpcm": args.b2p})
    print(f"B_Ey = {bey:.4f} +/- {sigma:.4f} G")
    _finish(args, "calibrate ybias-fit", [args.infile])


# ------------------------------------------------------------------- pol

def _read_chain(path) -> list[polarization.RetarderElement]:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read chain {path}: {exc}") from exc
    if not isinstance(doc, list):
        raise SchemaError("chain document must be a JSON list")
    chain = []
    for i, el in enumerate(doc):
        try:
            chain.append(
                polarization.RetarderElement(
                    alpha=float(el["alpha_rad"]),
                    delta=float(el["delta_rad"]),
                    label=str(el.get("label", f"element{i}")),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"chain element {i}: {exc}") from exc
    return chain


def _stokes_arg(args) -> polarization.StokesVector:
    s = polarization.StokesVector(*_parse_triple(args.stokes, "--stokes"))
    if abs(s.norm - 1.0) > 1e-6:
        s = s.normalized()
    return s


def cmd_pol_chain(args):
    out = _out_dir(args)
    chain = _read_chain(args.infile) if args.infile else []
    s_out = polarization.apply_chain(chain, _stokes_arg(args))
    io.write_json(out / "stokes_out.json", {"S1": s_out.s1, "S2": s_out.s2, "S3": s_out.s3})
    print(f"S_out = ({s_out.s1:.6f}, {s_out.s2:.6f}, {s_out.s3:.6f})")
    _finish(args, "pol chain", [args.infile] if args.infile else [])


def cmd_pol_fidelity(args):
    out = _out_dir(args)
    chain = _read_chain(args.infile) if args.infile else []
    s_in = _stokes_arg(args)
    s_out = polarization.apply_chain(chain, s_in)
    f = polarization.fidelity(s_out, s_in)
    io.write_json(
        out / "fidelity.json",
        {"fidelity": f, "error": 1.0 - f, "S_out": [s_out.s1, s_out.s2, s_out.s3]},
    )
    print(f"fidelity {f:.9f} (error {1.0 - f:.3e})")
    _finish(args, "pol fidelity", [args.infile] if args.infile else [])


def cmd_pol_projections(args):
    out = _out_dir(args)
    s = _stokes_arg(args)
    thetas = np.linspace(0.0, args.theta_max, args.n_points)
    rows = []
    for th in thetas:
        epi, em, ep = polarization.projections(s, polarization.BeamGeometry(th, args.phi))
        rows.append([th, args.phi, epi, em, ep])
    _write_table(out, "projections", ["theta_rad", "phi_rad", "Epi2", "Eminus2", "Eplus2"], rows, args.format)
    print(f"wrote {len(rows)} projection rows")
    _finish(args, "pol projections")


def cmd_pol_compensate(args):
    out = _out_dir(args)
    a1, a2 = polarization.solve_compensation(args.s1_err, args.s2_err)
    s_out = polarization.apply_chain(polarization.preparation_chain(a1, a2), polarization.LINEAR_INPUT)
    res1, res2 = s_out.s1 + args.s1_err, s_out.s2 + args.s2_err
    io.write_json(
        out / "compensation.json",
        {"alpha1_rad": a1, "alpha2_rad": a2, "residual_S1": res1, "residual_S2": res2},
    )
    print(f"alpha1 {a1:+.6f} rad, alpha2 {a2:+.6f} rad, residuals ({res1:.2e}, {res2:.2e})")
    _finish(args, "pol compensate")


def cmd_pol_pulse_average(args):
    out = _out_dir(args)
    f = polarization.pulse_avg_fidelity(args.omega1, args.tau, args.offset)
    f_num = polarization.pulse_avg_projection_numeric(args.omega1, args.tau, args.offset)
    io.write_json(
        out / "pulse_average.json",
        {
            "fidelity": f,
            "error": 1.0 - f,
            "numeric_error_zero_offset": 1.0 - f_num,
            "omega1_rad_per_s": args.omega1,
            "tau_s": args.tau,
            "offset_s": args.offset,
        },
    )
    print(f"pulse-averaged error {1.0 - f:.3e}")
    _finish(args, "pol pulse-average")


# ----------------------------------------------------------------- bloch

def _level_system(args) -> bloch.LevelSystem:
    detuning = args.detuning
    if detuning is None:
        detuning = bloch.stretched_sigma_minus_detuning(args.b_field)
    return bloch.build_level_system(args.b_field, detuning=detuning)


def cmd_bloch_scan_intensity(args):
    out = _out_dir(args)
    sys_ = _level_system(args)
    grid = np.logspace(np.log10(args.i_min), np.log10(args.i_max), args.n_points)
    scan = bloch.loss_vs_intensity(
        sys_, args.impurity_kind, args.impurity, grid, n_pulses=args.n_pulses, duration=args.tau
    )
    _write_table(
        out,
        "intensity_scan",
        ["I_over_Isat", "epsilon", "survival_N"],
        np.column_stack([scan.intensity, scan.epsilon, scan.survival]),
        args.format,
    )
    _write_table(
        out,
        "reference_scan",
        ["I_over_Isat", "epsilon", "survival_N"],
        np.column_stack([scan.intensity, scan.reference_epsilon, scan.reference_survival]),
        args.format,
    )
    i_max = scan.intensity[int(np.argmax(scan.epsilon))]
    print(f"loss maximum near I = {i_max:.1f} I_sat")
    _finish(args, "bloch scan-intensity")


def cmd_bloch_kappa(args):
    out = _out_dir(args)
    sys_ = _level_system(args)
    res = bloch.calibrate_kappa(sys_, args.intensity, duration=args.tau)
    io.write_json(
        out / "kappa.json",
        {
            "kappa_pi": res.kappa_pi,
            "kappa_minus": res.kappa_minus,
            "intensity_over_Isat": args.intensity,
            "b_field_G": args.b_field,
        },
    )
    print(f"kappa_pi {res.kappa_pi:.3f}, kappa_minus {res.kappa_minus:.3f}")
    _finish(args, "bloch kappa")


def cmd_bloch_infer(args):
    out = _out_dir(args)
    impurity = bloch.infer_impurity(args.p, args.n, args.kappa)
    io.write_json(
        out / "inferred.json",
        {"impurity": impurity, "P": args.p, "N": args.n, "kappa": args.kappa},
    )
    print(f"|E|^2 = {impurity:.4e}")
    _finish(args, "bloch infer")


def cmd_bloch_alignment_scan(args):
    out = _out_dir(args)
    offsets = np.linspace(-args.t_max, args.t_max, args.n_points)
    scan = bloch.alignment_scan(
        polarization.SIGMA_PLUS,
        offsets,
        omega_rot=args.omega1,
        residual_impurity=args.residual_impurity,
    )
    _write_table(out, "alignment_scan", ["t_s", "Epi2"], np.column_stack([scan.offsets, scan.epi2]), args.format)
    io.write_json(
        out / "alignment_fit.json",
        {"curvature_coefficient": scan.curvature, "floor": scan.floor},
    )
    print(f"parabola coefficient {scan.curvature:.4f} (ideal 0.5), floor {scan.floor:.2e}")
    _finish(args, "bloch alignment-scan")


def cmd_bloch_levels(args):
    out = _out_dir(args)
    sys_ = _level_system(args)
    io.write_json(out / "level_system.json", bloch.level_system_summary(sys_))
    print(f"wrote level system at B = {args.b_field} G")
    _finish(args, "bloch levels")


# ------------------------------------------------------------------ main

def _add_common(p, out_required=True, config=False, seed=False):
    if config:
        p.add_argument("--config", help="trap configuration JSON")
    p.add_argument("--out", required=out_required, help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    if seed:
        p.add_argument("--seed", type=int, default=0, help="noise seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toptrap", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="group", required=True)

    # field
    g = sub.add_parser("field", help="trap field model").add_subparsers(dest="command", required=True)
    p = g.add_parser("simulate", help="field components over time")
    _add_common(p, config=True)
    p.add_argument("--at", default="0,0,0", help="position x,y,z in cm")
    p.add_argument("--t-end", type=float, default=None, dest="t_end", help="end time (s), default one rotation")
    p.add_argument("--n-samples", type=int, default=256, dest="n_samples")
    p.add_argument("--dc-quad", type=float, default=0.0, dest="dc_quad", help="static quadrupole G/cm")
    p.set_defaults(func=cmd_field_simulate)
    p = g.add_parser("timeavg", help="time-averaged magnitude, analytic vs numeric")
    _add_common(p, config=True)
    p.add_argument("--at", default="0,0,0", help="position x,y,z in cm")
    p.add_argument("--dc-quad", type=float, default=0.0, dest="dc_quad")
    p.set_defaults(func=cmd_field_timeavg)
    p = g.add_parser("frequencies", help="harmonic trap frequencies")
    _add_common(p, out_required=False, config=True)
    p.set_defaults(func=cmd_field_frequencies)

    # calibrate
    g = sub.add_parser("calibrate", help="RF and trap-motion calibration").add_subparsers(dest="command", required=True)
    p = g.add_parser("synth-spectrum", help="synthesize a strobed spectrum")
    _add_common(p, config=True, seed=True)
    p.add_argument("--delay", type=float, default=0.0, help="strobe delay (s)")
    p.add_argument("--z0", type=float, default=0.0, help="vertical offset (cm)")
    p.add_argument("--rabi", type=float, default=0.01, help="per-pulse peak transfer")
    p.add_argument("--span", type=float, default=3e5, help="half-width of the frequency grid (Hz)")
    p.add_argument("--n-points", type=int, default=41, dest="n_points")
    p.add_argument("--pulse-duration", type=float, default=10e-6, dest="pulse_duration")
    p.add_argument("--n-pulses", type=int, default=250, dest="n_pulses")
    p.add_argument("--noise-mg", type=float, default=0.0, dest="noise_mg", help="field-equivalent centre jitter (mG)")
    p.set_defaults(func=cmd_cal_synth_spectrum)
    p = g.add_parser("fit-spectrum", help="Lorentzian dip fit")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True, help="freq_Hz,survival CSV")
    p.set_defaults(func=cmd_cal_fit_spectrum)
    p = g.add_parser("fit-oscillation", help="five-term oscillation fit")
    _add_common(p, config=True)
    p.add_argument("--in", dest="infile", required=True, help="delay_s,center_Hz,sigma_Hz CSV")
    p.set_defaults(func=cmd_cal_fit_oscillation)
    p = g.add_parser("suggest", help="compensation adjustments from a fit")
    _add_common(p, config=True)
    p.add_argument("--in", dest="infile", required=True, help="oscillation_fit.json")
    p.add_argument("--z0", type=float, default=0.0, help="vertical offset (cm)")
    p.set_defaults(func=cmd_cal_suggest)
    p = g.add_parser("ybias-fit", help="B_Ey from trap displacement data")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True, help="BQp_Gpcm,y0_cm CSV")
    p.add_argument("--b2p", type=float, required=True, help="spherical quadrupole gradient (G/cm)")
    p.add_argument("--position-sigma", type=float, default=0.0, dest="position_sigma", help="per-point position sigma (cm)")
    p.set_defaults(func=cmd_cal_ybias_fit)

    # pol
    g = sub.add_parser("pol", help="polarization optics").add_subparsers(dest="command", required=True)
    p = g.add_parser("chain", help="propagate Stokes vector through retarders")
    _add_common(p)
    p.add_argument("--in", dest="infile", default=None, help="chain JSON (list of label/alpha_rad/delta_rad)")
    p.add_argument("--stokes", default="0,0,1", help="input S1,S2,S3")
    p.set_defaults(func=cmd_pol_chain)
    p = g.add_parser("fidelity", help="fidelity of a chain output vs its input")
    _add_common(p)
    p.add_argument("--in", dest="infile", default=None)
    p.add_argument("--stokes", default="0,0,1")
    p.set_defaults(func=cmd_pol_fidelity)
    p = g.add_parser("projections", help="sigma/pi projections vs beam angle")
    _add_common(p)
    p.add_argument("--stokes", default="0,0,1")
    p.add_argument("--theta-max", type=float, default=0.2, dest="theta_max")
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--n-points", type=int, default=41, dest="n_points")
    p.set_defaults(func=cmd_pol_projections)
    p = g.add_parser("compensate", help="wave-plate angles cancelling a disturbance")
    _add_common(p)
    p.add_argument("--s1-err", type=float, required=True, dest="s1_err")
    p.add_argument("--s2-err", type=float, required=True, dest="s2_err")
    p.set_defaults(func=cmd_pol_compensate)
    p = g.add_parser("pulse-average", help="strobed-pulse fidelity")
    _add_common(p)
    p.add_argument("--tau", type=float, required=True, help="pulse duration (s)")
    p.add_argument("--omega1", type=float, default=2 * np.pi * 12.8e3)
    p.add_argument("--offset", type=float, default=0.0, help="pulse-centre offset (s)")
    p.set_defaults(func=cmd_pol_pulse_average)

    # bloch
    g = sub.add_parser("bloch", help="dark-state polarimetry").add_subparsers(dest="command", required=True)

    def add_system_args(p):
        p.add_argument("--b-field", type=float, default=24.0, dest="b_field", help="field magnitude (G)")
        p.add_argument(
            "--detuning",
            type=float,
            default=None,
            help="laser detuning from the pi line (rad/s); default: sigma- resonance",
        )
        p.add_argument("--tau", type=float, default=120e-9, help="pulse duration (s)")

    p = g.add_parser("scan-intensity", help="loss vs intensity")
    _add_common(p)
    add_system_args(p)
    p.add_argument("--impurity-kind", choices=("pi", "sigma_minus"), default="pi", dest="impurity_kind")
    p.add_argument("--impurity", type=float, default=2e-4)
    p.add_argument("--i-min", type=float, default=1.0, dest="i_min")
    p.add_argument("--i-max", type=float, default=1000.0, dest="i_max")
    p.add_argument("--n-points", type=int, default=25, dest="n_points")
    p.add_argument("--n-pulses", type=int, default=1280, dest="n_pulses")
    p.set_defaults(func=cmd_bloch_scan_intensity)
    p = g.add_parser("kappa", help="loss-per-impurity slopes")
    _add_common(p)
    add_system_args(p)
    p.add_argument("--intensity", type=float, default=100.0, help="I/Isat")
    p.set_defaults(func=cmd_bloch_kappa)
    p = g.add_parser("infer", help="impurity from measured survival")
    _add_common(p)
    p.add_argument("--p", type=float, required=True, help="survival probability")
    p.add_argument("--n", type=int, required=True, help="number of pulses")
    p.add_argument("--kappa", type=float, default=9.5)
    p.set_defaults(func=cmd_bloch_infer)
    p = g.add_parser("alignment-scan", help="pi impurity vs pulse timing")
    _add_common(p)
    p.add_argument("--t-max", type=float, default=2e-6, dest="t_max", help="max offset (s)")
    p.add_argument("--n-points", type=int, default=21, dest="n_points")
    p.add_argument("--residual-impurity", type=float, default=5e-5, dest="residual_impurity")
    p.add_argument("--omega1", type=float, default=2 * np.pi * 12.8e3)
    p.set_defaults(func=cmd_bloch_alignment_scan)
    p = g.add_parser("levels", help="dump the 13-state system")
    _add_common(p)
    add_system_args(p)
    p.set_defaults(func=cmd_bloch_levels)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ConfigParseError, SchemaError, ValueError) as exc:
        log.debug("bad input", exc_info=True)
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_BAD_INPUT
    except ToptrapError as exc:
        log.debug("numerical failure", exc_info=True)
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
