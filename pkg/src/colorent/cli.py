"""Command-line front end: simulate, fit, sweep, mub.

Units in every file and flag: angles in degrees, frequencies in THz,
delays in ps, wavelengths in nm.

Exit codes: 0 success, 2 validation error, 3 fit non-convergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

from . import __version__, estimate, interference, qstate, scenario

EXIT_OK, EXIT_VALIDATION, EXIT_FIT, EXIT_IO = 0, 2, 3, 4


class CLIError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def write_atomic(path, text: str) -> None:
    """Write to a temp file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load_config(args) -> dict:
    if args.config and args.preset:
        raise CLIError(EXIT_VALIDATION, "use either --config or --preset, not both")
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise CLIError(EXIT_IO, f"cannot read config: {exc}") from None
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise CLIError(EXIT_VALIDATION, f"config is not valid JSON: {exc}") from None
    return scenario.preset(args.preset or args.default_preset)


def _run_simulation(doc, seed, out_dir: Path, stem="") -> scenario.Simulation:
    sc = scenario.load_scenario(doc, seed=seed)
    sim = scenario.simulate(sc)
    write_atomic(out_dir / f"{stem}trace.csv", sim.trace.to_csv())
    write_atomic(out_dir / f"{stem}spectrum.csv", sim.spectrum.to_csv())
    write_atomic(out_dir / f"{stem}truth.json", dump_json(sim.truth()))
    return sim


def cmd_simulate(args) -> int:
    doc = _load_config(args)
    sim = _run_simulation(doc, args.seed, Path(args.out))
    s = sim.scenario.restricted_state
    print(f"simulated {sim.scenario.name}: p={s.p:.4f} V={s.V:.4f} "
          f"phi={math.degrees(s.phi):.2f} deg detuning={s.detuning_thz:.4f} THz -> {args.out}")
    return EXIT_OK


def _analysis_doc(an: scenario.Analysis, extra: dict) -> dict:
    doc = {
        "tool": "colorent",
        "version": __version__,
        "fit": estimate.fit_to_json(an.fit),
        "reconstruction": estimate.report_to_json(an.report, an.balance),
    }
    doc.update(extra)
    return doc


def _summary_line(an: scenario.Analysis) -> str:
    r = an.report
    e = r.errors

    def fmt(name, value):
        return f"{name}={value:.4f}" + (f"+-{e[name]:.4f}" if name in e else "")

    flag = " (balance assumed p=0.5)" if an.balance.assumed else ""
    return " ".join([fmt("fidelity", r.fidelity), fmt("tangle", r.tangle), fmt("purity", r.purity)]) + flag


def cmd_fit(args) -> int:
    try:
        trace = interference.BeatingTrace.load(args.trace)
    except OSError as exc:
        raise CLIError(EXIT_IO, f"cannot read trace: {exc}") from None
    except ValueError as exc:
        raise CLIError(EXIT_VALIDATION, f"{args.trace}: {exc}") from None
    counts = tuple(args.counts) if args.counts else None
    target = math.radians(args.target_phase)
    out = Path(args.out)
    extra = {
        "inputs": {"trace": Path(args.trace).name, "trace_sha256": _sha256(args.trace)},
        "seed": args.seed,
        "resamples": args.resamples,
        "hold_tau0_ps": args.tau0,
    }
    try:
        an = scenario.analyze(trace, counts, target, args.resamples, args.seed, hold_tau0_ps=args.tau0)
    except (estimate.FitError, estimate.BootstrapError) as exc:
        diag = {"error": str(exc), **extra}
        best = getattr(exc, "best", None)
        if best is not None:
            diag["best_candidate"] = estimate.fit_to_json(best)
        if getattr(exc, "diagnostics", None):
            diag["diagnostics"] = exc.diagnostics
        write_atomic(out.with_name(out.name + ".diagnostics.json"), dump_json(diag))
        raise CLIError(EXIT_FIT, f"fit failed: {exc}") from None
    write_atomic(out, dump_json(_analysis_doc(an, extra)))
    print(_summary_line(an))
    return EXIT_OK


SUMMARY_COLUMNS = (
    "point", "temperature_c", "set_phi_deg", "true_detuning_thz", "V", "V_err", "phi_deg", "phi_deg_err",
    "detuning_thz", "detuning_thz_err", "tau_c_ps", "p", "fidelity", "fidelity_err",
    "tangle", "tangle_err", "purity", "purity_err", "peak_separation_nm", "expected_separation_nm",
)


def _sweep_points(doc, kind):
    sweep = doc.get("sweep", {})
    if kind == "detuning":
        temps = sweep.get("temperatures_c", scenario.DETUNING_SWEEP_C)
        for i, t in enumerate(temps):
            d = json.loads(json.dumps(doc))
            d["source"].pop("wavelengths_nm", None)
            d["source"]["temperature_c"] = t
            yield i, d
    else:
        phases = sweep.get("phases_deg", scenario.PHASE_SWEEP_DEG)
        for i, ph in enumerate(phases):
            d = json.loads(json.dumps(doc))
            d["source"]["phi_deg"] = ph
            d.setdefault("analysis", {})["target_phi_deg"] = None
            yield i, d


def cmd_sweep(args) -> int:
    args.default_preset = "fig3a" if args.kind == "detuning" else "fig4"
    doc = _load_config(args)
    out_dir = Path(args.out)
    base_seed = args.seed if args.seed is not None else doc.get("measurement", {}).get("seed", 0)
    rows = []
    for i, point_doc in _sweep_points(doc, args.kind):
        seed = int(base_seed) + i
        sim = _run_simulation(point_doc, seed, out_dir, stem=f"point{i:02d}_")
        sc = sim.scenario
        counts = sim.basis_counts if sc.basis_counts_total > 0 else None
        try:
            an = scenario.analyze(sim.trace, counts, sc.target_phi, args.resamples, seed,
                                  hold_tau0_ps=sc.hold_tau0_ps)
        except (estimate.FitError, estimate.BootstrapError) as exc:
            raise CLIError(EXIT_FIT, f"sweep point {i}: {exc}") from None
        write_atomic(out_dir / f"point{i:02d}_report.json",
                     dump_json(_analysis_doc(an, {"seed": seed, "config_sha256": scenario.config_hash(point_doc)})))
        fit, rep = an.fit, an.report
        peaks = sim.spectrum.peak_wavelengths(split_nm=0.5 * (sc.pol_state.lambda1_nm + sc.pol_state.lambda2_nm))
        rows.append({
            "point": i,
            "temperature_c": sc.temperature_c if sc.temperature_c is not None else "",
            "set_phi_deg": math.degrees(sc.pol_state.phi),
            "true_detuning_thz": sc.detuning_thz,
            "V": fit.params.V, "V_err": fit.param_errors["V"],
            "phi_deg": math.degrees(fit.params.phi), "phi_deg_err": math.degrees(fit.param_errors["phi"]),
            "detuning_thz": fit.params.detuning_thz, "detuning_thz_err": fit.param_errors["detuning_thz"],
            "tau_c_ps": fit.params.tau_c_ps,
            "p": an.balance.p,
            "fidelity": rep.fidelity, "fidelity_err": rep.errors.get("fidelity", ""),
            "tangle": rep.tangle, "tangle_err": rep.errors.get("tangle", ""),
            "purity": rep.purity, "purity_err": rep.errors.get("purity", ""),
            "peak_separation_nm": abs(peaks[0] - peaks[1]),
            "expected_separation_nm": abs(sc.pol_state.lambda1_nm - sc.pol_state.lambda2_nm),
        })
        print(f"point {i}: detuning={fit.params.detuning_thz:.4f} THz phi={math.degrees(fit.params.phi):.2f} deg "
              f"fidelity={rep.fidelity:.4f} tangle={rep.tangle:.4f}")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})
    write_atomic(out_dir / "summary.csv", buf.getvalue())
    return EXIT_OK


def cmd_mub(args) -> int:
    bases = estimate.mub_set()
    table = qstate.mub_overlap_check(bases)
    labels = ["phi0", "phi180", "phi90", "phi270", "w1w2", "w2w1"]
    buf = io.StringIO()
    buf.write("state," + ",".join(labels) + "\n")
    for label, row in zip(labels, table):
        buf.write(label + "," + ",".join(f"{v:.6f}" for v in row) + "\n")
    write_atomic(Path(args.out), buf.getvalue())
    print(f"wrote {len(labels)}x{len(labels)} overlap table to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="colorent",
        description="Simulate and analyze discretely color-entangled photon pairs. "
                    "Angles in degrees, frequencies in THz, delays in ps, wavelengths in nm.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--print-preset", metavar="NAME", help="print a shipped preset config and exit")
    sub = parser.add_subparsers(dest="command")

    def common(p, out_help):
        p.add_argument("--config", metavar="PATH", help="scenario config JSON")
        p.add_argument("--preset", metavar="NAME", help=f"shipped preset: {', '.join(sorted(scenario.PRESETS))}")
        p.add_argument("--out", metavar="PATH", required=True, help=out_help)
        p.add_argument("--seed", type=int, default=None, help="override the config seed")

    sim = sub.add_parser("simulate", help="write trace.csv, spectrum.csv and truth.json")
    common(sim, "output directory")
    sim.set_defaults(func=cmd_simulate, default_preset="fig2")

    fit = sub.add_parser("fit", help="fit a trace CSV and write a JSON report")
    fit.add_argument("trace", metavar="TRACE_CSV")
    fit.add_argument("--out", metavar="PATH", required=True, help="report JSON path")
    fit.add_argument("--counts", nargs=2, type=float, metavar=("N12", "N21"),
                     help="computational-basis coincidences for |w1w2> and |w2w1>")
    fit.add_argument("--target-phase", type=float, default=180.0, metavar="DEG",
                     help="phase of the target state (default 180)")
    fit.add_argument("--tau0", type=float, default=None, metavar="PS",
                     help="hold the envelope centre at this calibrated delay")
    fit.add_argument("--seed", type=int, default=0, help="bootstrap seed")
    fit.add_argument("--resamples", type=int, default=500, help="bootstrap resamples; 0 disables")
    fit.set_defaults(func=cmd_fit)

    sweep = sub.add_parser("sweep", help="detuning or phase series with a summary CSV")
    sweep.add_argument("kind", choices=["detuning", "phase"])
    common(sweep, "output directory")
    sweep.add_argument("--resamples", type=int, default=500, help="bootstrap resamples per point; 0 disables")
    sweep.set_defaults(func=cmd_sweep)

    mub = sub.add_parser("mub", help="write the overlap table of the three mutually unbiased bases")
    mub.add_argument("--out", metavar="PATH", required=True)
    mub.set_defaults(func=cmd_mub)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.print_preset:
            sys.stdout.write(dump_json(scenario.preset(args.print_preset)))
            return EXIT_OK
        if args.command is None:
            parser.print_help()
            return EXIT_VALIDATION
        if getattr(args, "resamples", 0) and 0 < args.resamples < 100:
            raise CLIError(EXIT_VALIDATION, "--resamples must be 0 or at least 100")
        return args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except scenario.ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
