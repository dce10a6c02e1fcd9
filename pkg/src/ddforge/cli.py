"""
Command-line front end.

Every command reads an optional JSON config (``--config``) whose values are
overridden by flags, and writes CSV or JSON to ``--out`` (stdout by
default). Exit codes: 0 success, 2 validation error, 3 I/O error,
4 numerical non-convergence.

Config layout::

    {
      "sequence": {"kind": "cpmg", "n": 4, "rate_hz": 67, "pulses": 40,
                   "pulse_duration_s": 0},
      "env": "env.json",            # path (relative to the config) or inline
      "ctrl": {"kind": "control", "components": [...]},
      "seed": 1,
      "filter":   {"kind": "control", "fmin_hz": 0, "fmax_hz": 200, "points": 2001},
      "map":      {"n_values": [2, 4, 8], "rates_hz": {"start": 20, "stop": 220, "step": 1},
                   "time_s": 1.0,
                   "pulse_duration_s": 0},
      "scan":     {"n": 4, "pulses": 40, "rates_hz": "20:220:0.5"},
      "predict":  {"state": "worst"},
      "simulate": {"state": [0, 0, -1], "dt_s": 2.5e-5, "realizations": 2000,
                   "pulse_duration_s": 5e-4},
      "invert":   {"records": "records.csv", "sequences": "records.json",
                   "grid_hz": [25, 50, 75, 100], "single_peak_hz": null,
                   "max_iter": 10000}
    }

Rate and frequency grids are explicit lists, ``"start:stop:step"`` strings
or ``{"start", "stop", "step"}`` objects; ranges include ``stop``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import io as dio
from .evolution import (BlochState, WORST_STATE, compute_overlaps, fidelity_from_overlaps,
                        fidelity_map, increment, process_from_overlaps,
                        rho_y_variance_scan)
from .filters import FilterKind, filter_grid
from .inversion import invert_linear, invert_single_peak
from .oracle import SimulationConfig, compare_to_perturbative
from .spectra import ConvergenceError, SpectralDensity, SpectrumKind
from .tomography import ProcessMatrix

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_CONVERGENCE = 0, 2, 3, 4
SEED_ENV = "DDFORGE_SEED"


class Context:
    """Merged view of config file and flags."""

    def __init__(self, args):
        self.args = args
        self.base = Path(".")
        self.config = {}
        if args.config:
            path = Path(args.config)
            with open(path) as fh:
                self.config = json.load(fh)
            self.base = path.parent

    def section(self, name):
        return self.config.get(name, {}) or {}

    def pick(self, flag, section, key, default=None):
        v = getattr(self.args, flag, None)
        if v is not None:
            return v
        return self.section(section).get(key, default)

    def path(self, p):
        p = Path(p)
        return p if p.is_absolute() else self.base / p

    def spectrum(self, which, kind):
        src = getattr(self.args, which, None) or self.config.get(which)
        if src is None:
            return SpectralDensity((), kind)
        spec = (dio.load_spectrum(self.path(src)) if isinstance(src, str)
                else dio.spectrum_from_dict(src))
        if spec.kind is not kind:
            raise ValueError(f"{which} spectrum has kind {spec.kind.value}, "
                             f"expected {kind.value}")
        return spec

    def sequence(self):
        desc = dict(self.config.get("sequence") or {"kind": "cpmg"})
        for flag, key in (("n", "n"), ("rate", "rate_hz"), ("pulses", "pulses"),
                          ("pulse_duration", "pulse_duration_s")):
            v = getattr(self.args, flag, None)
            if v is not None:
                desc[key] = v
        if desc.get("kind", "cpmg") == "cpmg":
            missing = [k for k in ("n", "rate_hz", "pulses") if k not in desc]
            if missing:
                raise ValueError(f"sequence descriptor lacks {', '.join(missing)}")
        return dio.sequence_from_dict(desc)

    def seed(self):
        if self.args.seed is not None:
            return int(self.args.seed)
        if "seed" in self.config:
            return int(self.config["seed"])
        return int(os.environ.get(SEED_ENV, 0))


def _grid(spec):
    """Frequency grid from ``"start:stop:step"``, ``"a,b,c"``, a list, or a
    ``{"start", "stop", "step"}`` mapping; ranges include ``stop``."""
    if isinstance(spec, str):
        if ":" in spec:
            parts = [float(x) for x in spec.split(":")]
            if len(parts) != 3:
                raise ValueError(f"range must be start:stop:step, got {spec!r}")
            spec = dict(zip(("start", "stop", "step"), parts))
        else:
            spec = [float(x) for x in spec.split(",") if x.strip()]
    if isinstance(spec, dict):
        start, stop, step = (float(spec[k]) for k in ("start", "stop", "step"))
        if step <= 0 or stop < start:
            raise ValueError(f"bad range start={start} stop={stop} step={step}")
        k = int(np.floor((stop - start) / step + 1e-9))
        return start + step * np.arange(k + 1)
    return np.array([float(x) for x in spec])


def _state(spec):
    if spec is None or spec == "worst":
        return WORST_STATE
    if isinstance(spec, str):
        spec = [float(x) for x in spec.split(",")]
    return BlochState.from_vector(spec).check()


def _emit(args, text):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj):
    return json.dumps(obj, indent=2) + "\n"


# ---------------------------------------------------------------------------
# commands; each returns a zero-argument callable doing the work so that
# --validate-only can stop after all inputs were checked


def cmd_filter(ctx):
    seq = ctx.sequence()
    kind = FilterKind(ctx.pick("kind", "filter", "kind", "dephasing"))
    fmin = float(ctx.pick("fmin", "filter", "fmin_hz", 0.0))
    fmax = float(ctx.pick("fmax", "filter", "fmax_hz", 200.0))
    points = int(ctx.pick("points", "filter", "points", 2001))
    if not fmin < fmax or points < 2:
        raise ValueError("need fmin < fmax and points >= 2")
    return lambda: dio.filter_csv(filter_grid(seq, kind, fmin, fmax, points))


def cmd_map(ctx):
    env = ctx.spectrum("env", SpectrumKind.ENVIRONMENT)
    ctrl = ctx.spectrum("ctrl", SpectrumKind.CONTROL)
    ns = ctx.pick("n_values", "map", "n_values", [2, 4, 6, 8])
    ns = [int(x) for x in (ns.split(",") if isinstance(ns, str) else ns)]
    rates = _grid(ctx.pick("rates", "map", "rates_hz", "20:220:1"))
    time_s = float(ctx.pick("time", "map", "time_s", 1.0))
    width = float(ctx.pick("pulse_duration", "map", "pulse_duration_s", 0.0))
    state = ctx.pick("state", "map", "state", "worst")
    if state != "worst":
        raise ValueError("the map is defined for the worst-case state only")
    if any(n < 0 or n % 2 for n in ns):
        raise ValueError("phase cycles must be even or 0")
    if time_s <= 0 or rates.size == 0 or rates.min() <= 0:
        raise ValueError("need time > 0 and positive rates")
    if width > 0 and width >= 1 / rates.max():
        raise ValueError("pulse duration too long for the highest rate")
    threads = ctx.args.threads
    return lambda: dio.map_csv(fidelity_map(ns, rates, time_s, env, ctrl, width, threads))


def cmd_predict(ctx):
    seq = ctx.sequence()
    env = ctx.spectrum("env", SpectrumKind.ENVIRONMENT)
    ctrl = ctx.spectrum("ctrl", SpectrumKind.CONTROL)
    state = _state(ctx.pick("state", "predict", "state", "worst"))

    def run():
        rep = compute_overlaps(seq, env, ctrl)
        pred = process_from_overlaps(rep)
        return _json({
            "sequence": dio.sequence_to_dict(seq),
            "overlaps": {"env": rep.env, "ctrl": rep.ctrl, "cross": rep.cross_dc},
            "state": state.vector.tolist(),
            "fidelity": fidelity_from_overlaps(state, rep),
            "delta_rho": increment(state, rep).vector.tolist(),
            "prediction": dio.prediction_to_dict(pred),
            "process": dio.process_to_dict(ProcessMatrix(np.diag(pred.contraction))),
        })
    return run


def cmd_simulate(ctx):
    seq = ctx.sequence()
    env = ctx.spectrum("env", SpectrumKind.ENVIRONMENT)
    ctrl = ctx.spectrum("ctrl", SpectrumKind.CONTROL)
    state = _state(ctx.pick("state", "simulate", "state", [0, 0, 1]))
    width = float(ctx.pick("sim_pulse_duration", "simulate", "pulse_duration_s", 1e-3))
    dt = float(ctx.pick("dt", "simulate", "dt_s", width / 20))
    cfg = SimulationConfig(
        dt=dt,
        realizations=int(ctx.pick("realizations", "simulate", "realizations", 2000)),
        seed=ctx.seed(), pulse_duration=width, workers=ctx.args.threads or 1)

    def run():
        report = compare_to_perturbative(seq, env, ctrl, state, cfg)
        out = report.to_dict()
        out["seed"] = cfg.seed
        return _json(out)
    return run


def cmd_invert(ctx):
    sec = ctx.section("invert")
    rec_path = ctx.args.records or sec.get("records")
    seq_path = ctx.args.sequences or sec.get("sequences")
    if not rec_path or not seq_path:
        raise ValueError("records CSV and sequence JSON are required")
    records = dio.read_records(ctx.path(rec_path), ctx.path(seq_path))
    peak = ctx.pick("single_peak", "invert", "single_peak_hz")
    if peak is not None:
        if len(records) != 1:
            raise ValueError("single-peak inversion takes exactly one record")
        min_dom = float(ctx.pick("min_dominance", "invert", "min_dominance", 10.0))
        peak = float(peak)
        density = invert_single_peak(records[0], peak, min_dom)
        return lambda: f"f_hz,density\n{peak!r},{density!r}\n"
    grid = _grid(ctx.pick("grid", "invert", "grid_hz", None) or [])
    if grid.size == 0:
        raise ValueError("a frequency grid is required")
    if len(records) < grid.size:
        raise ValueError(f"underdetermined: {len(records)} records, {grid.size} grid points")
    max_iter = int(ctx.pick("max_iter", "invert", "max_iter", 10_000))
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")

    def run():
        est = invert_linear(records, grid, max_iter=max_iter)
        if not est.converged:
            raise ConvergenceError("projected gradient hit the iteration cap")
        return dio.estimate_csv(est)
    return run


def cmd_scan(ctx):
    ctrl = ctx.spectrum("ctrl", SpectrumKind.CONTROL)
    n = int(ctx.pick("n", "scan", "n", 4))
    pulses = int(ctx.pick("pulses", "scan", "pulses", 40))
    rates = _grid(ctx.pick("rates", "scan", "rates_hz", "20:220:0.5"))
    width = float(ctx.pick("pulse_duration", "scan", "pulse_duration_s", 0.0))
    if n < 0 or n % 2:
        raise ValueError("phase cycle n must be even or 0")
    if pulses < 1 or rates.size == 0 or rates.min() <= 0:
        raise ValueError("need pulses >= 1 and positive rates")
    if width > 0 and width >= 1 / rates.max():
        raise ValueError("pulse duration too long for the highest rate")
    return lambda: dio.scan_csv(rates, rho_y_variance_scan(n, pulses, rates, ctrl, width))


COMMANDS = {
    "filter": cmd_filter,
    "map": cmd_map,
    "predict": cmd_predict,
    "simulate": cmd_simulate,
    "invert": cmd_invert,
    "scan": cmd_scan,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ddforge", description=__doc__.split("\n\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--seed", type=int, help=f"random seed (fallback ${SEED_ENV})")
    common.add_argument("--threads", type=int, help="worker threads for map/simulate")
    common.add_argument("--validate-only", action="store_true",
                        help="check inputs and exit without computing")
    common.add_argument("--env", help="environment spectrum JSON")
    common.add_argument("--ctrl", help="control spectrum JSON")

    seqopts = argparse.ArgumentParser(add_help=False)
    seqopts.add_argument("--n", type=int, help="CPMG phase cycle (0 = plain CPMG)")
    seqopts.add_argument("--rate", type=float, help="pulse rate in Hz")
    seqopts.add_argument("--pulses", type=int, help="number of pulses")
    seqopts.add_argument("--pulse-duration", type=float, help="pulse length in s")

    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("filter", parents=[common, seqopts], help="sampled filter function")
    s.add_argument("--kind", choices=[k.value for k in FilterKind])
    s.add_argument("--fmin", type=float)
    s.add_argument("--fmax", type=float)
    s.add_argument("--points", type=int)

    s = sub.add_parser("map", parents=[common], help="fidelity decay map over (n, f_DD)")
    s.add_argument("--n-values", dest="n_values", help="comma separated phase cycles")
    s.add_argument("--rates", help="start:stop:step or comma list, Hz")
    s.add_argument("--time", type=float, help="total sequence time in s")
    s.add_argument("--state", help="initial state (only 'worst')")
    s.add_argument("--pulse-duration", type=float)

    s = sub.add_parser("predict", parents=[common, seqopts], help="overlaps, fidelity, process")
    s.add_argument("--state", help="'worst' or x,y,z")

    s = sub.add_parser("simulate", parents=[common, seqopts],
                       help="Monte Carlo versus perturbative prediction")
    s.add_argument("--state", help="'worst' or x,y,z")
    s.add_argument("--dt", type=float)
    s.add_argument("--realizations", type=int)
    s.add_argument("--sim-pulse-duration", dest="sim_pulse_duration", type=float,
                   help="width given to ideal pulses in the simulation")

    s = sub.add_parser("invert", parents=[common], help="spectrum from measurements")
    s.add_argument("--records", help="records CSV")
    s.add_argument("--sequences", help="sequence descriptors JSON keyed by label")
    s.add_argument("--grid", help="start:stop:step or comma list, Hz")
    s.add_argument("--single-peak", dest="single_peak", type=float,
                   help="single-peak inversion at this frequency")
    s.add_argument("--min-dominance", dest="min_dominance", type=float)
    s.add_argument("--max-iter", dest="max_iter", type=int,
                   help="iteration cap of the least-squares solver")

    s = sub.add_parser("scan", parents=[common, seqopts], help="<rho_y^2> versus pulse rate")
    s.add_argument("--rates", help="start:stop:step or comma list, Hz")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        ctx = Context(args)
        job = COMMANDS[args.command](ctx)
        if args.validate_only:
            print("inputs valid", file=sys.stderr)
            return EXIT_OK
        _emit(args, job())
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
