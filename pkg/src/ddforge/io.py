"""
File formats: JSON descriptors for sequences, spectra and processes, CSV for
sampled filters, maps, scans, spectrum estimates and measurement records.
"""
from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path
from typing import List, Union

import numpy as np

from .evolution import FidelityMap, ProcessPrediction
from .filters import FilterKind, FilterSamples
from .inversion import MeasurementRecord, SpectrumEstimate
from .sequence import Pulse, PulseSequence, build_cpmg, free_evolution
from .spectra import DC, Line, Lorentzian, SpectralDensity, SpectrumKind, White
from .tomography import ProcessMatrix

PathLike = Union[str, os.PathLike]

# ---------------------------------------------------------------------------
# sequences


def sequence_from_dict(d: dict) -> PulseSequence:
    """Build a sequence from ``{"kind": "cpmg" | "free" | "custom", ...}``."""
    kind = d.get("kind", "cpmg")
    if kind == "cpmg":
        return build_cpmg(int(d["n"]), float(d["rate_hz"]), int(d["pulses"]),
                          float(d.get("pulse_duration_s", 0.0)))
    if kind == "free":
        return free_evolution(float(d["duration_s"]))
    if kind == "custom":
        times = [float(t) for t in d["times_s"]]
        signs = d.get("signs", [1] * len(times))
        width = float(d.get("pulse_duration_s", 0.0))
        pulses = tuple(Pulse(t, width, int(s)) for t, s in zip(times, signs))
        return PulseSequence(pulses, float(d["duration_s"]), d.get("label", "custom"))
    raise ValueError(f"unknown sequence kind {kind!r}")


def sequence_to_dict(seq: PulseSequence) -> dict:
    widths = set(seq.durations.tolist())
    if seq.is_cpmg and len(widths) <= 1:
        return {"kind": "cpmg", "n": seq.cycle_n, "rate_hz": seq.rate_hz,
                "pulses": len(seq), "pulse_duration_s": widths.pop() if widths else 0.0}
    if not len(seq):
        return {"kind": "free", "duration_s": seq.total_duration}
    if len(widths) > 1:
        raise ValueError("custom descriptors need a common pulse duration")
    return {"kind": "custom", "duration_s": seq.total_duration,
            "times_s": seq.centers.tolist(), "signs": [int(s) for s in seq.signs],
            "pulse_duration_s": widths.pop(), "label": seq.label}


# ---------------------------------------------------------------------------
# spectra


def spectrum_from_dict(d: dict) -> SpectralDensity:
    comps = []
    for c in d.get("components", []):
        t = c["type"]
        if t == "lorentzian":
            comps.append(Lorentzian(float(c["variance"]), float(c["correlation_time_s"])))
        elif t == "line":
            comps.append(Line(float(c["freq_hz"]), float(c["power"])))
        elif t == "white":
            comps.append(White(float(c["level"]), float(c["fmax_hz"])))
        elif t == "dc":
            comps.append(DC(float(c["power"])))
        else:
            raise ValueError(f"unknown spectral component type {t!r}")
    return SpectralDensity(tuple(comps), SpectrumKind(d.get("kind", "control")))


def spectrum_to_dict(spec: SpectralDensity) -> dict:
    comps = []
    for c in spec.components:
        if isinstance(c, Lorentzian):
            comps.append({"type": "lorentzian", "variance": c.variance,
                          "correlation_time_s": c.correlation_time})
        elif isinstance(c, Line):
            comps.append({"type": "line", "freq_hz": c.frequency, "power": c.power})
        elif isinstance(c, White):
            comps.append({"type": "white", "level": c.level, "fmax_hz": c.fmax})
        elif isinstance(c, DC):
            comps.append({"type": "dc", "power": c.power})
    return {"kind": spec.kind.value, "components": comps}


def load_spectrum(path: PathLike) -> SpectralDensity:
    with open(path) as fh:
        return spectrum_from_dict(json.load(fh))


def save_spectrum(spec: SpectralDensity, path: PathLike):
    Path(path).write_text(json.dumps(spectrum_to_dict(spec), indent=2))


# ---------------------------------------------------------------------------
# CSV writers / readers


def filter_csv(samples: FilterSamples) -> str:
    buf = io.StringIO()
    buf.write(f"# kind={samples.kind.value} sequence={samples.sequence_label}\n")
    buf.write("f_hz,value\n")
    for f, v in zip(samples.frequencies, samples.values):
        buf.write(f"{float(f)!r},{float(v)!r}\n")
    return buf.getvalue()


def read_filter_csv(text: str) -> FilterSamples:
    lines = text.splitlines()
    meta = {}
    if lines and lines[0].startswith("#"):
        for tok in lines[0][1:].strip().split(" ", 1):
            k, _, v = tok.partition("=")
            meta[k] = v
    rows = [l for l in lines if l and not l.startswith("#")][1:]
    data = np.array([[float(x) for x in r.split(",")] for r in rows]).reshape(-1, 2)
    return FilterSamples(FilterKind(meta.get("kind", "dephasing")), data[:, 0], data[:, 1],
                         meta.get("sequence", ""))


def map_csv(fmap: FidelityMap) -> str:
    """First row: rates; first column: n; cells: log10 rate, '*' if clamped."""
    buf = io.StringIO()
    buf.write("n\\rate_hz," + ",".join(f"{r:g}" for r in fmap.rate_values) + "\n")
    for i, n in enumerate(fmap.n_values):
        cells = [f"{v:.6f}" + ("*" if flag else "")
                 for v, flag in zip(fmap.log10_decay_rate[i], fmap.flagged[i])]
        buf.write(f"{n}," + ",".join(cells) + "\n")
    return buf.getvalue()


def read_map_csv(text: str):
    """Returns (n_values, rate_values, log10 rates, flagged)."""
    rows = list(csv.reader(io.StringIO(text)))
    rates = np.array([float(x) for x in rows[0][1:]])
    ns = np.array([int(r[0]) for r in rows[1:]])
    vals = np.array([[float(c.rstrip("*")) for c in r[1:]] for r in rows[1:]])
    flags = np.array([[c.endswith("*") for c in r[1:]] for r in rows[1:]])
    return ns, rates, vals, flags


def scan_csv(rates, values) -> str:
    buf = io.StringIO()
    buf.write("rate_hz,rho_y_variance\n")
    for r, v in zip(rates, values):
        buf.write(f"{float(r)!r},{float(v)!r}\n")
    return buf.getvalue()


def estimate_csv(est: SpectrumEstimate) -> str:
    buf = io.StringIO()
    if np.any(est.undetermined):
        und = " ".join(f"{f:g}" for f in est.frequencies[est.undetermined])
        buf.write(f"# undetermined_hz={und}\n")
    buf.write("f_hz,density\n")
    for f, g in zip(est.frequencies, est.densities):
        buf.write(f"{float(f)!r},{float(g)!r}\n")
    return buf.getvalue()


def sphere_csv(inputs, outputs) -> str:
    buf = io.StringIO()
    buf.write("ux,uy,uz,vx,vy,vz\n")
    for u, v in zip(inputs, outputs):
        buf.write(",".join(repr(float(x)) for x in (*u, *v)) + "\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# processes


def prediction_to_dict(pred: ProcessPrediction) -> dict:
    lx, ly, lz = (float(v) for v in pred.contraction)
    return {"lambda_x": lx, "lambda_y": ly, "lambda_z": lz,
            "fidelity_worst": float(pred.fidelity_worst),
            "decay_rate_worst": float(pred.decay_rate_worst),
            "duration_s": float(pred.duration),
            "beyond_first_order": bool(pred.beyond_first_order)}


def process_to_dict(proc: ProcessMatrix) -> dict:
    return {"linear": proc.linear.tolist(), "offset": proc.offset.tolist()}


def process_from_dict(d: dict) -> ProcessMatrix:
    return ProcessMatrix(np.array(d["linear"]), np.array(d.get("offset", [0, 0, 0])))


# ---------------------------------------------------------------------------
# measurement records


def read_records(csv_path: PathLike, sequences_path: PathLike) -> List[MeasurementRecord]:
    """Records CSV ``label,kind,value,uncertainty`` with a JSON map of
    sequence descriptors keyed by label."""
    with open(sequences_path) as fh:
        descriptors = json.load(fh)
    out = []
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(l for l in fh if not l.startswith("#")):
            label = row["label"]
            if label not in descriptors:
                raise ValueError(f"no sequence descriptor for record {label!r}")
            out.append(MeasurementRecord(
                sequence_from_dict(descriptors[label]), FilterKind(row["kind"]),
                float(row["value"]), float(row.get("uncertainty") or 0.0), label))
    return out


def write_records(records, csv_path: PathLike, sequences_path: PathLike):
    descriptors = {}
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "kind", "value", "uncertainty"])
        for i, r in enumerate(records):
            label = r.label or f"r{i}"
            descriptors[label] = sequence_to_dict(r.sequence)
            w.writerow([label, r.kind.value, repr(float(r.value)), repr(float(r.uncertainty))])
    Path(sequences_path).write_text(json.dumps(descriptors, indent=2))
