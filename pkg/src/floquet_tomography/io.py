"""File formats: matrices, Hamiltonians, trace sequences, configs, CSV tables."""
from __future__ import annotations

import csv
import json
import math
import sys
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .monodromy import PeriodicHamiltonian
from .traces import TraceSequence

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib


def matrix_to_json(m) -> dict:
    a = np.asarray(getattr(m, "matrix", m), dtype=complex)
    return {"n": int(a.shape[0]), "re": a.real.tolist(), "im": a.imag.tolist()}


def matrix_from_json(obj) -> np.ndarray:
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
        n = int(obj.get("n", re.shape[0]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed matrix object: {exc}") from exc
    if re.shape != (n, n) or im.shape != (n, n):
        raise ConfigError(f"matrix object declares n={n} but has shape {re.shape}")
    return re + 1j * im


def read_matrix(path) -> np.ndarray:
    return matrix_from_json(json.loads(Path(path).read_text()))


def write_matrix(path, m):
    Path(path).write_text(json.dumps(matrix_to_json(m)))


def hamiltonian_from_json(obj) -> PeriodicHamiltonian:
    try:
        segs = [(matrix_from_json(s["matrix"]), float(s["duration"])) for s in obj["segments"]]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed Hamiltonian file: {exc}") from exc
    return PeriodicHamiltonian.piecewise(segs, obj.get("period"))


def hamiltonian_to_json(h: PeriodicHamiltonian) -> dict:
    if not h.is_piecewise:
        raise ValueError("only piecewise Hamiltonians have a file form")
    return {"period": h.period,
            "segments": [{"duration": d, "matrix": matrix_to_json(g)} for g, d in h.segments]}


def read_hamiltonian(path) -> PeriodicHamiltonian:
    return hamiltonian_from_json(json.loads(Path(path).read_text()))


# trace sequences: CSV n,re,im plus a .json sidecar


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_trace_sequence(path, seq: TraceSequence, stamp: bool = True):
    path = Path(path)
    rows = [{"n": n, "re": v.real, "im": v.imag} for n, v in enumerate(seq.values)]
    write_csv(path, ["n", "re", "im"], rows, stamp=stamp)
    meta = {"kind": seq.kind, "observable_label": seq.observable_label,
            "boundary_label": seq.boundary_label, "time_offset": seq.time_offset,
            "dim_hint": seq.dim_hint, "length": len(seq)}
    sidecar_path(path).write_text(json.dumps(meta, indent=2))


def read_trace_sequence(path) -> TraceSequence:
    path = Path(path)
    rows = read_csv(path)
    try:
        rows.sort(key=lambda r: int(r["n"]))
        vals = np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed trace CSV ({exc})") from exc
    ns = [int(r["n"]) for r in rows]
    if ns != list(range(len(ns))):
        raise ConfigError(f"{path}: rows must cover n = 0..{len(ns) - 1} exactly once")
    meta = {}
    if sidecar_path(path).exists():
        meta = json.loads(sidecar_path(path).read_text())
    return TraceSequence(vals, meta.get("kind", "Ordinary"), meta.get("observable_label", "O"),
                         meta.get("boundary_label"), float(meta.get("time_offset", 0.0)),
                         meta.get("dim_hint"))


# tables


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, columns, rows, stamp: bool = True):
    """CSV with an optional '# generated' line followed by the header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        if stamp:
            fh.write(f"# generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def read_csv(path) -> list:
    with Path(path).open(newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def csv_body(path) -> str:
    """File contents without the timestamp line, for determinism checks."""
    return "".join(ln for ln in Path(path).read_text().splitlines(True) if not ln.startswith("#"))


# configs and reports


def load_config(path) -> dict:
    try:
        with Path(path).open("rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file {path} not found") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc


def jsonable(x):
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": jsonable(x.real), "im": jsonable(x.imag)}
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        # JSON has no inf/nan
        return x if math.isfinite(x) else str(x)
    return x


def load_schema(name: str) -> dict:
    return json.loads(resources.files("floquet_tomography").joinpath(f"schemas/{name}.json").read_text())


def validate(obj, schema_name: str):
    import jsonschema

    jsonschema.validate(obj, load_schema(schema_name))
