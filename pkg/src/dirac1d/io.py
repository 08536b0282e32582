"""JSON run configurations and CSV/JSON exports.

Floats in CSV are written with 17 significant digits, LF line endings and no
locale-dependent formatting so that identical runs produce identical bytes.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConfigError
from .extraction import ExperimentConfig, ExtractionResult
from .fock import FockState
from .observables import CurrentProfile
from .potential_dynamics import PhaseFields, TabulatedPotential
from .spectral_basis import SimulationDomain

_number = {"type": "number"}
_int_list = {"type": "array", "items": {"type": "integer"}}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["state"],
    "properties": {
        "domain": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "L": {"type": "number", "exclusiveMinimum": 0},
                "n_z": {"type": "integer", "minimum": 2},
                "r_max": {"type": "integer", "minimum": 1},
            },
        },
        "state": {
            "type": "object",
            "additionalProperties": False,
            "required": ["terms"],
            "properties": {
                "terms": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["amplitude"],
                        "properties": {
                            "amplitude": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
                            "electrons": _int_list,
                            "positrons": _int_list,
                        },
                    },
                }
            },
        },
        "potential": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["feedback", "tabulated"]},
                "f": {"oneOf": [_number, {"type": "array", "items": _number}]},
                "table": {"type": "string"},
                "t_f": {"type": "number", "exclusiveMinimum": 0},
                "n_t": {"type": "integer", "minimum": 2},
                "ramp": {"type": ["number", "null"], "exclusiveMinimum": 0},
            },
        },
        "q_charge": _number,
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"csv": {"type": "string"}, "json": {"type": "string"}},
        },
    },
}

DEFAULTS = {
    "domain": {"L": 2 * math.pi, "n_z": 256, "r_max": 16},
    "potential": {"kind": "feedback", "f": 1.0, "t_f": 1.0, "n_t": 1024, "ramp": None},
    "q_charge": 1.0,
}


def validate(raw: dict) -> None:
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from None


def state_from_terms(terms: list[dict]) -> FockState:
    triples = [(complex(*t["amplitude"]), t.get("electrons", []), t.get("positrons", [])) for t in terms]
    try:
        return FockState.from_terms(triples)
    except ValueError as exc:
        raise ConfigError(f"bad state: {exc}") from None


def config_from_dict(raw: dict, base_dir: Path | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Validate ``raw`` and build an experiment; ``overrides`` may set f, t_f, n_z, n_t."""
    validate(raw)
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    dom = {**DEFAULTS["domain"], **raw.get("domain", {})}
    pot = {**DEFAULTS["potential"], **raw.get("potential", {})}
    if "n_z" in overrides:
        dom["n_z"] = overrides["n_z"]
    for key in ("f", "t_f", "n_t"):
        if key in overrides:
            pot[key] = overrides[key]
    out = raw.get("output", {})
    try:
        domain = SimulationDomain(dom["L"], dom["n_z"], dom["r_max"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    table = None
    if pot["kind"] == "tabulated":
        if "table" not in pot:
            raise ConfigError("config error at potential: tabulated potential needs a 'table' path")
        path = Path(pot["table"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        table = read_potential_csv(path, domain, pot["t_f"], pot["n_t"])
    f = pot["f"]
    return ExperimentConfig(
        domain=domain,
        state=state_from_terms(raw["state"]["terms"]),
        t_f=float(pot["t_f"]),
        f=[float(x) for x in f] if isinstance(f, list) else float(f),
        n_t=int(pot["n_t"]),
        q_charge=float(raw.get("q_charge", DEFAULTS["q_charge"])),
        kind=pot["kind"],
        table=table,
        ramp=pot["ramp"],
        csv_path=out.get("csv"),
        json_path=out.get("json"),
    )


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return config_from_dict(raw, path.parent, overrides)


def fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def _emit(text: str, path) -> str:
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def current_csv(profile: CurrentProfile, path=None) -> str:
    grad = profile.gradient if profile.gradient is not None else np.full_like(profile.values, np.nan)
    rows = zip(profile.z, profile.values, grad)
    return _emit(_csv_text(["z", "J0", "dJ0_dz"], rows), path)


REPORT_COLUMNS = ["f", "delta_quadrature", "delta_direct", "delta_closed_form",
                  "xi0_initial", "xi0_final", "rel_disagreement"]


def report_csv(results: list[ExtractionResult], path=None, ratio: bool = False) -> str:
    header = REPORT_COLUMNS + (["delta_over_f"] if ratio else [])
    rows = []
    for res in results:
        row = [res.row()[c] for c in REPORT_COLUMNS]
        if ratio:
            row.append(res.delta("quadrature") / res.f if res.f != 0 else None)
        rows.append(row)
    return _emit(_csv_text(header, rows), path)


def _json_float(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def report_json(results: list[ExtractionResult], path=None) -> str:
    doc = {"runs": []}
    for res in results:
        doc["runs"].append({
            "f": _json_float(res.f),
            "estimators": {
                m: {
                    "xi0_initial": _json_float(r.xi0_initial),
                    "xi0_final": _json_float(r.xi0_final),
                    "delta": _json_float(r.delta),
                    "method": r.method,
                }
                for m, r in res.reports.items()
            },
            "rel_disagreement": _json_float(res.rel_disagreement),
            "estimators_agree": bool(res.agreement),
            "current_amplitude_oracle": _json_float(res.amplitude),
            "current_amplitude_half_form": _json_float(res.half_amplitude),
        })
    return _emit(json.dumps(doc, indent=2) + "\n", path)


def read_potential_csv(path, domain: SimulationDomain, t_f: float, n_t: int) -> TabulatedPotential:
    """Read ``z_index, t_index, V`` rows covering every node of the ``(n_t + 1) x n_z`` grid."""
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"z_index", "t_index", "V"} <= set(reader.fieldnames):
                raise ConfigError(f"{path}: expected columns z_index, t_index, V")
            values = np.full((n_t + 1, domain.n_z), np.nan)
            for row in reader:
                j, k = int(row["z_index"]), int(row["t_index"])
                if not (0 <= j < domain.n_z and 0 <= k <= n_t):
                    raise ConfigError(f"{path}: index (z={j}, t={k}) outside the {n_t + 1}x{domain.n_z} grid")
                values[k, j] = float(row["V"])
    except OSError as exc:
        raise ConfigError(f"cannot read potential table {path}: {exc}") from None
    if np.isnan(values).any():
        raise ConfigError(f"{path}: table does not cover every (t_index, z_index) node")
    return TabulatedPotential(t_f, values=values, L=domain.L)


def potential_csv(values: np.ndarray, path=None) -> str:
    rows = ((str(j), str(k), v) for k in range(values.shape[0]) for j, v in enumerate(values[k]))
    return _emit(_csv_text(["z_index", "t_index", "V"], rows), path)


def phases_csv(phases: PhaseFields, path=None) -> str:
    rows = (
        (str(k), str(j), phases.times[k], z, phases.c1[k, j], phases.c2[k, j])
        for k in range(phases.times.size)
        for j, z in enumerate(phases.domain.z)
    )
    return _emit(_csv_text(["t_index", "z_index", "t", "z", "c1", "c2"], rows), path)
