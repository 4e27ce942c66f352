"""Frozen file schemas shared by the CLI, the analysis outputs, and any
external consumer (plotting front ends read these files and nothing else).

Every file declares its schema as ``<name>/<version>``: CSV files in a
leading ``# schema=...`` comment line, JSON files in a top-level
``schema`` key.  Readers reject unknown names or versions.

clicks.csv        detector,t_ns,origin      (t_ns: integer ns on the
                                             detector grid)
arrival.csv       time_us,counts,counts_strong
g2.csv            lag_us,counts,g2,g2_noise_sub
emission_flux.csv time_us,flux_per_s
"""

import json

import numpy as np

from .experiment import ClickRecord, DETECTOR_NAMES

SCHEMAS = {
    "clicks": 1,
    "arrival": 1,
    "g2": 1,
    "emission_flux": 1,
    "metadata": 1,
    "summary": 1,
    "conditionals": 1,
    "pemit_fit": 1,
    "report": 1,
}


class SchemaError(ValueError):
    """Input file violates its declared schema."""


def schema_tag(name: str) -> str:
    return f"{name}/{SCHEMAS[name]}"


def check_schema_tag(tag: str, expected: str, where: str):
    if tag != schema_tag(expected):
        raise SchemaError(
            f"{where}: schema {tag!r} is not the supported "
            f"{schema_tag(expected)!r}")


# ---------------------------------------------------------------------------
# clicks
# ---------------------------------------------------------------------------

def write_clicks(path, clicks: list[ClickRecord]):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# schema={schema_tag('clicks')}\n")
        fh.write("detector,t_ns,origin\n")
        for c in clicks:
            fh.write(f"{DETECTOR_NAMES[c.detector]},{c.t_ns},{c.origin}\n")


def read_clicks(path) -> list[ClickRecord]:
    clicks = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# schema="):
        raise SchemaError(f"{path}: line 1: missing schema declaration")
    check_schema_tag(lines[0][len("# schema="):], "clicks", f"{path}: line 1")
    if len(lines) < 2 or lines[1] != "detector,t_ns,origin":
        raise SchemaError(f"{path}: line 2: bad header")
    for lineno, line in enumerate(lines[2:], start=3):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise SchemaError(f"{path}: line {lineno}: expected 3 fields")
        det, t_ns, origin = parts
        if det not in DETECTOR_NAMES:
            raise SchemaError(f"{path}: line {lineno}: unknown detector {det!r}")
        try:
            t = int(t_ns)
        except ValueError:
            raise SchemaError(
                f"{path}: line {lineno}: t_ns {t_ns!r} is not an integer"
            ) from None
        if t < 0:
            raise SchemaError(f"{path}: line {lineno}: negative timestamp")
        clicks.append(ClickRecord(t, DETECTOR_NAMES.index(det), origin))
    return clicks


# ---------------------------------------------------------------------------
# generic CSV tables
# ---------------------------------------------------------------------------

def write_table(path, schema_name: str, header: list[str],
                columns: list[np.ndarray], formats: list[str]):
    rows = zip(*columns) if columns and len(columns[0]) else []
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# schema={schema_tag(schema_name)}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt % v for fmt, v in zip(formats, row)) + "\n")


def read_table(path, schema_name: str) -> dict[str, np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# schema="):
        raise SchemaError(f"{path}: line 1: missing schema declaration")
    check_schema_tag(lines[0][len("# schema="):], schema_name, f"{path}: line 1")
    if len(lines) < 2:
        raise SchemaError(f"{path}: missing header")
    header = lines[1].split(",")
    data: list[list[float]] = [[] for _ in header]
    for lineno, line in enumerate(lines[2:], start=3):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != len(header):
            raise SchemaError(
                f"{path}: line {lineno}: expected {len(header)} fields")
        for col, val in zip(data, parts):
            try:
                col.append(float(val))
            except ValueError:
                raise SchemaError(
                    f"{path}: line {lineno}: bad number {val!r}") from None
    return {name: np.asarray(col) for name, col in zip(header, data)}


# ---------------------------------------------------------------------------
# JSON documents
# ---------------------------------------------------------------------------

def write_json(path, schema_name: str, payload: dict):
    doc = {"schema": schema_tag(schema_name)}
    doc.update(payload)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path, schema_name: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "schema" not in doc:
        raise SchemaError(f"{path}: missing schema key")
    check_schema_tag(doc["schema"], schema_name, str(path))
    return doc
