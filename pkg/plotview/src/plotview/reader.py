"""Minimal readers for the frozen photonsource file schemas."""

import json

import numpy as np

SUPPORTED = {
    "arrival": 1,
    "g2": 1,
    "emission_flux": 1,
    "summary": 1,
    "conditionals": 1,
    "pemit_fit": 1,
}


class SchemaMismatch(ValueError):
    """Input file misses or mismatches its expected schema tag."""


def _check(tag: str, name: str, where: str):
    expected = f"{name}/{SUPPORTED[name]}"
    if tag != expected:
        raise SchemaMismatch(f"{where}: schema {tag!r}, supported {expected!r}")


def read_csv(path, name: str) -> dict[str, np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# schema="):
        raise SchemaMismatch(f"{path}: missing schema line")
    _check(lines[0][len("# schema="):], name, str(path))
    if len(lines) < 2:
        raise SchemaMismatch(f"{path}: missing header")
    header = lines[1].split(",")
    cols: list[list[float]] = [[] for _ in header]
    for lineno, line in enumerate(lines[2:], start=3):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != len(header):
            raise SchemaMismatch(
                f"{path}: line {lineno}: {len(parts)} fields, "
                f"expected {len(header)} ({', '.join(header)})")
        for col, v in zip(cols, parts):
            col.append(float(v))
    return {h: np.asarray(c) for h, c in zip(header, cols)}


def read_json(path, name: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "schema" not in doc:
        raise SchemaMismatch(f"{path}: missing schema key")
    _check(doc["schema"], name, str(path))
    return doc
