"""plotview renders the frozen schemas and nothing else."""

import json
import math
from pathlib import Path

import pytest

from plotview.cli import main
from plotview.reader import SchemaMismatch, read_csv


def _comb_g2(fill_zero_peak=False):
    lines = ["# schema=g2/1", "lag_us,counts,g2,g2_noise_sub"]
    for k in range(-400, 401):
        lag = 0.1 * k
        val = 0.0
        for peak in (-4, -3, -2, -1, 0, 1, 2, 3, 4):
            if peak == 0 and not fill_zero_peak:
                continue
            val += 30 * math.exp(-((lag - 5.0 * peak) / 0.6) ** 2) \
                * math.exp(-((5.0 * peak) / 12.0) ** 2)
        val += 0.4  # flat floor
        lines.append(f"{lag:.6f},{int(val)},{val:.6g},{val - 0.4:.6g}")
    return "\n".join(lines) + "\n"


def _write_fixtures(root: Path, fill_zero_peak=False, empty=False):
    arr = ["# schema=arrival/1", "time_us,counts,counts_strong"]
    flux = ["# schema=emission_flux/1", "time_us,flux_per_s"]
    if not empty:
        for i in range(50):
            t = 0.1 * i
            c = int(200 * math.exp(-((t - 1.5) / 0.6) ** 2))
            arr.append(f"{t:.6f},{c},{max(c - 20, 0)}")
            flux.append(f"{t:.6f},{2e5 * math.exp(-((t - 1.5) / 0.6) ** 2):.6g}")
    (root / "arrival.csv").write_text("\n".join(arr) + "\n")
    (root / "emission_flux.csv").write_text("\n".join(flux) + "\n")
    (root / "g2.csv").write_text(_comb_g2(fill_zero_peak))
    (root / "summary.json").write_text(json.dumps(
        {"schema": "summary/1", "g2_noise_floor": 0.4}))
    (root / "conditionals.json").write_text(json.dumps(
        {"schema": "conditionals/1", "lags_periods": [1, 2, 3, 4, 5, 6],
         "probabilities": [0.088, 0.051, 0.028, 0.014, 0.008, 0.005]}))
    (root / "pemit_fit.json").write_text(json.dumps(
        {"schema": "pemit_fit/1", "amplitude": 0.17, "sigma_z_um": 15.7}))


@pytest.fixture()
def fixtures(tmp_path):
    _write_fixtures(tmp_path)
    return tmp_path


def test_all_kinds_render(fixtures, tmp_path):
    for kind in ("arrival", "correlation", "pemit"):
        out = tmp_path / f"{kind}.png"
        assert main([kind, "--in", str(fixtures), "--out", str(out)]) == 0
        assert out.exists() and out.stat().st_size > 1000


def test_empty_histogram_renders(tmp_path):
    root = tmp_path / "empty"
    root.mkdir()
    _write_fixtures(root, empty=True)
    out = tmp_path / "empty.png"
    assert main(["arrival", "--in", str(root), "--out", str(out)]) == 0
    assert out.exists() and out.stat().st_size > 1000


def test_schema_version_mismatch_names_versions(fixtures, tmp_path, capsys):
    text = (fixtures / "g2.csv").read_text().replace("g2/1", "g2/9")
    (fixtures / "g2.csv").write_text(text)
    rc = main(["correlation", "--in", str(fixtures),
               "--out", str(tmp_path / "x.png")])
    assert rc == 2
    err = capsys.readouterr().err
    assert "g2/9" in err and "g2/1" in err


def test_missing_column_is_reported(fixtures, tmp_path, capsys):
    lines = (fixtures / "arrival.csv").read_text().splitlines()
    broken = [lines[0], lines[1]] + [",".join(l.split(",")[:2])
                                     for l in lines[2:]]
    (fixtures / "arrival.csv").write_text("\n".join(broken) + "\n")
    rc = main(["arrival", "--in", str(fixtures),
               "--out", str(tmp_path / "x.png")])
    assert rc == 2
    assert "counts_strong" in capsys.readouterr().err


def test_reproducible_bytes(fixtures, tmp_path):
    out1, out2 = tmp_path / "a.png", tmp_path / "b.png"
    assert main(["correlation", "--in", str(fixtures), "--out", str(out1)]) == 0
    assert main(["correlation", "--in", str(fixtures), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_filled_zero_peak_changes_the_image(fixtures, tmp_path):
    good = tmp_path / "good.png"
    assert main(["correlation", "--in", str(fixtures), "--out", str(good)]) == 0
    doctored = tmp_path / "doctored"
    doctored.mkdir()
    _write_fixtures(doctored, fill_zero_peak=True)
    bad = tmp_path / "bad.png"
    assert main(["correlation", "--in", str(doctored), "--out", str(bad)]) == 0
    assert good.read_bytes() != bad.read_bytes()


def test_reader_rejects_missing_schema(tmp_path):
    (tmp_path / "g2.csv").write_text("lag_us,counts,g2,g2_noise_sub\n")
    with pytest.raises(SchemaMismatch):
        read_csv(tmp_path / "g2.csv", "g2")
