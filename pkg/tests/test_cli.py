import csv
import io
import json
import math
import xml.etree.ElementTree as ET

import pytest

from swipt_ps.cli import main, run
from swipt_ps.config import config_from_dict, parse_config
from swipt_ps.report import CSV_COLUMNS, from_json, to_csv, to_json, to_svg

SMALL = """
preset: h1
psi_points: 4
algo: {n_samples: 200}
baselines: {oracle_delta: 0.05}
"""


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text(SMALL)
    return path


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_solve_to_stdout(capsys):
    assert main(["solve", "--preset", "h1", "--psi", "0"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert len(rows) == 1
    assert rows[0]["method"] == "ps"
    assert float(rows[0]["energy_watts"]) == pytest.approx(1.18, abs=1e-8)


def test_region_endpoints(capsys):
    assert main(["region", "--preset", "h1", "--psi-points", "2"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert [float(r["psi"]) for r in rows] == pytest.approx([0.0, 1.81639491], abs=1e-8)
    assert float(rows[1]["energy_watts"]) == 0.0


def test_csv_header_and_number_format(small_cfg, tmp_path):
    out = tmp_path / "out"
    assert main(["compare", "--config", str(small_cfg), "--out", str(out)]) == 0
    text = (out / "compare.csv").read_text()
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert "\r" not in text
    rows = read_csv(text)
    assert {r["method"] for r in rows} == {"ps", "oracle", "as", "as-hull", "multichain"}
    for r in rows:
        assert r["converged"] in ("true", "false")
        for col in ("psi", "rate_exact", "rate_constraint", "energy_watts"):
            value = r[col]
            assert value == "nan" or len(value.replace("-", "").replace(".", "").split("e")[0]) <= 10


def test_compare_svg(small_cfg, tmp_path):
    out = tmp_path / "out"
    assert main(["compare", "--config", str(small_cfg), "--out", str(out)]) == 0
    root = ET.parse(out / "compare.svg").getroot()
    ns = {"s": "http://www.w3.org/2000/svg"}
    lines = root.findall("s:polyline", ns)
    assert len(lines) >= 3
    assert {el.get("data-method") for el in lines} >= {"ps", "oracle", "as-hull"}
    assert len(root.findall("s:circle", ns)) == 4


def test_compare_is_byte_identical(small_cfg, tmp_path):
    for d in ("a", "b"):
        assert main(["compare", "--config", str(small_cfg), "--out", str(tmp_path / d),
                     "--seed", "5"]) == 0
    assert (tmp_path / "a/compare.csv").read_bytes() == (tmp_path / "b/compare.csv").read_bytes()
    assert (tmp_path / "a/compare.svg").read_bytes() == (tmp_path / "b/compare.svg").read_bytes()


def test_json_echo_reproduces_run(small_cfg, tmp_path):
    out = tmp_path / "out"
    assert main(["region", "--config", str(small_cfg), "--out", str(out), "--format", "both",
                 "--seed", "2"]) == 0
    report = from_json((out / "region.json").read_text())
    assert report.metadata["seed"] == 2
    assert report.rows[1].trace
    cfg = config_from_dict(report.metadata["config"])
    again = run("region", cfg)
    assert to_csv(again) == (out / "region.csv").read_text()


def test_json_round_trip_keeps_nan():
    cfg = parse_config(SMALL)
    report = run("oracle", cfg)
    report.rows[0].energy = math.nan
    back = from_json(to_json(report))
    assert math.isnan(back.rows[0].energy)
    assert to_csv(back) == to_csv(report)


def test_svg_places_baselines_by_rate():
    cfg = parse_config(SMALL)
    svg = to_svg(run("as-baseline", cfg))
    assert 'data-method="as-hull"' in svg and svg.count("<circle") == 4


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("channel: []\n")
    assert main(["region", "--config", str(bad)]) == 2
    assert "channel: must be" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["region", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_solve_requires_psi(capsys):
    assert main(["solve", "--preset", "h1"]) == 2
    assert "--psi" in capsys.readouterr().err


def test_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["as-baseline", "--preset", "h1", "--out", str(blocker / "sub")]) == 3


def test_explicit_demands(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"preset": "h2", "psi_points": [0.5, 1.0]}))
    assert main(["multichain", "--config", str(cfg), "--oracle-delta", "0.1"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert [r["psi"] for r in rows] == ["0.5", "1"]


def test_demand_above_top_rejected(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("preset: h1\npsi_points: [0.5, 3.0]\n")
    assert main(["region", "--config", str(cfg)]) == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "swipt-ps" in capsys.readouterr().out
