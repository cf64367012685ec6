"""Command-line driver: exit codes, determinism, config round-trips."""

import csv
import json

import gmpy2
import pytest
from gmpy2 import mpfr

from ccrenorm.cli import format_real, main


def read_outputs(stem):
    with open(str(stem) + ".csv") as fh:
        csv_text = fh.read()
    with open(str(stem) + ".meta.json") as fh:
        meta = json.load(fh)
    return csv_text, meta


def test_rho_success(tmp_path):
    stem = tmp_path / "r"
    code = main(["rho", "--theta", "0.38", "--depth", "6", "--bits", "53",
                 "--out", str(stem)])
    assert code == 0
    csv_text, meta = read_outputs(stem)
    lines = csv_text.splitlines()
    assert lines[0] == "theta,rho,cf,certified_depth,exact"
    assert len(lines) == 2
    assert meta["status"] == "ok"
    assert meta["error"] is None
    assert meta["rows"] == 1
    assert meta["command"] == "rho"


def test_byte_identical_reruns(tmp_path):
    argv = ["rho", "--theta", "0.38", "--depth", "6", "--bits", "53"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_meta_config_roundtrip(tmp_path):
    first = tmp_path / "first"
    again = tmp_path / "again"
    argv = ["superstable", "--target", "2/5", "--bits", "53", "--out", str(first)]
    assert main(argv) == 0
    code = main(["superstable", "--config", str(first) + ".meta.json",
                 "--out", str(again)])
    assert code == 0
    assert (tmp_path / "first.csv").read_bytes() == (tmp_path / "again.csv").read_bytes()


def test_flags_override_config(tmp_path):
    base = tmp_path / "base"
    assert main(["rho", "--theta", "0.38", "--depth", "5", "--bits", "53",
                 "--out", str(base)]) == 0
    over = tmp_path / "over"
    code = main(["rho", "--config", str(base) + ".meta.json",
                 "--theta", "0.61", "--out", str(over)])
    assert code == 0
    _, meta = read_outputs(over)
    assert meta["config"]["theta"] == "0.61"
    assert meta["config"]["depth"] == 5  # inherited from the config file
    csv_text, _ = read_outputs(over)
    assert "6.1" in csv_text.splitlines()[1]


@pytest.mark.parametrize(
    "argv",
    [
        ["rho", "--theta", "0.38", "--alpha", "0.5"],  # alpha must exceed 1
        ["rho", "--theta", "0.38", "--epsilon", "1"],  # |epsilon| < 1
        ["rho"],  # theta required
        ["delta", "--cf", "1,inf"],  # needs an infinite CF
        ["delta", "--cf", "1", "--depth", "2"],  # depth floor is 4
        ["converge", "--cf", "2,0"],  # CF entries >= 1
        ["tower", "--theta", "0.38", "--config", "/nonexistent/cfg.json"],
    ],
)
def test_rejected_configs_write_nothing(tmp_path, argv, capsys):
    stem = tmp_path / "never"
    assert main(argv + ["--out", str(stem)]) == 1
    assert not (tmp_path / "never.csv").exists()
    assert not (tmp_path / "never.meta.json").exists()
    assert "config error" in capsys.readouterr().err


def test_tower_partial_on_rational(tmp_path, capsys):
    stem = tmp_path / "t"
    code = main(["tower", "--theta", "0.25", "--depth", "6", "--out", str(stem)])
    assert code == 2
    assert "partial results" in capsys.readouterr().err
    csv_text, meta = read_outputs(stem)
    assert meta["status"] == "partial"
    assert meta["error"].startswith("NotRenormalizableError")
    lines = csv_text.splitlines()
    assert meta["rows"] == len(lines) - 1 == 3  # levels 0..2 certified
    assert lines[-1].split(",")[5] == "inf"  # terminal level has infinite height


def test_superstable_target(tmp_path):
    stem = tmp_path / "s"
    code = main(["superstable", "--target", "1/2", "--bits", "53", "--out", str(stem)])
    assert code == 0
    csv_text, _ = read_outputs(stem)
    row = csv_text.splitlines()[1].split(",")
    assert row[1] == "1/2"
    theta = mpfr(row[2])
    assert abs(theta - mpfr("0.5")) < mpfr("1e-12")


def test_tower_success_rows(tmp_path):
    stem = tmp_path / "g"
    code = main(["tower", "--cf", "1", "--depth", "5", "--bits", "53",
                 "--out", str(stem)])
    assert code == 0
    csv_text, meta = read_outputs(stem)
    lines = csv_text.splitlines()
    assert meta["rows"] == 6
    for line in lines[1:]:
        cells = line.split(",")
        assert cells[5] == "1"  # golden heights
        alpha_est = float(cells[8])
        assert abs(alpha_est - 3.0) < 0.15


def test_probe_single_cell(tmp_path):
    stem = tmp_path / "p"
    code = main(["probe", "--cf", "1", "--alpha", "3", "--depth", "4",
                 "--bits", "53", "--out", str(stem)])
    assert code == 0
    csv_text, meta = read_outputs(stem)
    lines = csv_text.splitlines()
    assert lines[0] == "alpha,delta,lambda_s,passes"
    assert len(lines) == 2
    cells = lines[1].split(",")
    assert cells[0] == "3"
    assert float(cells[1]) > 1
    assert 0 < float(cells[2]) < 1
    assert cells[3] == "1"
    assert meta["status"] == "ok"


def test_window_rational_plateau(tmp_path):
    stem = tmp_path / "w"
    code = main(["window", "--target", "1/3", "--bits", "53", "--out", str(stem)])
    assert code == 0
    csv_text, _ = read_outputs(stem)
    row = next(iter(csv.DictReader(csv_text.splitlines())))
    assert row["prefix"] == "[3,inf]"
    lo, hi, width = float(row["lo"]), float(row["hi"]), float(row["width"])
    assert lo < hi
    assert abs(width - (hi - lo)) < 1e-9
    assert width > 0.005  # mode-locking plateau has positive width


def test_format_real_rendering():
    assert format_real(None, 8) == ""
    assert format_real(mpfr(0), 8) == "0.0000000e+00"
    assert format_real(gmpy2.nan(), 8) == "nan"
    assert format_real(gmpy2.inf(), 8) == "inf"
    assert format_real(-gmpy2.inf(), 8) == "-inf"
    assert format_real(mpfr("0.5"), 8) == "5.0000000e-01"
    assert format_real(mpfr("-12.25"), 4) == "-1.225e+01"
    assert format_real(mpfr("1e-40"), 6).endswith("e-40")
    digits = format_real(mpfr(1) / 3, 13)
    assert digits == "3.333333333333e-01"
