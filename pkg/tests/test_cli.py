"""Command-line surface: flags, CSV/PNG emission, determinism, exit codes."""

import csv
import json

import numpy as np
import pytest

from mmsekit import cli

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

# Full file emitted by: run-figure --figure bpsk --sigma-grid 1.0 --seed 11.
# Byte-frozen; any drift in formatting, column order, line endings, or the
# seeded estimates is a contract break.
BPSK_GOLDEN = (
    b"sigma2_n,mmse,mmse_se,poincare_lb,poincare_lb_se,cramer_rao,variance_target\r\n"
    b"1.0,0.4495995092066728,0.0,0.3176880197618254,0.0005918288739155638,,1.0\r\n"
)


@pytest.fixture(autouse=True)
def _clean_seed_env(monkeypatch):
    monkeypatch.delenv(cli.SEED_ENV_VAR, raising=False)


def _read_rows(path):
    with open(path, newline="", encoding="ascii") as fh:
        return list(csv.reader(fh))


def test_default_sigma_grid_is_logspaced():
    grid = cli.default_sigma_grid()
    assert len(grid) == 12
    assert grid == [float(v) for v in np.logspace(-1.0, 3.0, 12)]
    assert grid[0] == pytest.approx(0.1)
    assert grid[-1] == pytest.approx(1000.0)
    assert all(b > a for a, b in zip(grid, grid[1:]))


def test_run_figure_writes_csv_and_png(tmp_path, capsys):
    out = tmp_path / "bpsk.csv"
    rc = cli.main(
        [
            "run-figure",
            "--figure",
            "bpsk",
            "--sigma-grid",
            "0.5,2.0",
            "--seed",
            "5",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    rows = _read_rows(out)
    assert rows[0] == cli.CSV_COLUMNS
    assert len(rows) == 3
    assert [float(r[0]) for r in rows[1:]] == [0.5, 2.0]
    for r in rows[1:]:
        assert r[5] == ""  # no density, no Cramer-Rao baseline
        assert float(r[6]) == 1.0
        assert float(r[3]) <= float(r[1]) + 3.0 * (float(r[4]) + float(r[2]))
    raw = out.read_bytes()
    assert b"\r\n" in raw and b";" not in raw
    png = tmp_path / "bpsk.png"
    assert png.exists()
    blob = png.read_bytes()
    assert blob.startswith(PNG_MAGIC) and len(blob) > 1000
    stdout = capsys.readouterr().out
    assert f"wrote {out}" in stdout
    assert f"wrote {png}" in stdout
    assert "sigma2_n=0.5" in stdout


def test_gaussian_figure_populates_baseline_column(tmp_path):
    out = tmp_path / "gauss.csv"
    rc = cli.main(
        [
            "run-figure",
            "--figure",
            "gaussian",
            "--sigma-grid",
            "1.0",
            "--seed",
            "5",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    header, row = _read_rows(out)
    assert header == cli.CSV_COLUMNS
    assert float(row[1]) == pytest.approx(4.04105995837493, abs=1e-10)
    assert row[2] == "0.0"  # closed-form reference carries no sampling error
    assert float(row[5]) == pytest.approx(1.5281451304018, abs=1e-9)
    assert float(row[6]) == pytest.approx(44.43, abs=1e-12)


def test_sparse_figure_uses_sampled_reference(tmp_path):
    out = tmp_path / "sparse.csv"
    rc = cli.main(
        [
            "run-figure",
            "--figure",
            "sparse",
            "--sigma-grid",
            "1.0",
            "--samples",
            "20000",
            "--seed",
            "4242",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    _, row = _read_rows(out)
    assert float(row[2]) > 0.0  # Monte Carlo reference has a standard error
    assert row[5] == ""
    assert float(row[6]) == pytest.approx(0.4)


def test_csv_bytes_reproducible_per_seed(tmp_path):
    paths = [tmp_path / f"run{i}.csv" for i in range(3)]
    for path, seed in zip(paths, ("11", "11", "12")):
        rc = cli.main(
            [
                "run-figure",
                "--figure",
                "bpsk",
                "--sigma-grid",
                "1.0",
                "--seed",
                seed,
                "--out",
                str(path),
            ]
        )
        assert rc == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert paths[0].read_bytes() != paths[2].read_bytes()
    assert paths[0].read_bytes() == BPSK_GOLDEN


def test_env_seed_is_default_and_flag_wins(tmp_path, monkeypatch):
    def run(path, *extra):
        rc = cli.main(
            [
                "run-figure",
                "--figure",
                "bpsk",
                "--sigma-grid",
                "1.0",
                "--out",
                str(path),
                *extra,
            ]
        )
        assert rc == 0
        return path.read_bytes()

    explicit = run(tmp_path / "a.csv", "--seed", "123")
    monkeypatch.setenv(cli.SEED_ENV_VAR, "123")
    via_env = run(tmp_path / "b.csv")
    assert via_env == explicit
    flag_beats_env = run(tmp_path / "c.csv", "--seed", "11")
    assert flag_beats_env == BPSK_GOLDEN


def test_invalid_env_seed_is_reported(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.SEED_ENV_VAR, "not-a-number")
    rc = cli.main(
        [
            "run-figure",
            "--figure",
            "bpsk",
            "--sigma-grid",
            "1.0",
            "--out",
            str(tmp_path / "x.csv"),
        ]
    )
    assert rc == 1
    err = capsys.readouterr().err
    assert "error:" in err and cli.SEED_ENV_VAR in err


@pytest.mark.parametrize(
    "grid,fragment",
    [
        ("2,1", "increasing"),
        ("0,1", "positive"),
        (",", "empty"),
        ("a,b", "could not parse"),
    ],
)
def test_bad_sigma_grid_rejected(tmp_path, capsys, grid, fragment):
    rc = cli.main(
        [
            "run-figure",
            "--figure",
            "bpsk",
            "--sigma-grid",
            grid,
            "--out",
            str(tmp_path / "x.csv"),
        ]
    )
    assert rc == 1
    assert fragment in capsys.readouterr().err


def test_unknown_figure_rejected_by_parser(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["run-figure", "--figure", "cauchy"])
    assert exc.value.code == 2


def test_missing_subcommand_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 2


def test_sparse_alpha_validated(tmp_path, capsys):
    rc = cli.main(
        [
            "run-figure",
            "--figure",
            "sparse",
            "--sigma-grid",
            "1.0",
            "--alpha",
            "1.5",
            "--out",
            str(tmp_path / "x.csv"),
        ]
    )
    assert rc == 1
    assert "alpha" in capsys.readouterr().err


def test_default_output_paths(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    rc = cli.main(
        ["run-figure", "--figure", "bpsk", "--sigma-grid", "1.0", "--seed", "5"]
    )
    assert rc == 0
    assert (tmp_path / "figure_bpsk.csv").exists()
    assert (tmp_path / "figure_bpsk.png").exists()


def test_gamma_example_prints_routes_and_exits_zero(capsys):
    rc = cli.main(["run-gamma-example", "--samples", "20000", "--seed", "42"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "closed form      : 0.8" in out
    for fragment in (
        "gradient route",
        "classical route",
        "E[X^2]",
        "E[X/(Y^2+b)]",
        "E[1/(Y^2+b)^2]",
        "all routes within 3 standard errors",
    ):
        assert fragment in out


def test_gamma_example_validates_shape(capsys):
    rc = cli.main(["run-gamma-example", "--alpha", "0", "--samples", "2000"])
    assert rc == 1
    assert "alpha" in capsys.readouterr().err


def test_verify_subcommand_reports_and_exits_zero(capsys):
    rc = cli.main(["verify"])
    assert rc == 0
    out_lines = capsys.readouterr().out.strip().splitlines()
    summary = json.loads(out_lines[-1])
    assert summary["all_passed"] is True
    assert len(summary["suites"]) == 8
    assert "all 8 suites passed" in out_lines
