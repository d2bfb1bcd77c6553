"""Command-line interface: exit codes, outputs, determinism."""

import json
import shutil
import subprocess
import textwrap

import pytest

from paulimix.cli import main


@pytest.fixture(autouse=True)
def out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("PAULIMIX_OUT", str(tmp_path))
    monkeypatch.chdir(tmp_path)
    return tmp_path


def write_config(path, text):
    path.write_text(textwrap.dedent(text))
    return str(path)


EQUAL_THIRDS = """\
    [run]
    dimension = 2
    t_max = 5.0
    points = 256

    [component.1]
    weight = 0.3333333333333333
    basis = 1
    kind = exp_relax
    scale = 0.75
    rate = 1.0

    [component.2]
    weight = 0.3333333333333333
    basis = 2
    kind = exp_relax
    scale = 0.75
    rate = 1.0

    [component.3]
    weight = 0.3333333333333334
    basis = 3
    kind = exp_relax
    scale = 0.75
    rate = 1.0
    """


# ---------------------------------------------------------------------------
# construct -> analyze round trip
# ---------------------------------------------------------------------------


def test_construct_then_analyze_round_trip(out_dir, capsys):
    rc = main(["construct", "2", "1.0", "0.25", "0.25", "0.5", "--out", "mix.ini"])
    assert rc == 0
    out, err = capsys.readouterr()
    forecast = json.loads(out)
    assert forecast["construction"] == "all-channels"
    assert forecast["noninvertible_count"] == 2
    verdicts = [ch["verdict"] for ch in forecast["channels"]]
    assert verdicts == ["noninvertible", "noninvertible", "semigroup"]
    assert "config: " in err

    rc = main(["analyze", str(out_dir / "mix.ini")])
    assert rc == 0
    out, _ = capsys.readouterr()
    assert "is_semigroup: true" in out
    assert "is_cp_divisible: true" in out
    report = json.loads((out_dir / "mix_classification.json").read_text())
    assert report["is_semigroup"] is True
    csv_text = (out_dir / "mix_trajectory.csv").read_text()
    assert csv_text.splitlines()[0] == "t,lambda_1,lambda_2,lambda_3,gamma_1,gamma_2,gamma_3"


def test_construct_same_channel_emits_commented_forecast_plus_config(out_dir, capsys):
    rc = main(["construct", "2", "1.0", "--same", "0.5", "--q", "0.3*sin(t)^2"])
    assert rc == 0
    out, _ = capsys.readouterr()
    forecast_lines = [l[2:] for l in out.splitlines() if l.startswith("# ")]
    config_lines = [l for l in out.splitlines() if not l.startswith("# ")]
    forecast = json.loads("\n".join(forecast_lines))
    assert forecast["construction"] == "same-channel"
    assert forecast["channels"][0]["verdict"] == "noninvertible"
    assert forecast["channels"][0]["singular_times"][0] == pytest.approx(
        1.6074280131462158, abs=1e-6
    )
    assert forecast["channels"][1]["verdict"] == "invertible"

    cfg = out_dir / "same.ini"
    cfg.write_text("\n".join(config_lines))
    rc = main(["analyze", str(cfg)])
    assert rc == 0
    report = json.loads((out_dir / "same_classification.json").read_text())
    assert report["is_semigroup"] is True


def test_construct_weight_below_bound_exits_2(capsys):
    rc = main(["construct", "3", "1.0", "0.1", "0.3", "0.3", "0.3"])
    assert rc == 2
    _, err = capsys.readouterr()
    assert "0.2222" in err


def test_construct_same_requires_q(capsys):
    rc = main(["construct", "2", "1.0", "--same", "0.5"])
    assert rc == 2
    _, err = capsys.readouterr()
    assert "--q" in err


# ---------------------------------------------------------------------------
# analyze error paths
# ---------------------------------------------------------------------------


def test_analyze_rejects_bad_weight_sum(out_dir, tmp_path, capsys):
    cfg = write_config(
        tmp_path / "bad.ini",
        """\
        [run]
        dimension = 2

        [component.1]
        weight = 0.5
        basis = 1
        kind = exp_relax
        scale = 0.5
        rate = 1.0

        [component.2]
        weight = 0.2
        basis = 2
        kind = exp_relax
        scale = 0.5
        rate = 1.0
        """,
    )
    rc = main(["analyze", cfg])
    assert rc == 2
    _, err = capsys.readouterr()
    assert "sum" in err


def test_analyze_exits_3_when_samples_do_not_cover_grid(tmp_path, capsys):
    cfg = write_config(
        tmp_path / "short.ini",
        """\
        [run]
        dimension = 2
        t_max = 5.0

        [component.1]
        weight = 1.0
        basis = 1
        kind = samples
        times = 0.0, 0.5, 1.0, 1.5, 2.0
        values = 0.0, 0.1, 0.17, 0.21, 0.24
        """,
    )
    rc = main(["analyze", cfg])
    assert rc == 3
    _, err = capsys.readouterr()
    assert "error:" in err


def test_analyze_reports_position_of_config_errors(tmp_path, capsys):
    cfg = write_config(
        tmp_path / "broken.ini",
        """\
        [run]
        dimension = 2

        [component.1]
        weight = 1.0
        basis = 1
        """,
    )
    rc = main(["analyze", cfg])
    assert rc == 2
    _, err = capsys.readouterr()
    assert "[component.1]" in err and "kind" in err


def test_analyze_rejects_non_numeric_weight(tmp_path, capsys):
    cfg = write_config(
        tmp_path / "nan.ini",
        """\
        [run]
        dimension = 2

        [component.1]
        weight = heavy
        basis = 1
        kind = exp_relax
        scale = 0.5
        rate = 1.0
        """,
    )
    rc = main(["analyze", cfg])
    assert rc == 2
    _, err = capsys.readouterr()
    assert "[component.1] weight" in err


def test_analyze_rejects_unknown_tolerance_key(tmp_path, capsys):
    cfg = write_config(
        tmp_path / "tol.ini",
        """\
        [run]
        dimension = 2

        [tolerances]
        fuzz = 0.1

        [component.1]
        weight = 1.0
        basis = 1
        kind = exp_relax
        scale = 0.5
        rate = 1.0
        """,
    )
    rc = main(["analyze", cfg])
    assert rc == 2
    _, err = capsys.readouterr()
    assert "fuzz" in err


def test_analyze_missing_config_exits_2(capsys):
    rc = main(["analyze", "no_such_file.ini"])
    assert rc == 2
    _, err = capsys.readouterr()
    assert "not found" in err


def test_analyze_flags_out_of_range_function_with_exit_2(out_dir, tmp_path, capsys):
    cfg = write_config(
        tmp_path / "hot.ini",
        """\
        [run]
        dimension = 2

        [component.1]
        weight = 1.0
        basis = 1
        kind = exp_relax
        scale = 1.2
        rate = 1.0
        """,
    )
    rc = main(["analyze", cfg])
    assert rc == 2
    # Outputs are still written: the excursion is flagged, not fatal.
    report = json.loads((out_dir / "hot_classification.json").read_text())
    assert report["p_in_range"] is False


def test_analyze_respects_output_section(out_dir, tmp_path):
    cfg = write_config(
        tmp_path / "routed.ini",
        EQUAL_THIRDS
        + """\

    [output]
    trajectory = sub/flow.csv
    classification = sub/report.json
    """,
    )
    rc = main(["analyze", cfg])
    assert rc == 0
    assert (out_dir / "sub" / "flow.csv").exists()
    assert (out_dir / "sub" / "report.json").exists()


# ---------------------------------------------------------------------------
# scan
# ---------------------------------------------------------------------------


def test_scan_matched_family_tight_grid(out_dir, capsys):
    rc = main(["scan", "2", "--divisions", "3", "--family", "matched"])
    assert rc == 0
    out, _ = capsys.readouterr()
    summary = json.loads(out)
    assert summary["points"] == 10
    assert summary["invalid_points"] == 9
    assert summary["proper_points"] == 1
    assert summary["semigroup_fraction"] == 1.0
    rows = (out_dir / "scan_d2_matched.csv").read_text().splitlines()
    ok_rows = [r for r in rows if ",ok," in r]
    assert len(ok_rows) == 1
    assert ok_rows[0].split(",")[4] == "true"  # is_semigroup


def test_scan_semigroup_family_corners_and_fractions(out_dir, capsys):
    rc = main(["scan", "2", "--divisions", "4"])
    assert rc == 0
    out, _ = capsys.readouterr()
    summary = json.loads(out)
    assert summary["family"] == "semigroup"
    assert summary["corner_points"] == 3
    assert summary["corner_semigroups"] == 3
    assert summary["proper_points"] == 12
    assert summary["semigroup_fraction"] == 0.0
    assert summary["cp_divisible_fraction"] == pytest.approx(0.25)
    rows = (out_dir / "scan_d2_semigroup.csv").read_text().splitlines()
    corner = next(r for r in rows if r.startswith("1,0,0,"))
    assert corner.split(",")[3:6] == ["ok", "true", "true"]
    eternal = next(r for r in rows if r.startswith("0.5,0.5,0,"))
    fields = eternal.split(",")
    assert fields[4] == "false" and fields[5] == "false"
    assert fields[7] == "0"  # both inputs stay invertible


def test_scan_rejects_bad_step(capsys):
    rc = main(["scan", "2", "--step", "0"])
    assert rc == 2


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def test_verify_mub_passes(capsys):
    rc = main(["verify", "mub", "--d", "3"])
    assert rc == 0
    out, _ = capsys.readouterr()
    doc = json.loads(out)
    assert doc["pass"] is True
    assert doc["dimension"] == 3


def test_verify_theorem1_report_is_byte_identical(out_dir, capsys):
    rc = main(["verify", "theorem1", "--trials", "120", "--seed", "3", "--report", "r1.json"])
    assert rc == 0
    out, _ = capsys.readouterr()
    assert "theorem1: pass" in out
    rc = main(["verify", "theorem1", "--trials", "120", "--seed", "3", "--report", "r2.json"])
    assert rc == 0
    capsys.readouterr()
    assert (out_dir / "r1.json").read_bytes() == (out_dir / "r2.json").read_bytes()
    doc = json.loads((out_dir / "r1.json").read_text())
    assert doc["pass"] is True and doc["trials"] == 120


def test_verify_theorem2_passes(capsys):
    rc = main(["verify", "theorem2", "--d", "3", "--trials", "100", "--seed", "1"])
    assert rc == 0
    doc = json.loads(capsys.readouterr()[0])
    assert doc["details"]["min_noninvertible_inputs"] >= 3


def test_verify_cptp_passes(capsys):
    rc = main(["verify", "cptp", "--trials", "20", "--seed", "1"])
    assert rc == 0
    doc = json.loads(capsys.readouterr()[0])
    assert doc["pass"] is True


# ---------------------------------------------------------------------------
# analyze determinism
# ---------------------------------------------------------------------------


def test_analyze_outputs_are_byte_identical(tmp_path, monkeypatch, capsys):
    cfg = write_config(tmp_path / "det.ini", EQUAL_THIRDS)
    for sub in ("one", "two"):
        monkeypatch.setenv("PAULIMIX_OUT", str(tmp_path / sub))
        assert main(["analyze", cfg]) == 0
        capsys.readouterr()
    for name in ("det_trajectory.csv", "det_classification.json"):
        a = (tmp_path / "one" / name).read_bytes()
        b = (tmp_path / "two" / name).read_bytes()
        assert a == b


# ---------------------------------------------------------------------------
# dump
# ---------------------------------------------------------------------------


def test_dump_mub_bases_stdout(capsys):
    rc = main(["dump", "mub-bases", "--d", "2"])
    assert rc == 0
    out, _ = capsys.readouterr()
    lines = out.splitlines()
    assert lines[0] == "basis,vector,component,re,im"
    assert lines[1] == "1,0,0,1,0"


def test_dump_choi_requires_config(capsys):
    rc = main(["dump", "choi"])
    assert rc == 2
    _, err = capsys.readouterr()
    assert "--config" in err


def test_dump_superop_matrix(out_dir, tmp_path, capsys):
    cfg = write_config(tmp_path / "mix.ini", EQUAL_THIRDS)
    rc = main(["dump", "superop", "--config", cfg, "--t", "0.0", "--out", "m.csv"])
    assert rc == 0
    rows = (out_dir / "m.csv").read_text().splitlines()
    assert rows[0] == "row,col,re,im"
    # identity superoperator at t = 0
    cells = {tuple(r.split(",")[:2]): r.split(",")[2] for r in rows[1:]}
    assert cells[("0", "0")] == "1" and cells[("0", "1")] == "0"


# ---------------------------------------------------------------------------
# console entry point
# ---------------------------------------------------------------------------


def test_installed_console_script_smoke():
    exe = shutil.which("paulimix")
    assert exe, "console script should be installed with the package"
    proc = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "analyze" in proc.stdout
