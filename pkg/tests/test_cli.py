import json
import subprocess
import sys

import pytest

from grushin.cli import main, parse_grid


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_parse_grid():
    assert parse_grid("2.0") == [2.0]
    assert parse_grid("0.25:1.0:0.25") == pytest.approx([0.25, 0.5, 0.75, 1.0])
    # inclusive endpoint within 1e-12
    assert parse_grid("0:0.3:0.1")[-1] == pytest.approx(0.3)
    with pytest.raises(Exception):
        parse_grid("1:0:0.1")


def test_classify_verdict_flip(capsys):
    code, out, _ = run_cli(["classify", "--alpha", "0.25:3:0.25", "--n", "1", "--c", "0"], capsys)
    assert code == 0
    rows = json.loads(out)["rows"]
    by_alpha = {round(r["alpha"], 6): r["verdict"] for r in rows}
    assert by_alpha[0.75] == "NotESA_InfiniteDeficiency"
    assert by_alpha[1.0] == "Critical_Mu4_Indeterminate"
    assert by_alpha[1.25] == "EssentiallySelfAdjoint"


def test_classify_single_point_csv(capsys):
    code, out, _ = run_cli(
        ["classify", "--alpha", "2", "--n", "1", "--c", "0", "--format", "csv"], capsys
    )
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0].startswith("alpha,")
    assert "EssentiallySelfAdjoint" in lines[1]


def test_classify_deterministic(capsys):
    args = ["classify", "--alpha", "0:1:0.37", "--n", "1:3:1", "--c", "-0.5:0.5:0.5"]
    _, out1, _ = run_cli(args, capsys)
    _, out2, _ = run_cli(args, capsys)
    assert out1 == out2


def test_classify_critical_on_curve(capsys):
    from grushin.params import forbidden_c

    c0 = forbidden_c(2.0, 1)
    code, out, _ = run_cli(["classify", "--alpha", "2", "--n", "1", "--c", repr(c0)], capsys)
    rows = json.loads(out)["rows"]
    assert rows[0]["verdict"] == "Critical_Mu4_Indeterminate"


def test_phase_diagram(tmp_path, capsys):
    svg = tmp_path / "phase.svg"
    csv = tmp_path / "phase.csv"
    code, _, _ = run_cli(
        [
            "phase-diagram",
            "--alpha", "0.2:3:0.2",
            "--c=-1:1:0.2",
            "--n", "1",
            "--out-svg", str(svg),
            "--out-csv", str(csv),
        ],
        capsys,
    )
    assert code == 0
    text = svg.read_text()
    assert text.startswith("<svg")
    assert "<metadata>" in text and "command" in text
    assert "polyline" in text  # the critical curve passes through (1, 0)
    import xml.etree.ElementTree as ET

    ET.fromstring(text)  # schema-valid XML
    lines = csv.read_text().strip().split("\n")
    assert lines[0] == "alpha,n,c,mu,verdict,regime"
    assert len(lines) == 1 + 15 * 11


def test_phase_diagram_deterministic(tmp_path, capsys):
    outs = []
    for tag in ("a", "b"):
        svg = tmp_path / f"{tag}.svg"
        csv = tmp_path / f"{tag}.csv"
        run_cli(
            ["phase-diagram", "--alpha", "0.5:1.5:0.5", "--c=0:0.5:0.25", "--n", "1",
             "--out-svg", str(svg), "--out-csv", str(csv)],
            capsys,
        )
        outs.append((svg.read_bytes(), csv.read_bytes()))
    assert outs[0] == outs[1]


def test_phase_diagram_degenerate_cell(tmp_path, capsys):
    svg = tmp_path / "one.svg"
    csv = tmp_path / "one.csv"
    code, _, _ = run_cli(
        ["phase-diagram", "--alpha", "2", "--c", "0", "--n", "1",
         "--out-svg", str(svg), "--out-csv", str(csv)],
        capsys,
    )
    assert code == 0
    import xml.etree.ElementTree as ET

    ET.fromstring(svg.read_text())


def test_indexset_cli(capsys):
    code, out, _ = run_cli(["indexset", "eu({(0,0)};{(0,0)})"], capsys)
    assert code == 0
    assert out.strip() == "{(0,0),(0,1)}"
    code, out, _ = run_cli(["indexset", "compose([Empty;Empty;(0,0)+N0];[Empty;Empty;(0,0)+N0];1;1)"], capsys)
    assert code == 0
    assert out.strip().startswith("[Empty;Empty;")
    code, _, err = run_cli(["indexset", "eu({(0,0)}"], capsys)
    assert code == 2


def test_extension_build_and_verify(tmp_path, capsys):
    spec_file = tmp_path / "spec.json"
    code, out, _ = run_cli(
        ["extension", "build", "--family", "5", "--Gamma", "0,0,0,0", "--out", str(spec_file)],
        capsys,
    )
    assert code == 0
    spec = json.loads(spec_file.read_text())
    U = spec["U"]
    assert U[0][0]["re"] == pytest.approx(-1.0)
    assert U[1][1]["re"] == pytest.approx(-1.0)
    assert U[0][1]["re"] == 0.0

    code, out, _ = run_cli(
        [
            "extension", "verify",
            "--spec", str(spec_file),
            "--alpha", "0.5", "--n", "1", "--c", "0",
            "--trials", "50",
        ],
        capsys,
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["passed"]
    assert payload["isotropy_worst_relative"] < 1e-10


def test_extension_greens_check_cli(capsys):
    code, out, _ = run_cli(
        ["extension", "greens-check", "--alpha", "1", "--n", "1", "--c", "1", "--mode", "1"],
        capsys,
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["relative_error"] < 1e-4


def test_deficiency_cli(capsys):
    code, out, _ = run_cli(
        ["deficiency", "--alpha", "0.5", "--n", "1", "--c", "0", "--kmax", "3"], capsys
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["aggregate"] == "infinite"
    assert len(payload["per_mode"]) == 3


def test_frobenius_cli(capsys):
    code, out, _ = run_cli(
        ["frobenius", "--alpha", "1", "--n", "1", "--c", "0", "--root", "plus", "--mode", "1",
         "--cutoff", "6"],
        capsys,
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["residual_certificate"]["passed"]
    thetas = [t["theta"] for t in payload["expansion"]["terms"]]
    assert 4.0 in thetas


def test_bessel_cli(capsys):
    code, out, _ = run_cli(
        ["bessel", "eval", "--kind", "I", "--x", "1", "--nu", "0"], capsys
    )
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(1.2660658777520084)
    code, out, _ = run_cli(
        ["bessel", "eval", "--kind", "Ktilde", "--x", "1", "--nu", "1"], capsys
    )
    assert code == 0


def test_curvature_cli(tmp_path, capsys):
    code, out, _ = run_cli(["curvature", "--alpha", "1", "--n", "1"], capsys)
    assert code == 0
    payload = json.loads(out)
    assert payload["flat_scalar_coefficient"] == pytest.approx(-4.0)
    assert payload["frame_form_coefficient"] == pytest.approx(-4.0)

    metric = {
        "conformal_factor": {
            "terms": [
                {"x_power": 0, "mode": 0, "cos": 1.0},
                {"x_power": 1, "mode": 0, "cos": 1.0},
            ]
        }
    }
    mfile = tmp_path / "metric.json"
    mfile.write_text(json.dumps(metric))
    code, out, _ = run_cli(
        ["curvature", "--alpha", "1", "--n", "1", "--metric", str(mfile)], capsys
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["asymptotic_check"]["relative_error"] < 0.01


def test_usage_exit_codes(capsys):
    assert main(["classify", "--alpha", "bad:grid", "--n", "1", "--c", "0"]) == 2
    assert main(["nonsense"]) == 2
    assert main(["classify", "--alpha", "-2", "--n", "1", "--c", "0"]) == 2  # alpha <= -1


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "grushin.cli", "classify", "--alpha", "2", "--n", "1", "--c", "0"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "EssentiallySelfAdjoint" in proc.stdout
