from __future__ import annotations

import csv
import io
import json
import re
import subprocess
import sys
import xml.etree.ElementTree as ET

import jsonschema
import pytest

import schemas
from topoconj.cli import main

LIN = ["--f", "x/2", "--g", "x/3", "--domain-f", "0,1", "--domain-g", "0,1"]
FLIP = ["--f", "-1.04*x+x^3", "--g", "-1.09*x+x^3", "--domain-f", "-0.5,0.5", "--domain-g", "-0.5,0.5", "--flip"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    r = list(csv.reader(io.StringIO(text)))
    assert r[0] == ["x", "h"]
    return [(float(a), float(b)) for a, b in r[1:]]


# -- fixed-points -----------------------------------------------------------

def test_fixed_points_two(capsys):
    code, out, _ = run(capsys, "fixed-points", "--map", "x+0.25-x^2", "--domain", "-1,0.5")
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, schemas.FIXED_POINTS)
    pts = doc["fixed_points"]
    assert [p["x"] for p in pts] == pytest.approx([-0.5, 0.5], abs=1e-12)
    assert [p["left"] for p in pts] == ["repelling", "attracting"]


def test_fixed_points_mixed(capsys):
    code, out, _ = run(capsys, "fixed-points", "--map", "x+x^2", "--domain", "-0.4,0.4")
    doc = json.loads(out)
    assert code == 0 and len(doc["fixed_points"]) == 1
    assert doc["fixed_points"][0]["kind"] == "mixed"


def test_fixed_points_period2_and_file(capsys, tmp_path):
    path = tmp_path / "fp.json"
    code, out, _ = run(capsys, "fixed-points", "--map", "-(1+mu)*x+x^3", "--mu", "0.04",
                       "--domain", "-0.5,0.5", "--out", str(path))
    assert code == 0 and out == ""
    doc = json.loads(path.read_text())
    jsonschema.validate(doc, schemas.FIXED_POINTS)
    (o,) = doc["period2"]
    assert (o["xl"], o["xr"]) == (pytest.approx(-0.2, abs=1e-9), pytest.approx(0.2, abs=1e-9))


@pytest.mark.parametrize(
    "argv, code, needle",
    [
        (["fixed-points", "--map", "x^2", "--domain", "-1,1"], 1, "not strictly monotone"),
        (["fixed-points", "--map", "x*(1", "--domain", "-1,1"], 1, "offset 4"),
        (["fixed-points", "--map", "x+y", "--domain", "-1,1"], 1, "unknown identifier"),
        (["fixed-points", "--map", "x", "--domain", "1,1"], 1, "degenerate"),
        (["fixed-points", "--map", "x+mu", "--domain", "-1,1"], 1, "mu"),
        (["fixed-points", "--domain", "-1,1"], 1, "--map"),
    ],
)
def test_input_errors(capsys, argv, code, needle):
    got, _, err = run(capsys, *argv)
    assert got == code
    assert needle in err


def test_grid_too_coarse_is_structural(capsys):
    # two roots 2e-7 apart cannot be separated at this grid
    c = 0.309375 + 1e-4
    expr = f"x + (x-{c!r})^2 - 1e-14"
    code, _, err = run(capsys, "fixed-points", "--map", expr, "--domain", "-0.15,0.45", "--grid", "64")
    assert code == 2 and "grid" in err


# -- conjugacy --------------------------------------------------------------

def test_build_linear_pair(capsys):
    code, out, err = run(capsys, "conjugacy", "build", *LIN, "--anchor-a", "1", "--anchor-b", "1")
    assert code == 0
    r = rows(out)
    assert len(r) == 1001
    assert r[0] == (0.0, 0.0) and r[-1] == (1.0, 1.0)
    meta = json.loads(err.strip().splitlines()[-1])
    jsonschema.validate(meta, schemas.BUILD_META)
    assert meta["anchors"] == [{"a": 1.0, "b": 1.0}]
    # full precision: every value round-trips through 17 significant digits
    for line in out.splitlines()[1:]:
        assert all(format(float(v), ".17g") == v for v in line.split(","))


def test_build_flip_with_svg(capsys, tmp_path):
    svg, meta = tmp_path / "h.svg", tmp_path / "meta.json"
    code, out, _ = run(capsys, "conjugacy", "build", *FLIP, "--samples", "201",
                       "--svg", str(svg), "--meta", str(meta))
    assert code == 0
    # h is increasing with h(0) = 0, so it keeps the sign of x
    assert all((x > 0) == (v > 0) for x, v in rows(out) if x != 0.0)
    jsonschema.validate(json.loads(meta.read_text()), schemas.BUILD_META)
    root = ET.fromstring(svg.read_text())
    assert root.tag.endswith("svg") and root.get("version") == "1.1"
    x0, y0, w, h = map(float, root.get("viewBox").split())
    xs = [x for x, _ in rows(out)]
    hs = [v for _, v in rows(out)]
    # the data box padded by 5% on each side, y flipped
    assert x0 == pytest.approx(min(xs) - 0.05 * (max(xs) - min(xs)), rel=1e-8)
    assert w == pytest.approx(1.1 * (max(xs) - min(xs)), rel=1e-8)
    assert y0 == pytest.approx(-(max(hs) + 0.05 * (max(hs) - min(hs))), rel=1e-8)
    assert h == pytest.approx(1.1 * (max(hs) - min(hs)), rel=1e-8)
    tags = [el.tag.split("}")[-1] for el in root]
    assert tags.count("polyline") == 1 and tags.count("line") == 2 and tags.count("circle") == 3


def test_build_csv_to_file(capsys, tmp_path):
    path = tmp_path / "h.csv"
    code, out, _ = run(capsys, "conjugacy", "build", *LIN, "--samples", "11", "--out", str(path))
    assert code == 0 and out == ""
    assert len(rows(path.read_text())) == 11


def test_build_mismatch_is_structural(capsys):
    code, _, err = run(capsys, "conjugacy", "build", "--f", "x/2", "--g", "2*x",
                       "--domain-f", "-1,1", "--domain-g", "-1,1")
    assert code == 2 and "signature mismatch" in err


def test_build_flip_inventory_mismatch(capsys):
    code, _, err = run(capsys, "conjugacy", "build", "--f", "-1.04*x+x^3", "--g", "-x/2",
                       "--domain-f", "-0.5,0.5", "--domain-g", "-0.5,0.5", "--flip")
    assert code == 2 and "inventory" in err


def test_verify_pass(capsys):
    code, out, _ = run(capsys, "conjugacy", "verify", *LIN, "--anchor-a", "1", "--anchor-b", "1", "--tol", "1e-9")
    doc = json.loads(out)
    jsonschema.validate(doc, schemas.RESIDUAL)
    assert code == 0 and doc["pass"] is True and doc["monotone"] is True


def test_verify_tol_zero_fails(capsys):
    code, out, _ = run(capsys, "conjugacy", "verify", "--f", "x+0.25*x*(1-x)", "--g", "x+0.5*x*(1-x)",
                       "--domain-f", "0,1", "--domain-g", "0,1", "--tol", "0")
    doc = json.loads(out)
    assert doc["sup"] > 0
    assert code == 3 and doc["pass"] is False


def test_verify_all_excluded(capsys):
    code, _, err = run(capsys, "conjugacy", "verify", *LIN, "--exclusion", "2")
    assert code == 1 and "excluded" in err


# -- bifurcation ------------------------------------------------------------

@pytest.mark.parametrize(
    "family, kind",
    [("x+mu-x^2", "fold"), ("-x-mu*x+x^3", "flip"), ("x+mu*x-x^3", "pitchfork")],
)
def test_classify(capsys, family, kind):
    code, out, _ = run(capsys, "bifurcation", "classify", "--family", family,
                       "--x-window", "-0.75,0.75", "--mu-window", "-0.1,0.1")
    doc = json.loads(out)
    jsonschema.validate(doc, schemas.BIFURCATION)
    assert code == 0 and doc["type"] == kind and doc["sigma"] == 1


def test_classify_unclassified(capsys):
    code, out, err = run(capsys, "bifurcation", "classify", "--family", "x/2+mu")
    assert code == 2
    jsonschema.validate(json.loads(out), schemas.BIFURCATION)
    assert "mu=" in err


def test_classify_bad_n_mu(capsys):
    code, _, _ = run(capsys, "bifurcation", "classify", "--family", "x+mu-x^2", "--n-mu", "4")
    assert code == 1


def test_conjugate_fold_footer(capsys):
    code, out, err = run(capsys, "bifurcation", "conjugate", "--family", "x+mu-x^2+0.1*x^3", "--mu", "0.04")
    assert code == 0
    assert len(rows(out)) == 1001
    footer = [ln for ln in err.splitlines() if ln.startswith("verify:")]
    assert footer and footer[-1].endswith("pass")
    meta = json.loads([ln for ln in err.splitlines() if ln.startswith("{")][-1])
    jsonschema.validate(meta, schemas.BUILD_META)
    assert meta["normal_form"] == "x + mu - x^2"


def test_conjugate_forced_type_mismatch(capsys):
    code, _, err = run(capsys, "bifurcation", "conjugate", "--family", "x+mu-x^2", "--mu", "0.04",
                       "--normal-form", "pitchfork")
    assert code == 2


def test_conjugate_footer_failure(capsys):
    code, _, err = run(capsys, "bifurcation", "conjugate", "--family", "x+mu-x^2+0.1*x^3", "--mu", "0.04",
                       "--tol", "0")
    assert code == 3 and "FAIL" in err


# -- front end --------------------------------------------------------------

def test_help_lists_defaults(capsys):
    code, out, _ = run(capsys, "conjugacy", "verify", "--help")
    assert code == 0
    for text in ("(default: 10000)", "(default: 1e-11)", "(default: 0.0001)", "(default: 1e-09)"):
        assert text in out


def test_negative_values_after_flags(capsys):
    code, out, _ = run(capsys, "fixed-points", "--map", "x/2", "--domain", "-1,1", "--mu", "-0.5")
    assert code == 0


def test_module_entry_point_deterministic():
    argv = [sys.executable, "-m", "topoconj", "conjugacy", "build", *FLIP, "--samples", "51"]
    a = subprocess.run(argv, capture_output=True, text=True, check=True)
    b = subprocess.run(argv, capture_output=True, text=True, check=True)
    assert a.stdout == b.stdout and a.stdout.startswith("x,h\n")
    assert re.match(r"\{.*\}\n$", a.stderr)


def test_usage_error_exit_code():
    r = subprocess.run([sys.executable, "-m", "topoconj", "conjugacy", "build"], capture_output=True, text=True)
    assert r.returncode == 1
