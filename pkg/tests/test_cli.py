import io
import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

from fracgeom import kernels
from fracgeom.cli import run

GOLDEN = Path(__file__).parent / "golden"
SMALL = ["--samples", "4000", "--replicates", "4"]

CASES = {
    "per_halfline": ["per", "--set", "halfline", "--omega", "-1", "1"],
    "per_disk": ["per", "--set", "disk", "--omega", "-2", "-2", "2", "2"] + SMALL,
    "alpha_quarter": ["alpha", "--set", "quarter", "--point", "0", "0", "--single", "--s", "0.25"],
    "alpha_halfplane": ["alpha", "--set", "halfplane", "--point", "0", "0"] + SMALL,
    "curv_disk": ["curv", "--set", "disk", "--nodes", "32"],
    "curv_interval": ["curv", "--set", "interval", "--s", "0.3"],
    "koch_vertices": ["koch", "--level", "2"],
    "koch_dimf": ["koch", "--dimf", "--levels", "4", "--s-grid", "0.5", "0.85",
                  "--resolution", "0.2"] + SMALL,
    "dimf_koch": ["dimf", "--level", "4", "--offsets", "2", "--b", "4", "--lam", "3"],
    "minimize_step": ["minimize", "--phi", "step", "--phi-value", "3", "--N", "16"],
    "asym_perimeter": ["asym", "--set", "halfline", "--kind", "perimeter", "--omega", "-1", "1"],
    "asym_curv": ["asym", "--set", "disk", "--regime", "s->0", "--nodes", "16"],
    "asym_sign": ["asym", "--demo", "sign-change", "--s-seq", "0.1", "0.5", "--nodes", "16"],
    "rearrange": ["rearrange", "--grid", "8"] + SMALL,
}


def _run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def _numbers(text):
    vals = []
    for tok in text.replace(",", " ").replace("\n", " ").split():
        try:
            vals.append(float(tok))
        except ValueError:
            vals.append(tok)
    return vals


def _same(a, b):
    na, nb = _numbers(a), _numbers(b)
    if len(na) != len(nb):
        return False
    for x, y in zip(na, nb):
        if isinstance(x, float) and isinstance(y, float):
            if not (math.isclose(x, y, rel_tol=1e-9, abs_tol=1e-11) or (math.isnan(x) and math.isnan(y))):
                return False
        elif x != y:
            return False
    return True


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden(name, golden_regen):
    code, out, err = _run(CASES[name])
    assert code == 0, err
    summary = json.loads(err.strip().splitlines()[-1])
    text = out + "# " + json.dumps(summary, sort_keys=True) + "\n"
    path = GOLDEN / f"{name}.txt"
    if golden_regen or not path.exists():
        path.write_text(text, encoding="utf-8", newline="\n")
    assert text == path.read_text(encoding="utf-8")
    assert "\r" not in out


def test_json_format():
    code, out, _ = _run(CASES["per_halfline"] + ["--format", "json"])
    assert code == 0
    d = json.loads(out)
    assert d["total"] == pytest.approx(4 * math.sqrt(2), rel=1e-11)
    assert list(d) == sorted(d)


def test_deterministic_and_thread_independent():
    argv = CASES["per_disk"]
    a = _run(argv + ["--threads", "1"])
    b = _run(argv + ["--threads", "1"])
    c = _run(argv + ["--threads", "2"])
    assert a == b
    assert a[1] == c[1]


def test_backend_independent():
    if "compiled" not in kernels.available():
        pytest.skip("compiled kernels not built")
    argv = CASES["per_disk"]
    ref = _run(argv)
    kernels.use_backend("numpy")
    try:
        alt = _run(argv)
    finally:
        kernels.use_backend("compiled")
    assert _same(ref[1], alt[1])


def test_out_file(tmp_path):
    p = tmp_path / "o.csv"
    code, out, _ = _run(CASES["per_halfline"] + ["--out", str(p)])
    assert code == 0 and out == ""
    assert p.read_text().startswith("s,local,nonlocal,total")


@pytest.mark.parametrize("argv", [
    ["per", "--set", "nope", "--omega", "-1", "1"],
    ["per", "--set", "halfline", "--omega", "-1"],
    ["per", "--set", "halfline", "--omega", "-1", "1", "--s", "1.5"],
    ["per", "--set", "{bad json", "--omega", "-1", "1"],
    ["curv", "--set", "disk", "--point", "0.5", "0"],
    ["frobnicate"],
    ["per", "--set", "halfline", "--omega", "-1", "1", "--replicates", "1"],
])
def test_validation_exit_code(argv):
    code, out, err = _run(argv)
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["kind"] == "validation"


def test_numeric_exit_code():
    code, _, err = _run(["minimize", "--phi", "step", "--phi-value", "20", "--N", "16",
                         "--max-iter", "1"])
    assert code == 3
    assert json.loads(err.strip())["kind"] == "numeric"


def test_help():
    code, _, _ = _run(["--help"])
    assert code == 0
    code, _, _ = _run(["minimize", "--help"])
    assert code == 0


def test_minimize_config(tmp_path):
    cfg = {"omega": [-1, 1], "N": 16, "s": 0.5,
           "collar": {"values": {"left": [0.0] * 32, "right": [1.0] * 32}, "tail": "bounded"},
           "M": 1.0, "obstacle": [None] * 6 + [0.6] * 4 + [None] * 6}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    code, out, err = _run(["minimize", "--config", str(p)])
    assert code == 0, err
    u = np.array([list(map(float, l.split(","))) for l in out.splitlines()[1:]])[:, 1]
    assert np.all(u[6:10] >= 0.6 - 1e-12)
