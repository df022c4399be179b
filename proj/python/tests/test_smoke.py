import json
import os
from pathlib import Path

import numpy as np
import pytest

import featmap

SCENARIOS = Path(os.environ.get("FEATMAP_SCENARIO_DIR", Path(__file__).resolve().parents[2] / "scenarios"))


def test_version_and_names():
    assert featmap.__version__
    assert featmap.bench_names() == ["hshape", "threebar", "localmin"]
    assert "quick" in featmap.bench_presets("localmin")


def test_heaviside_shape_and_limits():
    phi = np.linspace(-2.0, 2.0, 9).reshape(3, 3)
    h = featmap.heaviside("poly3", phi, half_width=1.0)
    assert h.shape == (3, 3)
    assert h[0, 0] == pytest.approx(1e-6)
    assert h[-1, -1] == 1.0
    assert np.all(np.diff(h.ravel()) >= 0)
    with pytest.raises(ValueError):
        featmap.heaviside("blobby", phi)


def test_circle_density():
    rho = featmap.density(SCENARIOS / "circle_map.yaml")
    assert rho.shape == (32, 32)
    assert rho[16, 16] == 1.0
    assert rho.min() > 0.0


def test_evaluate_two_bars():
    r = featmap.evaluate(SCENARIOS / "two_bar_verify.yaml")
    assert r["compliance"] > 0
    assert len(r["compliance_grad"]) == len(r["design"]) == len(r["labels"])
    moved = list(r["design"])
    moved[0] += 0.25
    r2 = featmap.evaluate(SCENARIOS / "two_bar_verify.yaml", design=moved, gradients=False)
    assert r2["compliance"] != r["compliance"]
    assert "compliance_grad" not in r2
    with pytest.raises(ValueError):
        featmap.evaluate(SCENARIOS / "two_bar_verify.yaml", design=[1.0])


def test_run_writes_outputs(tmp_path):
    code, log, err = featmap.run(SCENARIOS / "circle_map.yaml", out=tmp_path)
    assert code == 0, err
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["exit_code"] == 0
    assert (tmp_path / "density.pgm").read_bytes().startswith(b"P5\n32 32\n255\n")


def test_exit_codes(tmp_path):
    code, _, err = featmap.run(SCENARIOS / "circle_map.yaml", out=tmp_path / "a",
                               overrides=["model.boundary.kind=blobby"])
    assert code == 2
    assert "model.boundary.kind" in err
    code, _, _ = featmap.run(SCENARIOS / "two_bar_verify.yaml", out=tmp_path / "b",
                             overrides=["model.boundary.kind=exact"], study="verify")
    assert code == 4
    code, _, _ = featmap.bench("localmin", preset="nope", out=tmp_path / "c")
    assert code == 2
