import json
import math

import numpy as np
import pytest

import heatlab


def test_version():
    assert heatlab.__version__.count(".") == 2


def test_grid_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    values = rng.normal(25.0, 4.0, size=(7, 11)).astype(np.float32)
    values[2, 3] = heatlab.NODATA
    spec = {"origin_x": 500000.0, "origin_y": 5000000.0, "pixel_size": 30.0, "epsg": 32635}
    path = tmp_path / "t.grid"
    heatlab.write_grid(path, values, spec, band="lst", timestamp="2020-07-01T10:00:00Z")
    back, meta = heatlab.read_grid(path)
    assert back.dtype == np.float32
    assert back.tobytes() == values.tobytes()
    assert meta["width"] == 11 and meta["height"] == 7
    assert meta["band"] == "lst"
    raw = np.fromfile(path, dtype="<f4").reshape(7, 11)
    assert raw.tobytes() == values.tobytes()


@pytest.mark.parametrize("deflate", [False, True])
def test_geotiff_round_trip(tmp_path, deflate):
    values = np.arange(48, dtype=np.float32).reshape(6, 8) / 7.0
    spec = {"origin_x": 100.0, "origin_y": 900.0, "pixel_size": 10.0, "epsg": 32635}
    path = tmp_path / "t.tif"
    heatlab.export_geotiff(path, values, spec, deflate=deflate)
    back, meta = heatlab.import_geotiff(path)
    assert np.array_equal(back, values)
    assert meta["origin_x"] == 100.0 and meta["pixel_size"] == 10.0 and meta["epsg"] == 32635


def test_distance_against_brute_force():
    rng = np.random.default_rng(11)
    mask = rng.random((12, 9)) < 0.3
    got = heatlab.euclidean_distance(mask, pixel_size=30.0, side="outside")
    rows, cols = np.nonzero(mask)
    for r in range(mask.shape[0]):
        for c in range(mask.shape[1]):
            if mask[r, c]:
                assert math.isnan(got[r, c])
            else:
                want = 30.0 * np.min(np.hypot(rows - r, cols - c))
                assert abs(got[r, c] - want) <= 1e-9


def test_metrics_and_splits():
    m = heatlab.metrics([1.0, 2.0, 4.0], [1.0, 1.0, 1.0])
    assert m["mae"] == pytest.approx(4.0 / 3.0)
    assert m["mbe"] == pytest.approx(4.0 / 3.0)
    assert m["rmse"] ** 2 == pytest.approx(m["mse"])
    plan = heatlab.split_random(100)
    assert (len(plan["train"]), len(plan["val"]), len(plan["test"])) == (72, 18, 10)
    keys = [float(k) for k in range(1, 21)]
    heat = heatlab.split_high_heat(keys)
    assert sorted(heat["test"]) == [18, 19]
    assert heat["threshold"] == 18.0
    with pytest.raises(heatlab.HeatlabError, match="insufficient_data"):
        heatlab.split_random(5)


def test_cli_and_service(tmp_path):
    ws = str(tmp_path / "tiny")
    rc, _, err = heatlab.run_cli(["synth", "-w", ws, "--city-id", "tiny", "--size", "64", "--scenes", "4"])
    assert rc == 0, err
    assert heatlab.run_cli(["ingest", "-w", ws])[0] == 0
    assert heatlab.run_cli(["analyze", "cooling", "-w", ws])[0] == 0
    assert heatlab.run_cli(["nonsense"])[0] == 2

    svc = heatlab.Service(str(tmp_path))
    assert svc.city_ids() == ["tiny"]
    status, doc = heatlab.api_json(svc, "/api/cities")
    assert status == 200 and doc[0]["city_id"] == "tiny"
    status, doc = heatlab.api_json(svc, "/api/cities/tiny/profiles", kind="spillover", variant="oracle")
    assert status == 200
    assert doc["variants"][0]["metrics"]["mae"] <= 0.05
    status, ctype, body = svc.request("GET", "/api/cities/tiny/layers/lst")
    assert status == 200 and ctype == "image/png" and body[:4] == b"\x89PNG"
    status, doc = heatlab.api_json(svc, "/api/cities/tiny/layers/lst", scene="missing")
    assert status == 404 and doc["error"]["code"] == "scene_not_found"
    json.dumps(doc)
