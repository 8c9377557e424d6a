import math
import os
from pathlib import Path

import numpy as np
import pytest

import uvcplan as uv

DATA = Path(os.environ.get("UVCPLAN_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


@pytest.fixture(scope="module")
def robot():
    return uv.RobotModel()


@pytest.fixture(scope="module")
def model(robot):
    return uv.calibrate(uv.IrradianceModel(), robot)


def test_calibration(model, robot):
    assert model.calibrated
    lateral = robot.lamp_plane_offset() + 1.0
    assert uv.fluence_at(model, robot, 0.0, lateral, 0.83) == pytest.approx(400.0, rel=5e-3)
    assert uv.fluence_at(model, robot, 0.0, lateral, 0.83, left=False) == 0.0


def test_uncalibrated_model_is_rejected(robot):
    with pytest.raises(uv.ValidationError):
        uv.field(uv.IrradianceModel(), robot)


def test_field_array(model, robot):
    f = uv.field(model, robot, size_m=3.0, cell_size=0.2)
    v = f.values
    assert v.shape == (15, 15)
    assert f.excluded.sum() == 9
    assert np.allclose(v, v[::-1, :])
    assert f.max_value() > 1000.0


def test_kinetics():
    assert uv.predict(100.0, 0.5, 2) == pytest.approx(10.0)
    r = uv.fit([1000.0, 100.0, 10.0])
    assert r["lambda"] == pytest.approx(1.0)
    assert uv.aggregate_decrease([(12, 0), (11, 3)]) == pytest.approx(86.36, abs=0.01)
    assert uv.decrease_to_lambda(100.0) is None
    rows = uv.decrease_table(DATA / "table1_tbc.csv")
    assert [round(p, 2) for _, p in rows] == [100.00, 86.36, 84.65]
    with pytest.raises(ValueError):
        uv.fit([0.0, 0.0])


def test_contour_of_inverse_square():
    scene = uv.Scene.empty_room(5.0, 5.0, 0.1)
    model = uv.calibrate(uv.IrradianceModel(), scene.robot)
    f = uv.simulate_luminosity(model, scene.robot)
    assert f.max_value() == pytest.approx(1.0)
    lines = uv.extract_contour(f, 0.54)
    assert len(lines) >= 1
    assert all(len(pl) > 3 for pl in lines)


def test_dose_and_survival(model, robot):
    scene = uv.Scene.empty_room(4.0, 3.0, 0.2)
    traj = uv.build_trajectory([(0.6, 1.5), (3.4, 1.5)])
    assert traj.duration() == pytest.approx(2.8 / 0.14)
    out = uv.accumulate(scene, traj, model)
    d = out["dose"].values
    assert d.shape == (15, 20)
    assert out["lamp_energy_wh"] == pytest.approx(240.0 * traj.duration() / 3600.0)
    d90 = uv.calibrate_d90("multipass", model, robot)
    s = uv.survival(out["dose"], d90).values
    ok = ~out["dose"].excluded
    assert np.allclose(s[ok], 10.0 ** (-d[ok] / d90), rtol=1e-12, atol=0.0)
    assert math.isclose(s[ok].max(), 10.0 ** (-d[ok].min() / d90), rel_tol=1e-12)


def test_plan_small_room(model, robot):
    scene = uv.Scene.empty_room(2.4, 3.2, 0.2)
    d90 = uv.calibrate_d90("multipass", model, robot)
    p = uv.plan_coverage(scene, model, d90, target=0.01)
    assert p["complete"]
    assert p["passes"] >= 2
    assert p["coverage_by_pass"] == sorted(p["coverage_by_pass"])
    assert p["trajectory"].duration() == pytest.approx(p["total_time_s"])


def test_errors():
    with pytest.raises(uv.ParseError):
        uv.parse_scene("cell_size abc\n")
    with pytest.raises(OSError):
        uv.load_scene("/nonexistent/room.scene")
