import numpy as np
import pytest

from optics.grating import GratingModel, diffract
from optics.grating_solver import grating_residual, solve_grating_point, solve_grating_points
from optics.pinhole import PinholeModel, project, unproject
from optics.rig import Rig, load_rig, propagation_distance, resolve_rig, save_rig
from utils.error_types import (
    ConfigError,
    DomainError,
    EvanescentOrderError,
    ProjectionError,
)


def test_unproject_then_project_returns_pixel(desk):
    point = unproject((10.0, 50.0), 700.0, desk.camera)
    np.testing.assert_allclose(project(point, desk.camera), (10.0, 50.0), atol=1e-9)
    assert point[2] == pytest.approx(700.0)


def test_unproject_rejects_nonpositive_depth(desk):
    with pytest.raises(DomainError):
        unproject((0.0, 0.0), 0.0, desk.camera)


def test_project_behind_camera(desk):
    with pytest.raises(ProjectionError):
        project((0.0, 0.0, -10.0), desk.camera)


def test_zero_order_column_on_desk_rig(desk):
    # principal ray at 800 mm lands 100 mm right of the projector axis
    point = unproject((31.5, 31.5), 800.0, desk.camera)
    q = project(point, desk.projector)
    assert q[0] == pytest.approx(445.0 + 1000.0 * 100.0 / 800.0)
    assert q[1] == pytest.approx(240.0)


def test_distortion_round_trip():
    model = PinholeModel(fx=300.0, fy=300.0, cx=32.0, cy=24.0, width=64, height=48,
                         distortion=(-0.1, 0.02))
    pixels = np.array([[0.0, 0.0], [60.0, 40.0], [32.0, 24.0]])
    points = model.unproject_many(pixels, np.full(3, 500.0))
    np.testing.assert_allclose(model.project_many(points), pixels, atol=1e-6)


def test_pinhole_rejects_bad_rotation():
    with pytest.raises(DomainError):
        PinholeModel(fx=1.0, fy=1.0, cx=0.0, cy=0.0, width=2, height=2,
                     rotation=np.diag([1.0, 2.0, 1.0]))


def test_diffract_stays_unit():
    v = np.array([0.1, -0.05, 0.0])
    v[2] = np.sqrt(1 - v[0] ** 2 - v[1] ** 2)
    d = diffract(v, 1, 550.0, 4e-4)
    assert np.linalg.norm(d) == pytest.approx(1.0)
    assert d[0] == pytest.approx(0.1 - 0.22)
    assert d[1] == pytest.approx(-0.05)


def test_diffract_zero_order_is_identity():
    v = np.array([0.0, 0.6, 0.8])
    np.testing.assert_allclose(diffract(v, 0, 600.0, 4e-4), v)


def test_diffract_evanescent():
    with pytest.raises(EvanescentOrderError):
        diffract(np.array([0.0, 0.0, 1.0]), 1, 660.0, 2e-3)


def test_diffract_rejects_non_unit():
    with pytest.raises(DomainError):
        diffract(np.array([0.0, 0.0, 2.0]), 1, 550.0, 4e-4)


def test_grating_rejects_second_order():
    with pytest.raises(DomainError):
        GratingModel(orders=(-2, 0, 2))


def test_grating_point_residual_small(desk):
    point = unproject((20.0, 40.0), 800.0, desk.camera)
    r, q = solve_grating_point(point, desk, 1, 550.0)
    assert grating_residual(r, point, desk, 1, 550.0)[0] < 1e-8
    assert np.all(np.isfinite(q))
    # r lies on the grating plane
    assert desk.projector.to_model(r)[2] == pytest.approx(desk.grating.offset_mm)


def test_first_orders_mirror_about_projector_axis(desk):
    # on the projector axis the two first orders land symmetrically
    point = desk.projector.to_world(np.array([0.0, 0.0, 800.0]))
    _, q_plus = solve_grating_point(point, desk, 1, 600.0)
    _, q_minus = solve_grating_point(point, desk, -1, 600.0)
    cx = desk.projector.cx
    assert q_plus[0] - cx == pytest.approx(-(q_minus[0] - cx), abs=1e-6)
    assert q_plus[1] == pytest.approx(desk.projector.cy, abs=1e-6)


def test_first_order_shift_grows_with_wavelength(desk):
    point = unproject((31.5, 31.5), 800.0, desk.camera)
    solution = solve_grating_points(np.repeat(point[None], 3, axis=0), desk, 1,
                                    np.array([450.0, 550.0, 650.0]))
    assert solution.valid.all()
    zero = project(point, desk.projector)[0]
    shifts = np.abs(solution.q[:, 0] - zero)
    assert np.all(np.diff(shifts) > 0)


def test_solver_flags_points_in_front_of_grating(desk):
    point = desk.projector.to_world(np.array([0.0, 0.0, 5.0]))
    solution = solve_grating_points(point[None], desk, 1, 550.0)
    assert not solution.valid[0]
    assert np.isnan(solution.q[0]).all()
    with pytest.raises(EvanescentOrderError):
        solve_grating_point(point, desk, 1, 550.0)


def test_solver_rejects_inactive_order(desk):
    point = unproject((31.5, 31.5), 800.0, desk.camera)
    with pytest.raises(DomainError):
        solve_grating_points(point[None], desk.conventional(), 1, 550.0)


def test_propagation_distance(desk):
    d = propagation_distance(np.array([31.5, 31.5]), 800.0, desk)
    assert d == pytest.approx(np.hypot(100.0, 800.0))


def test_rig_baseline_and_conventional(desk):
    assert desk.baseline == pytest.approx(100.0)
    assert desk.conventional().grating.orders == (0,)
    assert desk.with_orders([1]).grating.orders == (0, 1)


def test_rig_file_round_trip(desk, tmp_path):
    path = tmp_path / "rig.json"
    save_rig(desk, str(path))
    loaded = load_rig(str(path))
    assert loaded.name == "desk"
    assert loaded.grating.groove_density == pytest.approx(desk.grating.groove_density)
    np.testing.assert_allclose(loaded.projector.translation, desk.projector.translation)


def test_rig_rejects_coincident_centers(desk):
    with pytest.raises(DomainError):
        Rig(desk.camera, desk.camera, desk.grating)


def test_resolve_rig_builtin_and_unknown():
    assert resolve_rig("builtin:prototype").camera.width == 384
    with pytest.raises(ConfigError):
        resolve_rig("builtin:nope")
