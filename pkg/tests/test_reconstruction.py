import os

import numpy as np
import pytest

from patterns.scanline import gen_scanlines
from reconstruction.depth import DepthMap, decode_binary, reconstruct_depth, triangulate
from reconstruction.pipeline import (
    reconstruct_hyperspectral,
    save_depth_map,
    save_hyperspectral,
)
from reconstruction.solver import regularized_gram, solve_pixel, solve_quadratic
from reconstruction.sweeps import DecodingSetup, binary_patterns, noise_sweep, translation_stage_sweep
from reconstruction.system import SystemMatrix, build_system
from reconstruction.weights import compute_kappa, zero_order_only
from simulation.renderer import render_stack
from utils.error_types import DomainError, PixelFlag
from utils.metrics import depth_error, pixel_rmse, spectral_rmse


@pytest.fixture(scope="module")
def binary_stack(desk, responses, eta, tiny_scene):
    return render_stack(binary_patterns((640, 480)), tiny_scene, desk, None, responses, eta)


@pytest.fixture(scope="module")
def scanline_stack(desk, responses, eta, tiny_scene, small_model):
    return render_stack(gen_scanlines((640, 480), 5, 2), tiny_scene, desk, small_model, responses, eta)


@pytest.fixture(scope="module")
def true_depth(tiny_scene):
    return DepthMap(np.asarray(tiny_scene.depth), np.zeros(tiny_scene.shape, dtype=np.uint8))


def test_triangulate_desk_principal_ray(desk):
    assert triangulate((31.5, 31.5), 570.0, desk) == pytest.approx(800.0)
    # 945 would put the surface at 200 mm, outside the working range
    assert np.isnan(triangulate((31.5, 31.5), 945.0, desk))


def test_binary_decode_is_exact_at_800mm(binary_stack, desk):
    codes = decode_binary(binary_stack)
    assert codes.valid.all()
    cols = np.arange(16)[None, :].repeat(16, axis=0)
    rows = np.arange(16)[:, None].repeat(16, axis=1)
    np.testing.assert_array_equal(codes.col, 4 * cols + 444)
    np.testing.assert_array_equal(codes.row, 4 * rows + 114)

    depth_map = reconstruct_depth(binary_stack, desk)
    np.testing.assert_allclose(depth_map.depth, 800.0, atol=1e-6)
    assert np.all(depth_map.flags == PixelFlag.OK)


def test_absolute_threshold_without_references(binary_stack):
    codes_only = binary_stack.subset("binary")
    codes = decode_binary(codes_only, tau=0.3, mode="relative")
    assert np.isnan(codes.contrast).all()
    assert codes.valid.any()


def test_decode_rejects_unknown_mode(binary_stack):
    with pytest.raises(DomainError):
        decode_binary(binary_stack, mode="median")


def test_dispersive_binary_decode_stays_close(desk, responses, eta, tiny_scene, small_model):
    stack = render_stack(binary_patterns((640, 480)), tiny_scene, desk, small_model, responses, eta)
    depth_map = reconstruct_depth(stack, desk)
    valid = depth_map.valid
    assert valid.mean() > 0.9
    assert np.median(np.abs(depth_map.depth[valid] - 800.0)) < 1.0


def test_solver_matches_closed_form(rng):
    n, N = 4, 6
    A = rng.normal(size=(n, 10, N))
    Q = np.einsum("nri,nrj->nij", A, A) + np.eye(N)
    x_true = rng.uniform(0.2, 1.0, size=(n, N))
    kappa = 0.01
    Qt = regularized_gram(Q, kappa)
    b = np.einsum("nij,nj->ni", Qt, x_true)
    result = solve_quadratic(Q, b, kappa_lambda=kappa)
    np.testing.assert_allclose(result.values, x_true, atol=1e-6)
    assert not result.flags.any()


def test_solver_enforces_nonnegativity():
    result = solve_quadratic(np.eye(2)[None], np.array([[-1.0, 2.0]]), kappa_lambda=0.0)
    np.testing.assert_allclose(result.values[0], [0.0, 2.0], atol=1e-9)
    assert result.objective[0] == pytest.approx(-4.0)


def test_solver_rejects_negative_smoothness():
    with pytest.raises(DomainError):
        solve_quadratic(np.eye(2)[None], np.ones((1, 2)), kappa_lambda=-1.0)


def test_solve_pixel_empty_system(grid):
    empty = SystemMatrix({0: (np.zeros((0, grid.count)), np.zeros(0))})
    with pytest.raises(DomainError):
        solve_pixel(empty, grid=grid)


def test_kappa_weights_partition_unity():
    incomplete = np.zeros((20, 20), dtype=bool)
    incomplete[10, 10] = True
    kappa = compute_kappa(incomplete, sigma=2.0, interior=0.9)
    np.testing.assert_allclose(kappa.first + kappa.zero, 1.0)
    assert kappa.first[0, 0] == pytest.approx(0.9)
    assert kappa.first[10, 10] < 0.9
    ablation = zero_order_only((3, 3))
    assert np.all(ablation.first == 0.0)
    with pytest.raises(DomainError):
        compute_kappa(incomplete, interior=1.5)


def test_narrowband_rows_have_single_column(scanline_stack, desk, small_model, responses, eta):
    system = build_system((8, 8), 800.0, scanline_stack, desk, small_model, responses, eta, "narrowband")
    assert not system.empty
    for m in system.orders:
        if m == 0:
            continue
        A, I = system.blocks[m]
        assert np.all(np.count_nonzero(A, axis=1) <= 1)
        assert A.shape[0] == I.shape[0]


def test_exact_system_reproduces_observations(scanline_stack, desk, small_model, responses, eta, tiny_scene):
    system = build_system((8, 8), 800.0, scanline_stack, desk, small_model, responses, eta, "exact")
    H = tiny_scene.cube[8, 8]
    for m, (A, I) in system.blocks.items():
        if A.shape[0]:
            np.testing.assert_allclose(A @ H, I, rtol=1e-6, atol=1e-9)


def test_build_system_rejects_bad_depth(scanline_stack, desk, small_model, responses, eta):
    with pytest.raises(DomainError):
        build_system((8, 8), np.nan, scanline_stack, desk, small_model, responses, eta)


def test_hyperspectral_needs_scanline_stack(binary_stack, true_depth, desk, small_model, responses, eta):
    with pytest.raises(DomainError):
        reconstruct_hyperspectral(binary_stack, true_depth, desk, small_model, responses, eta)


def test_zero_order_ablation_flags_no_orders(scanline_stack, true_depth, desk, small_model, responses, eta):
    image = reconstruct_hyperspectral(scanline_stack, true_depth, desk, small_model, responses, eta,
                                      zero_order=True)
    solved = image.solved
    assert solved.all()
    assert np.all(image.flags[solved] & PixelFlag.NO_ORDERS)
    assert np.all(image.orders_used[solved] == 1)


def test_invalid_depth_is_unsolvable(scanline_stack, desk, small_model, responses, eta, tiny_scene):
    depth = np.array(tiny_scene.depth)
    depth[0, 0] = np.nan
    image = reconstruct_hyperspectral(scanline_stack, DepthMap(depth, np.zeros(depth.shape, np.uint8)),
                                      desk, small_model, responses, eta, max_iterations=50)
    assert image.flags[0, 0] & PixelFlag.INVALID_DEPTH
    assert image.flags[0, 0] & PixelFlag.UNSOLVABLE
    assert np.all(image.cube[0, 0] == 0.0)


@pytest.mark.slow
def test_noiseless_round_trip_meets_accuracy(scanline_stack, desk, small_model, responses, eta, tiny_scene,
                                             tmp_path):
    binary = render_stack(binary_patterns((640, 480)), tiny_scene, desk, small_model, responses, eta)
    depth_map = reconstruct_depth(binary, desk)
    assert depth_error(depth_map.depth, tiny_scene.depth).rmse_mm <= 0.1

    full = reconstruct_hyperspectral(scanline_stack, depth_map, desk, small_model, responses, eta)
    zero = reconstruct_hyperspectral(scanline_stack, depth_map, desk, small_model, responses, eta,
                                     zero_order=True)
    mask = full.solved & zero.solved
    assert spectral_rmse(full.cube, tiny_scene.cube, mask) < spectral_rmse(zero.cube, tiny_scene.cube, mask)

    # within 2% of each pixel's peak reflectance on at least 95% of the decoded pixels
    peak = tiny_scene.cube.max(axis=-1)
    with np.errstate(invalid="ignore"):
        within = full.solved & (pixel_rmse(full.cube, tiny_scene.cube) <= 0.02 * peak)
    assert within[depth_map.valid].mean() >= 0.95

    files = {**save_depth_map(depth_map, str(tmp_path)), **save_hyperspectral(full, str(tmp_path))}
    for name in files.values():
        assert os.path.exists(tmp_path / name)


@pytest.mark.slow
def test_noise_sweep_compares_both_rigs(desk, responses, eta, small_model):
    setup = DecodingSetup(small_model, responses, eta)
    table, summary = noise_sweep(desk, setup, [0.0, 0.05], [0], 800.0, (8, 8))
    assert set(summary["rig"]) == {"dispersive", "conventional"}
    assert len(table) == 4
    clean = summary[summary["sigma"] == 0.0]
    assert np.all(clean["valid_fraction"] > 0.9)


@pytest.mark.slow
def test_translation_stage_steps_along_axis(desk, responses, eta, small_model):
    setup = DecodingSetup(small_model, responses, eta)
    table, summary = translation_stage_sweep(desk, setup, [0.0], positions=2, shape=(8, 8))
    assert table["depth_mm"].tolist() == [650.0, 660.0]
    assert len(summary) == 1
    assert summary["median_abs_mm"].iloc[0] < 1.0
