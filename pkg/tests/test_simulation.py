import numpy as np
import pytest

from calibration.samples import trace_peaks
from correspondence.model import valid_orders
from optics.rig import propagation_distance
from patterns.pattern_set import Pattern, PatternTag, reference_set
from patterns.scanline import gen_scanlines
from reconstruction.sweeps import binary_patterns
from simulation.demo_scenes import (
    bandpass_scene,
    boxcar,
    build_demo_scene,
    colorchecker_spectra,
    random_plane_scene,
    two_box_scene,
)
from simulation.geometry import PixelGeometry
from simulation.hdr import HDRSettings, hat_weight, merge_hdr, simulate_hdr_pair
from simulation.noise import add_noise
from simulation.renderer import prepare_illumination, render, render_stack, spectral_illumination
from simulation.scene import Scene, load_scene, save_scene
from simulation.stack import CaptureStack, load_stack, save_stack
from spectra.grid import WavelengthGrid
from utils.error_types import ConfigError, DomainError, PixelFlag

FINE = WavelengthGrid(430.0, 660.0, 1.0)


def constant_stack(value, count=2, shape=(4, 5)):
    frames = np.full((count,) + shape + (3,), float(value))
    tags = tuple(PatternTag("scanline", i) for i in range(count))
    return CaptureStack(frames, tags, "scanline")


def test_noise_is_deterministic_per_seed():
    stack = constant_stack(0.5)
    a = add_noise(stack, 0.01, seed=7)
    b = add_noise(stack, 0.01, seed=7)
    c = add_noise(stack, 0.01, seed=8)
    np.testing.assert_array_equal(a.frames, b.frames)
    assert not np.array_equal(a.frames, c.frames)
    assert a.metadata["sigma"] == 0.01
    assert a.metadata["seed"] == 7


def test_noise_clamps_at_zero():
    noisy = add_noise(constant_stack(0.0), 0.1, seed=1)
    assert noisy.frames.min() == 0.0
    assert noisy.frames.max() > 0.0


def test_zero_noise_copies():
    stack = constant_stack(0.3)
    out = add_noise(stack, 0.0, seed=3)
    np.testing.assert_array_equal(out.frames, stack.frames)
    with pytest.raises(DomainError):
        add_noise(stack, -1.0)


def test_noise_frames_independent_of_stack_length():
    short = add_noise(constant_stack(0.5, count=2), 0.02, seed=11)
    long = add_noise(constant_stack(0.5, count=5), 0.02, seed=11)
    np.testing.assert_array_equal(short.frames, long.frames[:2])


def test_hat_weight():
    w = hat_weight(np.array([0.0, 0.025, 0.5, 0.975, 1.0]))
    np.testing.assert_allclose(w, [0.0, 0.5, 1.0, 0.5, 0.0])


def test_hdr_merge_recovers_radiance():
    radiance = np.array([0.5, 3.0])
    frames = np.zeros((1, 2, 1, 3))
    frames[0, :, 0, :] = radiance[:, None]
    stack = CaptureStack(frames, (PatternTag("scanline", 0),), "scanline")
    low, high = simulate_hdr_pair(stack, HDRSettings(), sigma=0.0)
    assert high.frames[0, 1, 0, 0] == 1.0
    merged = merge_hdr(low, high)
    np.testing.assert_allclose(merged.frames[0, :, 0, 0], radiance, rtol=1e-12)
    assert merged.metadata["hdr_merged"]
    assert not np.any(merged.flags & PixelFlag.SATURATED)


def test_hdr_flags_double_saturation():
    stack = CaptureStack(np.full((1, 1, 2, 3), 10.0), (PatternTag("scanline", 0),), "scanline")
    merged = merge_hdr(*simulate_hdr_pair(stack, HDRSettings()))
    assert np.all(merged.flags & PixelFlag.SATURATED)


def test_hdr_settings_validation():
    with pytest.raises(DomainError):
        HDRSettings(low=(0.0, 0.2))
    settings = HDRSettings.from_dict({"gain": 0.5})
    assert settings.scale((2.0, 0.5)) == pytest.approx(0.5)


def test_scene_rejects_bad_reflectance(grid):
    with pytest.raises(DomainError):
        Scene(np.full((2, 2), 800.0), np.full((2, 2, grid.count), 2.0), grid)
    with pytest.raises(DomainError):
        Scene(np.full((2, 2), -1.0), np.zeros((2, 2, grid.count)), grid)


def test_scene_round_trip(tmp_path, tiny_scene):
    path = save_scene(tiny_scene, str(tmp_path))
    loaded = load_scene(path)
    assert loaded.name == "colorchecker"
    assert loaded.grid == tiny_scene.grid
    np.testing.assert_allclose(loaded.depth, tiny_scene.depth)
    np.testing.assert_allclose(loaded.cube, tiny_scene.cube, atol=1e-6)
    np.testing.assert_array_equal(loaded.labels, tiny_scene.labels)
    assert list(loaded.patches) == list(tiny_scene.patches)


def test_scene_undefined_depth_survives_round_trip(tmp_path, grid):
    depth = np.full((3, 3), 700.0)
    depth[1, 1] = np.nan
    scene = Scene(depth, np.full((3, 3, grid.count), 0.5), grid)
    loaded = load_scene(save_scene(scene, str(tmp_path)))
    assert not loaded.valid[1, 1]
    assert loaded.valid.sum() == 8


def test_demo_scenes(grid):
    spectra = colorchecker_spectra(grid)
    assert len(spectra) == 24
    np.testing.assert_allclose(spectra["patch_19"], 0.9)
    edges = boxcar(FINE, 550.0)
    assert edges[FINE.index_of(545.0)] == 0.5
    two = two_box_scene((8, 8), grid=grid)
    assert two.depth[0, 0] == 800.0 and two.depth[0, 7] == 1000.0
    band = bandpass_scene((30, 30), grid=grid)
    assert (band.labels == -1).any() and band.labels.max() == 8
    with pytest.raises(ConfigError):
        build_demo_scene("nope")


def test_random_plane_is_seeded(grid):
    a = random_plane_scene((4, 4), seed=5, grid=grid)
    b = random_plane_scene((4, 4), seed=5, grid=grid)
    np.testing.assert_array_equal(a.cube, b.cube)


def test_zero_order_render_matches_formation_model(desk, responses, eta, tiny_scene):
    white = Pattern.constant(640, 480, 1.0, PatternTag("reference", 1))
    image = render(white, tiny_scene, desk, None, responses, eta, exposure_scale=2.0)
    d = propagation_distance(np.array([3.0, 5.0]), 800.0, desk)
    H = tiny_scene.cube[5, 3]
    expected = 2.0 * responses.cam_matrix @ (H / d ** 2 * eta.values(0) * responses.proj_total)
    np.testing.assert_allclose(image[5, 3], expected, rtol=1e-9)


def test_black_pattern_renders_black(desk, responses, eta, tiny_scene, small_model):
    black = Pattern.constant(640, 480, 0.0, PatternTag("reference", 0))
    image = render(black, tiny_scene, desk, small_model, responses, eta)
    assert np.all(image == 0.0)


def test_auto_exposure_normalizes_white(desk, responses, eta, grid):
    scene = Scene(np.full((8, 8), 800.0), np.ones((8, 8, grid.count)), grid)
    stack = render_stack(reference_set(640, 480), scene, desk, None, responses, eta)
    white = stack.reference(white=True)
    assert 0.9 < white.max() < 1.1
    assert stack.metadata["exposure_scale"] > 0


def test_scanline_stack_sees_first_orders(desk, responses, eta, tiny_scene, small_model):
    patterns = gen_scanlines((640, 480), 5, 2)
    illumination = prepare_illumination(tiny_scene, desk, small_model, responses, eta)
    assert illumination.geometry.orders == (-1, 1)
    stack = render_stack(patterns, tiny_scene, desk, small_model, responses, eta,
                         illumination=illumination)
    assert len(stack) == 318
    # each pixel lights up in several scanline frames: one zero order plus dispersed first orders
    lit = (stack.frames.sum(axis=-1) > 1e-6).sum(axis=0)
    assert lit[8, 8] > 3


def single_pixel_geometry(grid, plus_cols):
    return PixelGeometry(np.zeros((1, 2)), np.array([800.0]), np.array([800.0]),
                         np.array([[100.0, 240.0]]), {1: np.asarray(plus_cols, dtype=np.float64)[None]},
                         grid, np.zeros(1, dtype=np.uint8))


def test_order_leaving_projector_renders_nothing(grid):
    right = Pattern(640, 480, PatternTag("scanline", 0), lambda r, c: (c >= 600).astype(np.float64))
    eta = {0: np.ones(grid.count), 1: np.ones(grid.count)}
    proj = np.ones((3, grid.count))

    leaving = single_pixel_geometry(grid, np.linspace(600.0, 700.0, grid.count))
    assert not leaving.order_valid(1, 640)[0]
    np.testing.assert_array_equal(spectral_illumination(right, leaving, eta, proj), 0.0)

    inside = single_pixel_geometry(grid, np.linspace(560.0, 630.0, grid.count))
    assert inside.order_valid(1, 640)[0]
    light = spectral_illumination(right, inside, eta, proj)
    assert np.count_nonzero(light) == np.count_nonzero(inside.first_cols(1) >= 600)


def test_scanline_trace_peaks_once_per_valid_order(desk, responses, eta, small_model, grid):
    shape = (16, 64)
    cube = np.zeros(shape + (grid.count,))
    cube[..., grid.index_of(480.0)] = 1.0
    scene = Scene(np.full(shape, 800.0), cube, grid)
    illumination = prepare_illumination(scene, desk, small_model, responses, eta)
    stack = render_stack(gen_scanlines((640, 480), 5, 2), scene, desk, small_model, responses, eta,
                         illumination=illumination)

    zero_col = illumination.geometry.zero_col.reshape(shape)
    checked = []
    for y, x in zip(*np.nonzero((zero_col >= 10) & (zero_col < 620))):
        peaks, _ = trace_peaks(stack.frames[:, y, x].sum(axis=-1), 5)
        orders = valid_orders((x, y), 800.0, small_model, desk, grid)
        assert peaks.size == 1 + len(orders), (x, y, orders)
        checked.append(len(orders))
    # near the projector edge only one first order survives
    assert 1 in checked


def test_binary_trace_is_two_level(desk, responses, eta, small_model, tiny_scene):
    patterns = binary_patterns((640, 480))
    codes = len(patterns) - 2
    zero_only = render_stack(patterns, tiny_scene, desk, None, responses, eta, exposure=1.0)
    full = render_stack(patterns, tiny_scene, desk, small_model, responses, eta, exposure=1.0)
    clean = zero_only.frames[:codes].sum(axis=-1)
    traces = full.frames[:codes].sum(axis=-1)
    white_zero = zero_only.frames[codes].sum(axis=-1)
    leakage = full.frames[codes].sum(axis=-1) - white_zero

    on = clean > 0.5 * white_zero
    np.testing.assert_allclose(clean, np.where(on, white_zero, 0.0), rtol=1e-9, atol=1e-12)
    assert np.all(leakage < white_zero)
    assert np.all(traces >= clean - 1e-12)
    assert np.all(traces - clean <= leakage + 1e-12)
    # dispersed light never lifts an off frame to the on level
    level = np.broadcast_to(white_zero, traces.shape)
    assert np.all(traces[on] >= level[on] - 1e-12)
    assert np.all(traces[~on] < level[~on])


def test_stack_save_load(tmp_path):
    stack = add_noise(constant_stack(0.25), 0.01, seed=2)
    path = save_stack(stack, str(tmp_path), "stack")
    loaded = load_stack(path)
    assert loaded.tags == stack.tags
    assert loaded.metadata["seed"] == 2
    np.testing.assert_allclose(loaded.frames, stack.frames, atol=1e-6)
