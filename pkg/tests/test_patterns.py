import numpy as np
import pytest

from patterns.binary import bit, bits_for, code_layout, gen_binary_codes
from patterns.pattern_set import Pattern, PatternTag, concatenate, reference_set
from patterns.scanline import ScanlineSpec, gen_comb, gen_scanlines
from reconstruction.sweeps import binary_patterns
from utils.error_types import DomainError


def test_bits_for():
    assert bits_for(640) == 10
    assert bits_for(480) == 9
    assert bits_for(512) == 9
    assert bits_for(1) == 1
    with pytest.raises(DomainError):
        bits_for(0)


def test_binary_pattern_count():
    assert len(gen_binary_codes((640, 480))) == 19
    assert len(gen_binary_codes((640, 480), complementary=True)) == 38
    assert len(binary_patterns((640, 480))) == 21


def test_bit_addresses_column_then_row():
    assert code_layout((640, 480)) == (10, 9)
    # column 5 = 0b101, row 2 = 0b10
    q = (5, 2)
    assert [bit(q, i, (640, 480)) for i in range(3)] == [1, 0, 1]
    assert bit(q, 10, (640, 480)) == 0
    assert bit(q, 11, (640, 480)) == 1
    with pytest.raises(DomainError):
        bit(q, 19, (640, 480))


def test_binary_patterns_encode_every_pixel():
    codes = gen_binary_codes((16, 8))
    rows, cols = np.mgrid[0:8, 0:16]
    decoded_col = sum((codes[i].sample(rows, cols)[..., 0] > 0.5).astype(int) << i for i in range(4))
    decoded_row = sum((codes[4 + i].sample(rows, cols)[..., 0] > 0.5).astype(int) << i for i in range(3))
    np.testing.assert_array_equal(decoded_col, cols)
    np.testing.assert_array_equal(decoded_row, rows)


def test_complementary_pattern_is_inverse():
    codes = gen_binary_codes((16, 8), complementary=True)
    plain, inverse = codes[0].image(), codes[1].image()
    assert codes[1].tag.inverse
    np.testing.assert_array_equal(plain + inverse, 1.0)


def test_scanline_count_and_spans():
    spec = ScanlineSpec(640, 5, 2)
    assert spec.count == 318
    assert spec.span(0) == (0, 5)
    assert spec.span(316) == (632, 637)
    # the last line is stretched to the edge
    assert spec.span(317) == (634, 640)


def test_scanlines_cover_every_column():
    patterns = gen_scanlines((640, 4), 5, 2)
    assert len(patterns) == 318
    assert patterns.params["K_s"] == 318
    cols = np.arange(640)
    covered = np.zeros(640, dtype=bool)
    for p in patterns:
        covered |= p.sample(np.zeros(640, dtype=int), cols)[:, 0] > 0
    assert covered.all()


def test_scanline_spec_rejects_bad_parameters():
    with pytest.raises(DomainError):
        ScanlineSpec(640, 2, 5)
    with pytest.raises(DomainError):
        ScanlineSpec(4, 5, 2)


def test_comb_lines():
    comb = gen_comb((64, 2), period=16, line_width=2, offsets=(0, 4))
    row = comb[1].sample(np.zeros(64, dtype=int), np.arange(64))[:, 0]
    assert np.flatnonzero(row).tolist() == [4, 5, 20, 21, 36, 37, 52, 53]


def test_pattern_samples_zero_outside():
    white = Pattern.constant(4, 4, 1.0, PatternTag("reference", 1))
    values = white.sample(np.array([0, 0, 5]), np.array([-1, 2, 2]))
    np.testing.assert_array_equal(values[:, 0], [0.0, 1.0, 0.0])


def test_pattern_from_array_range():
    with pytest.raises(DomainError):
        Pattern.from_array(np.full((2, 2), 1.5), PatternTag("reference", 1))


def test_reference_set_and_concatenate():
    refs = reference_set(8, 4)
    assert [t.label() for t in refs.tags] == ["reference_white", "reference_black"]
    combined = concatenate("binary", gen_binary_codes((8, 4)), refs)
    assert combined.indices("reference") == [5, 6]
    assert len(combined.subset("binary")) == 5
    manifest = combined.manifest()
    assert manifest["params"]["K_b"] == 5
    assert manifest["patterns"][0]["label"] == "binary_col00"
