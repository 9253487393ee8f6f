import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from stegarmor.corpus import synthetic_image
from stegarmor.errors import (
    CoefficientOverflow,
    DimensionMismatch,
    InvalidQuality,
    MalformedStream,
    UnsupportedFeature,
)
from stegarmor.jpeg import (
    ANNEX_K_LUMINANCE,
    DCT8,
    CoeffImage,
    SpatialImage,
    compress,
    count_nzac,
    decompress,
    estimate_quality,
    ijg_quant_table,
    parse_jpeg,
    round_half_away,
    serialize_jpeg,
)

from conftest import random_coeff_image


@st.composite
def coeff_images(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_coeff_image(np.random.default_rng(seed))


@settings(max_examples=60, deadline=None)
@given(coeff_images())
def test_serialize_parse_round_trip(img):
    back = parse_jpeg(serialize_jpeg(img))
    assert back == img
    assert back.coeffs.dtype == np.int32


def test_serializer_is_deterministic():
    img = random_coeff_image(np.random.default_rng(5))
    assert serialize_jpeg(img) == serialize_jpeg(img)


def test_extreme_coefficients_round_trip():
    coeffs = np.zeros((16, 16), dtype=np.int32)
    coeffs[0, 0], coeffs[0, 8] = 1024, -1023
    coeffs[8, 0], coeffs[8, 8] = -1024, 1023
    coeffs[1:8, 1:8] = 1023
    coeffs[9:16, 9:16] = -1023
    img = CoeffImage(16, 16, coeffs, ijg_quant_table(100))
    assert parse_jpeg(serialize_jpeg(img)) == img


def test_overflowing_coefficient_is_rejected():
    coeffs = np.zeros((8, 8), dtype=np.int32)
    coeffs[3, 4] = 1024
    with pytest.raises(CoefficientOverflow):
        serialize_jpeg(CoeffImage(8, 8, coeffs, ijg_quant_table(90)))


def test_dc_only_block():
    coeffs = np.zeros((8, 8), dtype=np.int32)
    coeffs[0, 0] = -37
    img = CoeffImage(8, 8, coeffs, ijg_quant_table(50))
    assert parse_jpeg(serialize_jpeg(img)) == img
    assert count_nzac(img) == 0


def test_plane_shape_must_match_dimensions():
    with pytest.raises(DimensionMismatch):
        CoeffImage(17, 8, np.zeros((8, 16)), ijg_quant_table(75))


def test_quality_50_is_base_table():
    assert ijg_quant_table(50).steps == ANNEX_K_LUMINANCE
    assert ijg_quant_table(50).array[0, 0] == 16


def test_quality_examples():
    assert ijg_quant_table(75).array[0, 0] == 8
    assert set(ijg_quant_table(100).steps) == {1}
    assert max(ijg_quant_table(1).steps) == 255


def test_tables_are_monotone_in_quality():
    tables = np.array([ijg_quant_table(q).steps for q in range(1, 101)])
    assert np.all(np.diff(tables, axis=0) <= 0)


@pytest.mark.parametrize("bad", [0, 101, -5, 50.5, True])
def test_invalid_quality(bad):
    with pytest.raises(InvalidQuality):
        ijg_quant_table(bad)


def test_estimate_quality_inverts_scaling():
    for q in (10, 50, 75, 90, 95):
        assert estimate_quality(ijg_quant_table(q)) in {q} | {
            p for p in range(1, 101) if ijg_quant_table(p) == ijg_quant_table(q)
        }


def test_dct_basis_is_orthonormal():
    assert np.allclose(DCT8 @ DCT8.T, np.eye(8), atol=1e-12)


def test_round_half_away_from_zero():
    x = np.array([-2.5, -1.5, -0.5, 0.5, 1.5, 2.5, 0.49])
    assert round_half_away(x).tolist() == [-3, -2, -1, 1, 2, 3, 0]


def test_uniform_gray_compresses_to_zero():
    flat = SpatialImage(np.full((24, 40), 128, dtype=np.uint8))
    for q in (1, 30, 75, 100):
        assert not compress(flat, q).coeffs.any()


def test_decompress_stays_in_range():
    rng = np.random.default_rng(0)
    for _ in range(5):
        img = random_coeff_image(rng, qf=10)
        px = decompress(img).pixels
        assert px.dtype == np.uint8
        assert px.shape == (img.height, img.width)


def test_compress_pads_odd_dimensions():
    img = SpatialImage(np.random.default_rng(1).integers(0, 256, (13, 21), dtype=np.uint8))
    c = compress(img, 90)
    assert c.coeffs.shape == (16, 24)
    assert decompress(c).pixels.shape == (13, 21)


def test_high_quality_decompress_is_close():
    img = synthetic_image(3, 64)
    out = decompress(compress(img, 95))
    assert np.mean(np.abs(out.pixels.astype(int) - img.pixels)) < 3


def test_higher_quality_keeps_more_ac_energy():
    ramp = SpatialImage(np.tile(np.linspace(0, 255, 64), (64, 1)).astype(np.uint8))
    assert count_nzac(compress(ramp, 90)) > count_nzac(compress(ramp, 50))


def test_count_nzac_one_per_block():
    coeffs = np.zeros((64 * 8, 64 * 8), dtype=np.int32)
    coeffs[::8, ::8] = 5
    coeffs[2::8, 3::8] = -1
    assert count_nzac(CoeffImage(512, 512, coeffs, ijg_quant_table(75))) == 4096
    assert count_nzac(CoeffImage(8, 8, np.zeros((8, 8)), ijg_quant_table(75))) == 0


def test_third_party_decoder_opens_output():
    img = compress(synthetic_image(2, 96), 80)
    data = serialize_jpeg(img)
    with Image.open(io.BytesIO(data)) as im:
        im.load()
        assert im.mode == "L" and im.size == (96, 96)
        theirs = np.asarray(im, dtype=int)
    assert np.max(np.abs(theirs - decompress(img).pixels)) <= 2


def test_parses_third_party_baseline_file():
    px = synthetic_image(4, 72).pixels[:, :70]
    buf = io.BytesIO()
    Image.fromarray(px).save(buf, format="JPEG", quality=85)
    img = parse_jpeg(buf.getvalue())
    assert (img.width, img.height) == (70, 72)
    assert estimate_quality(img.table) == 85
    with Image.open(io.BytesIO(buf.getvalue())) as im:
        theirs = np.asarray(im, dtype=int)
    assert np.max(np.abs(theirs - decompress(img).pixels)) <= 2


def test_parses_restart_intervals():
    px = synthetic_image(6, 64).pixels
    plain, rst = io.BytesIO(), io.BytesIO()
    Image.fromarray(px).save(plain, format="JPEG", quality=75)
    Image.fromarray(px).save(rst, format="JPEG", quality=75, restart_marker_blocks=3)
    assert b"\xff\xdd" in rst.getvalue()
    assert parse_jpeg(rst.getvalue()) == parse_jpeg(plain.getvalue())


def test_progressive_is_unsupported():
    buf = io.BytesIO()
    Image.fromarray(synthetic_image(0, 32).pixels).save(buf, format="JPEG", progressive=True)
    with pytest.raises(UnsupportedFeature):
        parse_jpeg(buf.getvalue())


def test_colour_is_unsupported():
    buf = io.BytesIO()
    Image.new("RGB", (16, 16), (10, 200, 30)).save(buf, format="JPEG")
    with pytest.raises(UnsupportedFeature):
        parse_jpeg(buf.getvalue())


@pytest.mark.parametrize("data", [b"", b"\xff\xd8", b"not a jpeg at all"])
def test_garbage_is_malformed(data):
    with pytest.raises(MalformedStream):
        parse_jpeg(data)


def test_truncated_stream_is_malformed():
    data = serialize_jpeg(compress(synthetic_image(1, 64), 75))
    with pytest.raises(MalformedStream):
        parse_jpeg(data[: len(data) // 2])
