import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
import hypothesis.strategies as st

from core.worker.encoding import (PEMode, VisionPosition, Wavelengths, add_to_embeddings, build_pe_matrix,
                                  standard_pe, standard_pe_rows, variant_frequency_pe, variant_frequency_rows,
                                  wavelength)
from core.worker.exceptions import ConfigError, DataError
from core.worker.geo import GeoPoint, ImageSpec, PhysicalContext, Timestamp
from core.worker.indexing import ImageBlock, TextSegment, TokenLayout


def test_standard_pe_at_origin():
    row = standard_pe(0, 16)
    np.testing.assert_array_equal(row[0::2], 0.0)
    np.testing.assert_array_equal(row[1::2], 1.0)


def test_standard_pe_known_values():
    np.testing.assert_allclose(standard_pe(1, 4), [0.84147, 0.54030, 0.01000, 0.99995], atol=1e-5)


@given(st.floats(-1e4, 1e4))
def test_standard_pe_parity(p):
    a, b = standard_pe(p, 8), standard_pe(-p, 8)
    np.testing.assert_allclose(a[0::2], -b[0::2], atol=1e-12)
    np.testing.assert_allclose(a[1::2], b[1::2], atol=1e-12)


def test_standard_pe_rejects_odd_width():
    with pytest.raises(ConfigError):
        standard_pe(0, 7)


@pytest.mark.parametrize("ctx, dims, expected", [
    (VisionPosition(183, 0, 0, 0), slice(0, 2), (0.0, -1.0)),
    (VisionPosition(0, 6, 0, 0), slice(2, 4), (1.0, 0.0)),
    (VisionPosition(0, 0, 90, 180), slice(4, 8), (0.0, -1.0, 0.0, -1.0)),
])
def test_variant_frequency_half_and_quarter_periods(ctx, dims, expected):
    np.testing.assert_allclose(variant_frequency_pe(ctx, 8)[dims], expected, atol=1e-12)


def test_variant_frequency_zero_context_alternates():
    row = variant_frequency_pe(VisionPosition(0, 0, 0, 0), 32)
    np.testing.assert_array_equal(row[0::2], 0.0)
    np.testing.assert_array_equal(row[1::2], 1.0)


def test_variant_frequency_uses_longitude_period():
    # a full longitude turn at the first group returns to the origin
    row = variant_frequency_pe(VisionPosition(0, 0, 0, 359.999999), 8)
    assert row[6] == pytest.approx(0.0, abs=1e-6)
    short = variant_frequency_pe(VisionPosition(0, 0, 0, 90), 8, Wavelengths(p_lng=180.0))
    assert short[6] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("lat_id, lng_id", [(-1, 0), (181, 0), (0, 360), (0, -0.5)])
def test_variant_frequency_rejects_out_of_range_ids(lat_id, lng_id):
    with pytest.raises(DataError):
        variant_frequency_rows(0, 0, lat_id, lng_id, 8)


def test_variant_frequency_needs_width_divisible_by_eight():
    with pytest.raises(ConfigError):
        variant_frequency_pe(VisionPosition(0, 0, 0, 0), 12)


def test_wavelength_schedule():
    assert wavelength(0, 64, 366.0) == pytest.approx(366.0)
    assert wavelength(1, 128, 366.0) == pytest.approx(488.1, abs=0.1)
    ratios = [wavelength(i + 1, 128, 24.0) / wavelength(i, 128, 24.0) for i in range(15)]
    np.testing.assert_allclose(ratios, 10000 ** (4 / 128))
    with pytest.raises(ConfigError):
        wavelength(16, 128, 24.0)


def test_wavelengths_must_be_positive():
    with pytest.raises(ConfigError):
        Wavelengths(p_hour=0.0)


def _layout():
    spec = ImageSpec(56, 28)
    context = PhysicalContext.build(Timestamp(2018, 295, 1), GeoPoint(11.65, 151.61), spec)
    return TokenLayout((TextSegment(3), ImageBlock(context, 2, 2), TextSegment(2))), context


def test_text_only_matrix_is_standard():
    layout = TokenLayout((TextSegment(6),))
    pe = build_pe_matrix(layout, 16)
    np.testing.assert_allclose(pe.values, standard_pe_rows(np.arange(6), 16))
    assert not pe.vision_mask.any()


def test_vision_rows_follow_their_context():
    layout, context = _layout()
    pe = build_pe_matrix(layout, 16)
    latIds, lngIds = context.idArrays()
    expected = variant_frequency_rows(np.full(4, 295), np.full(4, 1), latIds, lngIds, 16)
    np.testing.assert_allclose(pe.values[3:7], expected)
    # text rows keep their absolute sequence index
    np.testing.assert_allclose(pe.values[7], standard_pe(7, 16))
    np.testing.assert_array_equal(pe.vision_mask, [False] * 3 + [True] * 4 + [False] * 2)


def test_vision_tokens_sharing_a_patch_position_share_rows():
    spec = ImageSpec(28, 28)
    context = PhysicalContext.build(Timestamp(2019, 10, 4), GeoPoint(15.0, 130.0), spec)
    block = ImageBlock(context, 1, 1)
    pe = build_pe_matrix(TokenLayout((block, TextSegment(2), block)), 8)
    np.testing.assert_array_equal(pe.values[0], pe.values[3])


def test_pe_modes():
    layout, _ = _layout()
    assert not build_pe_matrix(layout, 16, mode="none").values.any()
    np.testing.assert_allclose(build_pe_matrix(layout, 16, mode=PEMode.STANDARD).values,
                               standard_pe_rows(np.arange(layout.seq_len), 16))
    with pytest.raises(ConfigError):
        build_pe_matrix(layout, 16, mode="learned")


def test_variant_matrix_needs_context():
    with pytest.raises(ConfigError):
        build_pe_matrix(TokenLayout((ImageBlock(None, 1, 1),)), 8)


def test_add_to_embeddings_scales_by_width():
    layout, _ = _layout()
    pe = build_pe_matrix(layout, 8)
    out = add_to_embeddings(np.zeros((layout.seq_len, 8)), pe)
    np.testing.assert_allclose(out, pe.values / 8)

    E = np.random.default_rng(0).normal(size=(layout.seq_len, 8))
    np.testing.assert_allclose((add_to_embeddings(E, pe) - E) * 8, pe.values, atol=1e-12)
    zero = build_pe_matrix(layout, 8, mode="none")
    np.testing.assert_array_equal(add_to_embeddings(E, zero), E)


def test_add_to_embeddings_accepts_tensors():
    layout, _ = _layout()
    pe = build_pe_matrix(layout, 8)
    E = torch.ones(layout.seq_len, 8, dtype=torch.float64)
    out = add_to_embeddings(E, pe)
    assert isinstance(out, torch.Tensor)
    np.testing.assert_allclose(out.numpy(), 1.0 + pe.values / 8)


def test_add_to_embeddings_shape_mismatch():
    layout, _ = _layout()
    with pytest.raises(DataError):
        add_to_embeddings(np.zeros((2, 8)), build_pe_matrix(layout, 8))


widths = st.sampled_from([8, 16, 32, 64, 128])
contexts = st.builds(VisionPosition, st.floats(0, 365), st.floats(0, 23), st.floats(0, 180),
                     st.floats(0, 360, exclude_max=True))


@settings(max_examples=300)
@given(contexts, widths)
def test_first_group_is_periodic_in_time(ctx, d):
    row = variant_frequency_pe(ctx, d)
    np.testing.assert_allclose(variant_frequency_pe(ctx._replace(t_day=ctx.t_day + 366), d)[0:2], row[0:2],
                               atol=1e-9, rtol=0)
    np.testing.assert_allclose(variant_frequency_pe(ctx._replace(t_hour=ctx.t_hour + 24), d)[2:4], row[2:4],
                               atol=1e-9, rtol=0)


@settings(max_examples=300)
@given(contexts, widths)
def test_first_group_is_periodic_in_space(ctx, d):
    # ids cannot leave their ranges, so compare against the shifted angle directly
    half = d // 2
    row = variant_frequency_pe(ctx, d)
    lat = 2 * math.pi * (ctx.lat_id + 180) / 180
    lng = 2 * math.pi * (ctx.lng_id + 360) / 360
    np.testing.assert_allclose(row[half:half + 4], [math.sin(lat), math.cos(lat), math.sin(lng), math.cos(lng)],
                               atol=1e-9, rtol=0)
    np.testing.assert_allclose(variant_frequency_pe(ctx._replace(lat_id=0), d)[half:half + 2],
                               variant_frequency_pe(ctx._replace(lat_id=180), d)[half:half + 2], atol=1e-9, rtol=0)


def test_longitude_turn_gives_the_same_rows():
    def block(lng):
        return ImageBlock(PhysicalContext.build(Timestamp(2018, 200, 12), GeoPoint(20.0, lng), ImageSpec(56, 28)), 2, 2)

    layouts = [TokenLayout((block(lng),)) for lng in (-35.5, 324.5, 684.5)]
    rows = [build_pe_matrix(layout, 16).values for layout in layouts]
    np.testing.assert_allclose(rows[1], rows[0], atol=1e-9, rtol=0)
    np.testing.assert_allclose(rows[2], rows[0], atol=1e-9, rtol=0)


FIELD_DIMS = {"t_day": (0, (0, 1)), "t_hour": (0, (2, 3)), "lat_id": (1, (0, 1)), "lng_id": (1, (2, 3))}


@settings(max_examples=300)
@given(contexts, contexts, widths, st.sampled_from(sorted(FIELD_DIMS)))
def test_dims_depend_only_on_their_field(ctx, other, d, name):
    changed = ctx._replace(**{name: getattr(other, name)})
    a, b = variant_frequency_pe(ctx, d), variant_frequency_pe(changed, d)
    halfIndex, offsets = FIELD_DIMS[name]
    dims = np.arange(d)
    owned = ((dims >= d // 2) == bool(halfIndex)) & np.isin(dims % 4, offsets)
    np.testing.assert_array_equal(a[~owned], b[~owned])


segments = st.one_of(
    st.integers(1, 10).map(TextSegment),
    st.builds(lambda lat, lng, day, hour: ImageBlock(
        PhysicalContext.build(Timestamp(2019, day, hour), GeoPoint(lat, lng), ImageSpec(56, 28)), 2, 2),
        st.floats(-60, 60), st.floats(-540, 540), st.integers(0, 364), st.integers(0, 23)),
)


@settings(max_examples=200, deadline=None)
@given(st.lists(segments, min_size=1, max_size=5).map(tuple).map(TokenLayout), widths,
       st.sampled_from(list(PEMode)))
def test_pe_entries_and_offsets_are_bounded(layout, d, mode):
    pe = build_pe_matrix(layout, d, mode=mode)
    assert np.all(np.abs(pe.values) <= 1.0)
    offsets = add_to_embeddings(np.zeros((layout.seq_len, d)), pe)
    assert np.all(np.abs(offsets) <= 1.0 / d)

    # text rows are plain sinusoids of the sequence index
    positions = np.flatnonzero(~pe.vision_mask)[:, None].astype(np.float64)
    i = np.arange(d // 2)
    angles = positions / 10000.0 ** (2 * i / d)
    if mode is not PEMode.NONE:
        np.testing.assert_allclose(pe.values[~pe.vision_mask][:, 0::2], np.sin(angles), atol=1e-9, rtol=0)
        np.testing.assert_allclose(pe.values[~pe.vision_mask][:, 1::2], np.cos(angles), atol=1e-9, rtol=0)
