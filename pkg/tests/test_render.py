import math
import random
import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chartforge.appearance import fixed_appearance, sample_appearance
from chartforge.colors import slice_colors
from chartforge.model import ChartType
from chartforge.render import (
    RenderError,
    grouped_offsets,
    pie_layout,
    render_batch,
    render_figure,
    stacked_spans,
)
from conftest import ALL_TYPES, make_data, simple_bar, simple_pie
from reference_oracle import ref_grouped_offsets, ref_hue_rotation, ref_pie_layout, ref_stacked_spans

positive_values = st.lists(
    st.floats(min_value=0.1, max_value=1e6, allow_nan=False), min_size=2, max_size=10
)


def png_dimensions(png: bytes) -> tuple[int, int]:
    assert png[:8] == b"\x89PNG\r\n\x1a\n"
    width, height = struct.unpack(">II", png[16:24])
    return width, height


class TestPieLayout:
    @given(positive_values)
    @settings(max_examples=100)
    def test_matches_reference(self, values):
        got = pie_layout(values)
        want = ref_pie_layout(values)
        for (g1, g2), (w1, w2) in zip(got, want):
            assert math.isclose(g1, w1, abs_tol=1e-9)
            assert math.isclose(g2, w2, abs_tol=1e-9)

    @given(positive_values)
    @settings(max_examples=100)
    def test_spans_cover_full_circle(self, values):
        spans = pie_layout(values)
        assert math.isclose(sum(t2 - t1 for t1, t2 in spans), 360.0, abs_tol=1e-6)
        assert spans[0][1] == 90.0  # first wedge starts at 12 o'clock
        for (a1, _), (_, b2) in zip(spans[1:], spans):
            assert math.isclose(b2 - (b2 - a1), a1, abs_tol=1e-9)

    def test_known_quarters(self):
        spans = pie_layout([25, 25, 50])
        assert spans[0] == (0.0, 90.0)
        assert spans[1] == (-90.0, 0.0)
        assert spans[2] == (-270.0, -90.0)

    def test_rejects_nonpositive_total(self):
        with pytest.raises(RenderError):
            pie_layout([0.0, 0.0])


class TestStackedSpans:
    @given(
        st.integers(2, 5).flatmap(
            lambda n_cats: st.lists(
                st.lists(
                    st.floats(min_value=0, max_value=1e5, allow_nan=False),
                    min_size=n_cats,
                    max_size=n_cats,
                ),
                min_size=2,
                max_size=6,
            )
        )
    )
    @settings(max_examples=100)
    def test_matches_reference_and_abuts(self, values_by_series):
        got = stacked_spans(values_by_series)
        want = ref_stacked_spans(values_by_series)
        assert len(got) == len(want)
        for cat_got, cat_want in zip(got, want):
            for (gb, gt), (wb, wt) in zip(cat_got, cat_want):
                assert math.isclose(gb, wb, abs_tol=1e-9)
                assert math.isclose(gt, wt, abs_tol=1e-9)
            for (_, top), (bottom, _) in zip(cat_got, cat_got[1:]):
                assert math.isclose(top, bottom, abs_tol=1e-9)

    def test_segment_heights_equal_values(self):
        spans = stacked_spans([[3.0, 1.0], [2.0, 5.0]])
        assert spans[0] == [(0.0, 3.0), (3.0, 5.0)]
        assert spans[1] == [(0.0, 1.0), (1.0, 6.0)]


class TestGroupedOffsets:
    @given(st.integers(2, 6))
    def test_matches_reference(self, n):
        got = grouped_offsets(n)
        want = ref_grouped_offsets(n)
        for (gc, gw), (wc, ww) in zip(got, want):
            assert math.isclose(gc, wc, abs_tol=1e-9)
            assert math.isclose(gw, ww, abs_tol=1e-9)

    @given(st.integers(1, 6))
    def test_symmetric_and_within_slot(self, n):
        offsets = grouped_offsets(n)
        centers = [c for c, _ in offsets]
        assert math.isclose(sum(centers), 0.0, abs_tol=1e-9)
        for center, width in offsets:
            assert abs(center) + width / 2 <= 0.4 + 1e-9


class TestSliceColors:
    @given(st.integers(2, 10))
    def test_matches_reference_rotation(self, n):
        base = "#2ca02c"
        assert slice_colors(base, n) == ref_hue_rotation(base, n)

    def test_distinct_per_wedge(self):
        colors = slice_colors("#1f77b4", 8)
        assert len(set(colors)) == 8


class TestRenderFigure:
    def test_byte_deterministic(self):
        data = make_data(ChartType.LINE, 3)
        app = sample_appearance(ChartType.LINE, random.Random(3))
        a = render_figure(data, app)
        b = render_figure(data, app)
        assert a.png_bytes == b.png_bytes
        assert a.content_hash == b.content_hash

    def test_every_chart_type_renders_at_declared_canvas(self):
        for ct in ALL_TYPES:
            data = make_data(ct, 1)
            app = fixed_appearance(ct)
            fig = render_figure(data, app)
            assert png_dimensions(fig.png_bytes) == (app.width, app.height)
            assert (fig.width, fig.height) == (app.width, app.height)

    def test_jitter_seed_changes_pixels(self):
        data = simple_bar()
        app_a = fixed_appearance(ChartType.V_BAR)
        app_b = fixed_appearance(ChartType.V_BAR)
        app_a.palette_jitter_seed = 1
        app_b.palette_jitter_seed = 2
        assert render_figure(data, app_a).png_bytes != render_figure(data, app_b).png_bytes

    def test_appearance_axes_change_pixels(self):
        data = simple_bar()
        base = render_figure(data, fixed_appearance(ChartType.V_BAR)).png_bytes
        no_numbers = fixed_appearance(ChartType.V_BAR)
        no_numbers.show_numbers = False
        no_spines = fixed_appearance(ChartType.V_BAR)
        no_spines.spines = False
        no_title = fixed_appearance(ChartType.V_BAR)
        no_title.title_mode = "absent"
        assert render_figure(data, no_numbers).png_bytes != base
        assert render_figure(data, no_spines).png_bytes != base
        assert render_figure(data, no_title).png_bytes != base

    def test_rejects_invalid_data(self):
        data = simple_bar()
        data.series[0].color = "not-a-color"
        with pytest.raises(RenderError):
            render_figure(data, fixed_appearance(ChartType.V_BAR))

    def test_rejects_invalid_appearance(self):
        app = fixed_appearance(ChartType.PIE)
        app.legend_mode = "absent"
        with pytest.raises(RenderError):
            render_figure(simple_pie(), app)

    def test_rejects_mismatched_marker(self):
        app = fixed_appearance(ChartType.V_BAR)
        app.marker_style = "star"
        with pytest.raises(RenderError):
            render_figure(simple_bar(), app)


class TestRenderBatch:
    def _items(self, n=4):
        items = []
        for i, ct in enumerate(ALL_TYPES[:n]):
            items.append((make_data(ct, i), fixed_appearance(ct)))
        return items

    def test_order_preserved(self):
        items = self._items()
        result = render_batch(items, parallelism=1)
        assert result.errors == []
        for (data, app), fig in zip(items, result.figures):
            assert png_dimensions(fig.png_bytes) == (app.width, app.height)

    def test_parallel_matches_sequential(self):
        items = self._items()
        seq = render_batch(items, parallelism=1)
        par = render_batch(items, parallelism=2)
        assert [f.content_hash for f in seq.figures] == [
            f.content_hash for f in par.figures
        ]

    def test_errors_reported_not_raised(self):
        bad = simple_bar()
        bad.series[0].color = "nope"
        items = [(simple_bar(), fixed_appearance(ChartType.V_BAR)), (bad, fixed_appearance(ChartType.V_BAR))]
        result = render_batch(items, parallelism=1)
        assert len(result.figures) == 2
        assert result.figures[0] is not None
        assert result.figures[1] is None
        assert len(result.errors) == 1
        assert result.errors[0][0] == 1  # index of the failing item
