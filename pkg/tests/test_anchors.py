import pytest
from hypothesis import given, settings, strategies as st

from gridcompress.anchors import (
    AnchorConfig, AnchorSet, CandidateBoundary, CoordinateMap, detect_anchor_lines, derive_anchors,
    extract_skeleton, filter_candidates, heterogeneous, map_range_to_extracted, map_range_to_original,
    profile_lines, propose_candidates, resolve_overlaps, segment_discrepancy,
)
from gridcompress.errors import MappingError
from gridcompress.grid import Cell, CellRange, Sheet, StyleAttrs, parse_range
from gridcompress.synthetic import boundary_sheet

from oracles import kept_lines

BOLD = StyleAttrs(bold=True)


def row_profiles(sheet):
    return [p for p in profile_lines(sheet) if p.axis == "row"]


def numbered_sheet(m: int, n: int = 2) -> Sheet:
    return Sheet.from_values([[f"r{i}c{j}" for j in range(n)] for i in range(m)])


class TestProfiles:
    def test_year_profit_row(self):
        p = row_profiles(Sheet.from_values([["Year", ""], ["2024", "5"]]))[0]
        assert (p.frac_text, p.frac_empty, p.frac_numeric) == (0.5, 0.5, 0.0)

    def test_rows_then_columns(self):
        profiles = profile_lines(Sheet.from_values([["a", "b", "c"], ["1", "2", "3"]]))
        assert [(p.axis, p.index) for p in profiles] == [("row", 0), ("row", 1), ("col", 0), ("col", 1), ("col", 2)]

    def test_style_counts(self):
        style = StyleAttrs("FFFF0000", True, frozenset({"top", "bottom"}))
        s = Sheet([[Cell("a", style=style), Cell("b", style=style), Cell("c")]])
        p = row_profiles(s)[0]
        assert p.border_count == 4 and p.bold_count == 2
        assert p.fill_signature == (("FFFF0000", 2),)

    def test_merge_spans_counted_on_every_covered_line(self):
        s = Sheet([[Cell("t", merge=CellRange(0, 0, 1, 1)), Cell("")], [Cell(""), Cell("")], [Cell("x"), Cell("")]])
        assert [p.merge_spans for p in row_profiles(s)] == [1, 1, 0]

    @given(st.lists(st.sampled_from(["", "x", "1", "2.5%"]), min_size=1, max_size=20))
    def test_fractions_sum_to_one(self, row):
        p = row_profiles(Sheet.from_values([row]))[0]
        assert p.frac_empty + p.frac_numeric + p.frac_text == pytest.approx(1.0)


class TestAnchorLines:
    def test_identical_rows_anchor_only_ends(self):
        s = Sheet.from_values([["1", "2", "3"]] * 10)
        assert detect_anchor_lines(row_profiles(s)).rows == (0, 9)

    def test_header_to_body(self):
        s = Sheet.from_values([["Name", "Score"]] + [["1", "2"]] * 5)
        assert detect_anchor_lines(row_profiles(s)).rows == (0, 1, 5)

    def test_single_row(self):
        assert detect_anchor_lines(row_profiles(Sheet.from_values([["x"]]))).rows == (0,)

    def test_style_change_is_heterogeneous(self):
        s = Sheet([[Cell("a", style=BOLD), Cell("b", style=BOLD)], [Cell("a"), Cell("b")]])
        a, b = row_profiles(s)
        assert heterogeneous(a, b)

    def test_same_fractions_different_kinds(self):
        # identical fractions, but the text moves column
        a, b = row_profiles(Sheet.from_values([["x", "1", "2"], ["1", "2", "x"]]))
        assert heterogeneous(a, b)
        assert not heterogeneous(a, b, theta=1.0)

    def test_narrow_table_ending_beside_wide_one(self):
        wide = ["1", "2", "3", "4", "5", "6", "7", "8"]
        a, b = row_profiles(Sheet.from_values([["9", "9", ""] + wide, ["", "", ""] + wide]))
        assert segment_discrepancy(a, b) == 1.0
        assert heterogeneous(a, b)

    def test_segment_ignores_isolated_cells(self):
        a, b = row_profiles(Sheet.from_values([["x", "", "1", "2", "3"], ["", "", "1", "2", "3"]]))
        assert segment_discrepancy(a, b) == 0.0

    def test_theta_controls_sensitivity(self):
        s = Sheet.from_values([["1", "2", "3", "4", "5"], ["1", "2", "3", "4", ""]])
        a, b = row_profiles(s)
        assert not heterogeneous(a, b, 0.3)
        assert heterogeneous(a, b, 0.15)


class TestCandidates:
    def test_single_line_pair(self):
        cands = propose_candidates(AnchorSet.of([0, 5], [0, 2]))
        assert [c.range for c in cands] == [CellRange(0, 0, 5, 2)]

    def test_three_rows_one_col_pair(self):
        assert len(propose_candidates(AnchorSet.of([0, 3, 7], [1, 4]))) == 3

    def test_no_pairs(self):
        assert propose_candidates(AnchorSet.of([0], [0, 1])) == []

    @given(st.sets(st.integers(0, 30), max_size=8), st.sets(st.integers(0, 30), max_size=8))
    def test_count_is_product_of_pair_counts(self, rows, cols):
        cands = propose_candidates(AnchorSet.of(rows, cols))
        pairs = lambda k: k * (k - 1) // 2
        assert len(cands) == pairs(len(rows)) * pairs(len(cols))
        assert all(c.range.top < c.range.bottom and c.range.left < c.range.right for c in cands)


class TestFilter:
    def table_sheet(self):
        vals = [[""] * 5 for _ in range(8)]
        vals[1][1:4] = ["Name", "Q1", "Q2"]
        for i in range(2, 6):
            vals[i][1:4] = [f"item{i}", str(i * 10), str(i * 7)]
        return Sheet.from_values(vals)

    def test_true_table_kept(self):
        s = self.table_sheet()
        kept = filter_candidates(s, [CandidateBoundary(CellRange(1, 1, 5, 3))])
        assert len(kept) == 1
        assert kept[0].header_likeness == 1.0 and kept[0].interior_density == 1.0

    def test_too_small_rejected(self):
        s = self.table_sheet()
        assert filter_candidates(s, [CandidateBoundary(CellRange(1, 1, 1, 3))]) == []

    def test_sparse_rejected(self):
        s = self.table_sheet()
        assert filter_candidates(s, [CandidateBoundary(CellRange(6, 0, 7, 4))]) == []

    def test_cut_short_rejected(self):
        # bottom edge inside the body: the next row continues the table
        s = self.table_sheet()
        assert filter_candidates(s, [CandidateBoundary(CellRange(1, 1, 3, 3))]) == []

    def test_numeric_header_rejected(self):
        s = Sheet.from_values([["1", "2"], ["3", "4"]])
        assert filter_candidates(s, [CandidateBoundary(CellRange(0, 0, 1, 1))]) == []

    def test_out_of_bounds(self):
        with pytest.raises(ValueError):
            filter_candidates(self.table_sheet(), [CandidateBoundary(CellRange(0, 0, 20, 1))])


class TestOverlaps:
    def test_header_likeness_wins(self):
        a = CandidateBoundary(CellRange(0, 0, 5, 5), header_likeness=0.9)
        b = CandidateBoundary(CellRange(2, 2, 4, 4), header_likeness=0.4)
        assert resolve_overlaps([b, a]) == [a]

    def test_tie_prefers_smaller(self):
        a = CandidateBoundary(CellRange(0, 0, 5, 5), header_likeness=0.5)
        b = CandidateBoundary(CellRange(0, 0, 2, 2), header_likeness=0.5)
        assert resolve_overlaps([a, b]) == [b]

    def test_disjoint_all_kept_in_row_major_order(self):
        a = CandidateBoundary(CellRange(5, 0, 6, 1))
        b = CandidateBoundary(CellRange(0, 3, 1, 4))
        assert resolve_overlaps([a, b]) == [b, a]

    def test_near_equal_scores_order_independent(self):
        a = CandidateBoundary(CellRange(0, 0, 0, 0), 0.0)
        b = CandidateBoundary(CellRange(0, 0, 0, 0), 2.26e-205)
        assert resolve_overlaps([a, b]) == resolve_overlaps([b, a]) == [b]

    @settings(max_examples=100)
    @given(st.lists(st.tuples(st.integers(0, 10), st.integers(0, 10), st.integers(0, 4), st.integers(0, 4),
                              st.floats(0, 1)), max_size=12))
    def test_result_pairwise_disjoint_and_maximal(self, specs):
        cands = [CandidateBoundary(CellRange(t, l, t + h, l + w), hl) for t, l, h, w, hl in specs]
        out = resolve_overlaps(cands)
        for i, a in enumerate(out):
            for b in out[i + 1:]:
                assert not a.range.overlaps(b.range)
        # every rejected candidate overlaps a survivor
        for c in cands:
            assert c in out or any(c.range.overlaps(o.range) for o in out)
        assert resolve_overlaps(list(reversed(cands))) == out


class TestExtract:
    def test_frozen_example(self):
        s = numbered_sheet(60)
        skel, cmap = extract_skeleton(s, AnchorSet.of([0, 50], [0, 1]), k=1)
        assert cmap.kept_rows == (0, 1, 49, 50, 51)
        assert list(cmap.kept_rows) == kept_lines([0, 50], 1, 60)
        assert skel.shape == (5, 2)
        assert skel[2, 0].value == "r49c0"

    @settings(max_examples=150)
    @given(st.integers(1, 80), st.integers(0, 6), st.data())
    def test_matches_interval_oracle(self, m, k, data):
        anchors = data.draw(st.sets(st.integers(0, m - 1), min_size=1, max_size=6))
        s = numbered_sheet(m, 1)
        skel, cmap = extract_skeleton(s, AnchorSet.of(anchors, [0]), k)
        assert list(cmap.kept_rows) == kept_lines(anchors, k, m)
        assert [r[0] for r in skel.values()] == [f"r{i}c0" for i in cmap.kept_rows]

    @given(st.integers(5, 60), st.sets(st.integers(0, 4), min_size=1))
    def test_monotonic_in_k(self, m, anchors):
        s = numbered_sheet(m, 1)
        sizes = [extract_skeleton(s, AnchorSet.of(anchors, [0]), k)[1].shape[0] for k in range(6)]
        kept = [set(extract_skeleton(s, AnchorSet.of(anchors, [0]), k)[1].kept_rows) for k in range(6)]
        assert sizes == sorted(sizes)
        assert all(a <= b for a, b in zip(kept, kept[1:]))

    def test_merge_rebased(self):
        rows = [[Cell("")] * 3 for _ in range(20)]
        rows[0] = [Cell("T", merge=CellRange(0, 0, 0, 2)), Cell(""), Cell("")]
        skel, _ = extract_skeleton(Sheet(rows), AnchorSet.of([0], [0, 2]), k=0)
        assert skel[0, 0].merge == CellRange(0, 0, 0, 1)

    def test_negative_k(self):
        with pytest.raises(ValueError):
            extract_skeleton(numbered_sheet(3), AnchorSet.of([0], [0]), k=-1)

    def test_anchor_out_of_range(self):
        with pytest.raises(ValueError):
            extract_skeleton(numbered_sheet(3), AnchorSet.of([7], [0]), k=0)

    @pytest.mark.parametrize("seed", range(20))
    def test_boundaries_survive_default_k(self, seed):
        labeled = boundary_sheet(seed)
        _, cmap = extract_skeleton(labeled.sheet, derive_anchors(labeled.sheet), k=4)
        assert labeled.boundary_rows() <= set(cmap.kept_rows)
        assert labeled.boundary_cols() <= set(cmap.kept_cols)


class TestDeriveAnchors:
    def test_sources(self):
        s = boundary_sheet(3).sheet
        lines = derive_anchors(s, AnchorConfig(source="lines"))
        assert derive_anchors(s, AnchorConfig(source="both")) == lines
        cand = derive_anchors(s, AnchorConfig(source="candidates"))
        assert set(cand.rows) <= set(lines.rows) and set(cand.cols) <= set(lines.cols)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            AnchorConfig(theta=1.5)
        with pytest.raises(ValueError):
            AnchorConfig(k=-1)
        with pytest.raises(ValueError):
            AnchorConfig(source="grid")


class TestCoordinateMap:
    def test_gap_sets_hull_flag(self):
        cmap = CoordinateMap((0, 1, 49, 50), (0, 5))
        out = map_range_to_original(parse_range("A1:B4"), cmap)
        assert out.range == parse_range("A1:F51") and out.noncontiguous

    def test_contiguous_run(self):
        cmap = CoordinateMap((0, 1, 49, 50), (0, 5))
        out = map_range_to_original(parse_range("A3:A4"), cmap)
        assert out.range == parse_range("A50:A51") and not out.noncontiguous

    def test_identity(self):
        cmap = CoordinateMap.identity(4, 3)
        assert cmap.is_identity
        out = map_range_to_original(parse_range("B2:C4"), cmap)
        assert out.range == parse_range("B2:C4") and not out.noncontiguous

    def test_outside_extracted_grid(self):
        with pytest.raises(MappingError):
            map_range_to_original(parse_range("A5"), CoordinateMap((0, 1, 49, 50), (0, 5)))

    def test_forward_mapping(self):
        cmap = CoordinateMap((0, 1, 49, 50), (0, 5))
        assert map_range_to_extracted(parse_range("A50:F51"), cmap) == parse_range("A3:B4")
        with pytest.raises(MappingError):
            map_range_to_extracted(parse_range("A3"), cmap)

    def test_invalid_maps(self):
        for rows in [(), (1, 1), (3, 2), (-1, 0)]:
            with pytest.raises(ValueError):
                CoordinateMap(rows, (0,))

    @settings(max_examples=200)
    @given(st.lists(st.integers(0, 100), min_size=1, max_size=15, unique=True),
           st.lists(st.integers(0, 40), min_size=1, max_size=10, unique=True), st.data())
    def test_round_trip(self, rows, cols, data):
        cmap = CoordinateMap(tuple(sorted(rows)), tuple(sorted(cols)))
        t = data.draw(st.integers(0, len(rows) - 1))
        b = data.draw(st.integers(t, len(rows) - 1))
        l = data.draw(st.integers(0, len(cols) - 1))
        r = data.draw(st.integers(l, len(cols) - 1))
        ext = CellRange(t, l, b, r)
        mapped = map_range_to_original(ext, cmap)
        assert map_range_to_extracted(mapped.range, cmap) == ext
        contiguous = (cmap.kept_rows[b] - cmap.kept_rows[t] == b - t) and (cmap.kept_cols[r] - cmap.kept_cols[l] == r - l)
        assert mapped.noncontiguous == (not contiguous)
