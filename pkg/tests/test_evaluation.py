from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from gridcompress.errors import InputError
from gridcompress.evaluation import (
    BUCKETS, DetectionGold, ScoreReport, bucket_for_tokens, bucketize, compression_report, eob0_match,
    estimate_cost, evaluate_detection, normalize_answer, parse_detection_gold, parse_predictions, prf, score_detection,
    score_qa,
)
from gridcompress.grid import CellRange, Sheet, parse_range
from gridcompress.pipeline import QaAnswer

A, B, C, D = (parse_range(x) for x in ("A1:D5", "F1:H9", "A12:C20", "J2:K3"))

ranges = st.builds(lambda t, l, h, w: CellRange(t, l, t + h, l + w),
                   st.integers(0, 5), st.integers(0, 5), st.integers(0, 2), st.integers(0, 2))


def sig3(x: float) -> str:
    return f"{x:.3g}"


class TestEob0:
    def test_exact(self):
        assert eob0_match(A, parse_range("A1:D5"))

    @pytest.mark.parametrize("other", ["B2:D5", "A1:D6", "A2:D5", "A1:E5"])
    def test_any_bound_off(self, other):
        assert not eob0_match(A, parse_range(other))


class TestScoreDetection:
    def test_perfect(self):
        assert score_detection([A, B, C], DetectionGold("s", (A, B, C))).f1 == 1.0

    def test_two_of_three_with_spurious(self):
        rep = score_detection([A, B, D], DetectionGold("s", (A, B, C)))
        assert (rep.tp, rep.fp, rep.fn) == (2, 1, 1)
        assert rep.precision == pytest.approx(2 / 3) and rep.recall == pytest.approx(2 / 3)
        assert rep.f1 == pytest.approx(2 / 3)

    def test_empty_predictions(self):
        rep = score_detection([], DetectionGold("s", (A,)))
        assert rep.f1 == 0.0 and rep.fn == 1

    def test_duplicate_prediction_counts_once(self):
        rep = score_detection([A, A], DetectionGold("s", (A,)))
        assert (rep.tp, rep.fp) == (1, 1)

    def test_alt_labeling_max(self):
        # main labeling splits the region in two; the alternative treats it as one table
        gold = DetectionGold("s", (parse_range("A1:D5"), parse_range("A7:D9")), ((parse_range("A1:D9"),),))
        rep = score_detection([parse_range("A1:D9")], gold)
        assert rep.f1 == 1.0
        rep = score_detection([parse_range("A1:D5")], gold)
        assert rep.f1 == pytest.approx(2 / 3)

    def test_empty_labeling_rejected(self):
        with pytest.raises(InputError):
            DetectionGold("s", ())
        with pytest.raises(InputError):
            DetectionGold("s", (A,), ((),))

    @given(st.lists(ranges, max_size=6), st.lists(ranges, min_size=1, max_size=6), st.randoms())
    def test_permutation_invariant(self, preds, gold, rnd):
        shuffled = list(preds)
        rnd.shuffle(shuffled)
        g = DetectionGold("s", tuple(gold))
        a, b = score_detection(preds, g), score_detection(shuffled, g)
        assert (a.tp, a.fp, a.fn) == (b.tp, b.fp, b.fn)

    @given(st.lists(ranges, max_size=6), st.lists(ranges, min_size=1, max_size=6))
    def test_counts_and_f1_identity(self, preds, gold):
        rep = score_detection(preds, DetectionGold("s", tuple(gold)))
        assert rep.tp + rep.fp == len(preds) and rep.tp + rep.fn == len(gold)
        p, r = rep.precision, rep.recall
        assert rep.f1 == (pytest.approx(2 * p * r / (p + r)) if p + r > 0 else 0.0)

    @given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
    def test_prf_matches_exact_fractions(self, tp, fp, fn):
        p, r, f1 = prf(tp, fp, fn)
        fp_ = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
        fr_ = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
        ff_ = 2 * fp_ * fr_ / (fp_ + fr_) if fp_ + fr_ else Fraction(0)
        assert (p, r, f1) == pytest.approx((float(fp_), float(fr_), float(ff_)))


class TestBuckets:
    @pytest.mark.parametrize("tokens,bucket", [
        (0, "Small"), (3999, "Small"), (4000, "Medium"), (7999, "Medium"), (8000, "Large"),
        (31999, "Large"), (32000, "Huge"), (40000, "Huge"),
    ])
    def test_boundaries(self, tokens, bucket):
        assert bucket_for_tokens(tokens) == bucket

    def test_negative(self):
        with pytest.raises(ValueError):
            bucket_for_tokens(-1)

    @given(st.integers(0, 10**6), st.integers(0, 10**6))
    def test_monotone(self, a, b):
        lo, hi = sorted((a, b))
        assert BUCKETS.index(bucket_for_tokens(lo)) <= BUCKETS.index(bucket_for_tokens(hi))

    def test_sheet_uses_vanilla_count(self):
        assert bucketize(Sheet.from_values([["Year", "Profit"]])) == "Small"


class TestCost:
    def test_upper_figure(self):
        assert sig3(estimate_cost(62000 / 198, 0.03)) == "0.00939"

    def test_lower_figure(self):
        assert sig3(estimate_cost(1548000 / 198, 0.0005)) == "0.00391"

    def test_zero(self):
        assert estimate_cost(0, 0.03) == 0

    def test_negative(self):
        with pytest.raises(ValueError):
            estimate_cost(-1, 0.03)


class TestQa:
    @pytest.mark.parametrize("answer,gold", [
        ("{[B3]}", "B3"), ("SUM(A2:A10)", "sum(a2:a10)"), ("X24 AND X23", "X23 AND X24"),
        ("SUM(B2, A2)", "SUM(A2,B2)"), ("{[ $B$3 ]}", "B3"), ("MAX(SUM(B1,A1),C1)", "MAX(C1,SUM(A1,B1))"),
        ("x23 and x24", "X23 AND X24"),
    ])
    def test_equivalent(self, answer, gold):
        assert score_qa(answer, gold)

    @pytest.mark.parametrize("answer,gold", [
        ("B4", "B3"), ("", "B3"), ("SUB(B2,A2)", "SUB(A2,B2)"), ("X23", "X23 AND X24"), ("SUM(A2:A9)", "SUM(A2:A10)"),
    ])
    def test_not_equivalent(self, answer, gold):
        assert not score_qa(answer, gold)

    def test_accepts_answer_objects(self):
        assert score_qa(QaAnswer("B3", "{[B3]}"), "B3")

    def test_empty_gold(self):
        with pytest.raises(ValueError):
            score_qa("B3", " ")

    def test_normal_form(self):
        assert normalize_answer("{[sum(b2, a2)]}") == frozenset({"SUM(A2,B2)"})


class TestEvaluateDetection:
    def gold(self):
        return parse_detection_gold([{"sheet": "s1", "tables": ["A1:D5", "F1:H9"]},
                                     {"sheet": "s2", "tables": ["A12:C20"], "alt": [["A12:C15", "A17:C20"]]},
                                     {"sheet": "s3", "tables": ["A1:B2"]}])

    def test_perfect(self):
        preds = parse_predictions([{"sheet": "s1", "ranges": ["A1:D5", "F1:H9"]}, {"sheet": "s2", "tables": ["A12:C20"]},
                                   {"sheet": "s3", "ranges": ["A1:B2"]}])
        ev = evaluate_detection(self.gold(), preds)
        assert ev.overall.f1 == 1.0 and ev.excluded == []

    def test_empty_preds(self):
        preds = parse_predictions([{"sheet": s, "ranges": []} for s in ("s1", "s2", "s3")])
        assert evaluate_detection(self.gold(), preds).overall.f1 == 0.0

    def test_mismatched_ids_excluded(self, caplog):
        preds = parse_predictions([{"sheet": "s1", "ranges": ["A1:D5"]}, {"sheet": "zz", "ranges": []}])
        ev = evaluate_detection(self.gold(), preds)
        assert ev.excluded == ["s2", "s3", "zz"]
        assert set(ev.per_sheet) == {"s1"}
        assert "excluding 3" in caplog.text

    def test_bucket_breakdown_sums_to_totals(self):
        preds = parse_predictions([{"sheet": "s1", "ranges": ["A1:D5", "Z1:Z2"]}, {"sheet": "s2", "ranges": ["A12:C15"]},
                                   {"sheet": "s3", "ranges": ["A1:B2"]}])
        ev = evaluate_detection(self.gold(), preds, {"s1": "Small", "s2": "Huge", "s3": "Small"})
        total = ScoreReport()
        for rep in ev.overall.buckets.values():
            total.add(rep)
        assert (total.tp, total.fp, total.fn) == (ev.overall.tp, ev.overall.fp, ev.overall.fn)
        assert ev.overall.buckets["Small"].tp == 2

    def test_csv_and_dict(self):
        preds = parse_predictions([{"sheet": "s1", "ranges": ["A1:D5"]}])
        ev = evaluate_detection(self.gold(), preds)
        lines = ev.to_csv().splitlines()
        assert lines[0] == "scope,tp,fp,fn,precision,recall,f1"
        assert lines[1].startswith("overall,1,0,1,")
        assert ev.to_dict()["sheets"]["s1"]["f1"] == pytest.approx(2 / 3, abs=1e-6)

    @pytest.mark.parametrize("data", [{}, [{"sheet": "s"}], [{"sheet": "s", "tables": "A1"}],
                                      [{"sheet": "s", "tables": ["A1:B"]}]])
    def test_bad_gold(self, data):
        with pytest.raises(InputError):
            parse_detection_gold(data)


class TestCompressionReport:
    def corpus(self):
        body = [[f"item{i}", str(10000 + i), f"{i * 0.5:.2f}"] for i in range(40)]
        return [Sheet.from_values([["Item", "Units", "Price"]] + body),
                Sheet.from_values([["Name", "Score"]] + [["ann", "5"]] * 30)]

    def test_eight_rows(self):
        rep = compression_report(self.corpus())
        assert rep.sheets == 2 and len(rep.rows) == 8
        assert rep.ratio([]) == 1.0
        assert rep.ratio([1, 2, 3]) > rep.ratio([1, 2]) > rep.ratio([1]) > 1

    def test_totals_are_sums(self):
        corpus = self.corpus()
        whole = compression_report(corpus)
        parts = [compression_report([s]) for s in corpus]
        for i, row in enumerate(whole.rows):
            assert row.tokens == sum(p.rows[i].tokens for p in parts)

    def test_serializations(self):
        rep = compression_report(self.corpus())
        assert rep.to_csv().splitlines()[0] == "modules,tokens,ratio"
        assert '"modules": "Module 1&2&3"' in rep.to_json()
