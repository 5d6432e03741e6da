import logging

import pytest

from gridcompress.compress import encode_compressed
from gridcompress.encoding import encode_vanilla
from gridcompress.errors import ConfigError, LlmError, PipelineError
from gridcompress.grid import CellAddress, CellRange, Sheet, parse_range
from gridcompress.llm import MockClient, MockRule
from gridcompress.pipeline import (
    PipelineConfig, chunk_windows, first_answer, parse_answer, parse_ranges, predict_header, run_cos_qa,
    run_detection, split_and_answer, translate_expression,
)


def sales_sheet() -> Sheet:
    vals = [["Region", "Q1", "Q2"]]
    for i, name in enumerate(["North", "South", "East", "West", "Central", "Coast", "Hills", "Plains", "Lakes"]):
        vals.append([name, str(100 + i * 11), str(200 + i * 13)])
    return Sheet.from_values(vals)


def tall_sheet() -> Sheet:
    vals = [["Item", "Units", "Price"]]
    vals += [[f"item{i}", str(10000 + i), f"{i * 1.5:.2f}"] for i in range(58)]
    vals.append(["Total", "", ""])
    return Sheet.from_values(vals)


class TestParsing:
    @pytest.mark.parametrize("raw,expected", [
        ("[{'range': 'A1:F9'}]", ["A1:F9"]),
        ('[{"range": "a1:f9"}, {"range": "A12:F18"}]', ["A1:F9", "A12:F18"]),
        ("[A1:F9,A12:F18]", ["A1:F9", "A12:F18"]),
        ("Sure! The tables are [{'range': 'B2:C4'}] as requested", ["B2:C4"]),
        ("I could not find any table.", []),
        ("[not, ranges]", []),
    ])
    def test_ranges(self, raw, expected):
        ranges, bad = parse_ranges(raw)
        assert ranges == [parse_range(x) for x in expected] and bad == []

    def test_bad_entries_reported(self):
        ranges, bad = parse_ranges("[{'range': 'A1:B2'}, {'range': 'ZZZZ1'}]")
        assert ranges == [parse_range("A1:B2")] and bad == ["ZZZZ1"]

    @pytest.mark.parametrize("raw,expr", [("{[B3]}", "B3"), ("The answer is {[SUM(A2:A10)]}.", "SUM(A2:A10)"),
                                          ("B3", ""), ("{[ C4 ]} and {[D5]}", "C4")])
    def test_answer(self, raw, expr):
        assert parse_answer(raw).expression == expr


class TestDetection:
    def test_identity_map(self):
        client = MockClient(["[{'range': 'A1:C10'}]"])
        result = run_detection(sales_sheet(), client=client)
        assert result.ranges == (parse_range("A1:C10"),) and result.noncontiguous == (False,)
        prompt = client.calls[0].prompt
        assert prompt.startswith("INSTRUCTION:") and "(Region|A1)" in prompt
        assert "[Encoded Spreadsheet]" not in prompt

    def test_gap_spanning_range_maps_to_hull(self):
        # anchors 0, 1, 58, 59 with k=4 keep rows 0-5 and 54-59
        s = tall_sheet()
        assert encode_compressed(s, [1]).coord_map.kept_rows == tuple(range(6)) + tuple(range(54, 60))
        client = MockClient(["[{'range': 'A1:C12'}, {'range': 'A1:C6'}, {'range': 'A1:C13'}]"])
        result = run_detection(s, client=client)
        assert result.ranges == (parse_range("A1:C60"), parse_range("A1:C6"))
        assert result.noncontiguous == (True, False)
        assert result.dropped == ("A1:C13",)

    def test_prose_response(self):
        result = run_detection(sales_sheet(), client=MockClient(["There is one table."]))
        assert result.ranges == () and result.raw_response == "There is one table."

    def test_request_parameters(self):
        client = MockClient(["[]"])
        run_detection(sales_sheet(), client=client)
        req = client.calls[0]
        assert (req.temperature, req.max_tokens, req.top_p) == (0.0, 300, 0.95)

    def test_missing_client(self):
        with pytest.raises(ConfigError):
            run_detection(sales_sheet())

    def test_client_failure_propagates(self):
        with pytest.raises(LlmError):
            run_detection(sales_sheet(), client=MockClient([]))

    def test_deterministic(self):
        outs = []
        for _ in range(3):
            client = MockClient(["[{'range': 'A1:C10'}]"])
            outs.append((run_detection(tall_sheet(), client=client).to_dict(), client.calls[0].prompt))
        assert outs[0] == outs[1] == outs[2]


class TestCosQa:
    def test_two_stages(self):
        client = MockClient(["[{'range': 'A1:C10'}]", "{[B3]}"])
        out = run_cos_qa(sales_sheet(), "What was Q1 in South?", client=client)
        assert out.answer.expression == "B3" and not out.split
        assert out.region == parse_range("A1:C10")
        assert len(client.calls) == 2
        stage1, stage2 = client.calls[0].prompt, client.calls[1].prompt
        assert stage1.endswith("\n\nQUESTION: What was Q1 in South?\n")
        assert "(Region|A1), (Q1|B1)" in stage1 and "(IntNum|" in stage1
        assert "(IntNum|" not in stage2
        assert "|A1,Region|B1,Q1|C1,Q2" in stage2

    def test_stage2_addresses_use_sheet_coordinates(self):
        vals = [[""] * 5 for _ in range(3)] + [["", "", "Name", "Score", ""], ["", "", "ann", "5", ""]]
        client = MockClient(["[{'range': 'C4:D5'}]", "{[D5]}"])
        run_cos_qa(Sheet.from_values(vals), "Ann's score?", client=client)
        assert "|C4,Name|D4,Score\n|C5,ann|D5,5\n" in client.calls[1].prompt

    @pytest.mark.parametrize("stage1", ["no idea", "[{'range': 'A1:C99'}]"])
    def test_stage1_failure_skips_stage2(self, stage1):
        client = MockClient([stage1, "{[B3]}"])
        with pytest.raises(PipelineError) as err:
            run_cos_qa(sales_sheet(), "q", client=client)
        assert err.value.stage == "stage1"
        assert len(client.calls) == 1

    def test_empty_question(self):
        with pytest.raises(ValueError):
            run_cos_qa(sales_sheet(), "  ", client=MockClient([]))

    def test_split_path(self):
        client = MockClient(["[{'range': 'A1:C10'}]"], rules=[MockRule("|A2,West", "{[B2]}")],
                            fallback=lambda req: "not here")
        out = run_cos_qa(sales_sheet(), "Q1 in West?", PipelineConfig(gate=10), client)
        assert out.split and out.region_tokens > 10
        assert len(out.chunks) == 3
        # chunk 1 holds region rows 4-6; its local row 2 is sheet row 5
        assert out.answer.expression == "B5"
        assert [c.body_rows for c in out.chunks] == [(1, 3), (4, 6), (7, 9)]
        assert len(client.calls) == 4


class TestSplit:
    def test_windows(self):
        assert chunk_windows(9) == [(0, 3), (3, 6), (6, 9)]
        assert chunk_windows(10) == [(0, 3), (3, 6), (6, 9), (9, 10)]
        assert chunk_windows(0) == []
        assert chunk_windows(5, window=3, stride=2) == [(0, 3), (2, 5), (4, 5)]

    def test_nine_body_rows_three_chunks(self):
        client = MockClient(fallback=lambda req: "{[A2]}")
        chunks = split_and_answer("q", sales_sheet(), client)
        assert len(chunks) == 3
        for c in client.calls:
            assert "|A1,Region|B1,Q1|C1,Q2\n" in c.prompt
            assert c.prompt.count("\n|A") == 4
        assert [c.answer.expression for c in chunks] == ["A2", "A5", "A8"]

    def test_header_only_region(self, caplog):
        region = Sheet.from_values([["Name", "Score"]])
        with caplog.at_level(logging.WARNING):
            chunks = split_and_answer("q", region, MockClient(fallback=lambda r: "{[A1]}"))
        assert chunks == []
        assert "whole region" in caplog.text

    def test_parallel_matches_serial(self):
        def answer(req):
            return "{[B2]}" if "|A2,North" in req.prompt or "|A4,Coast" in req.prompt else "{[C3]}"
        serial = split_and_answer("q", sales_sheet(), MockClient(fallback=answer))
        parallel = split_and_answer("q", sales_sheet(), MockClient(fallback=answer), PipelineConfig(parallelism=4))
        assert serial == parallel

    def test_first_answer(self):
        client = MockClient(["nothing", "{[C3]}", "{[B2]}"])
        chunks = split_and_answer("q", sales_sheet(), client)
        assert first_answer(chunks).expression == "C6"
        assert first_answer([]).expression == ""


class TestHeader:
    def test_single_header_row(self):
        assert predict_header(sales_sheet()) == 1

    def test_two_header_rows(self):
        s = Sheet.from_values([["", "2023", "2023"], ["Region", "Q1", "Q2"], ["North", "1", "2"], ["South", "3", "4"]])
        assert predict_header(s) == 2

    def test_default_when_no_numeric_body(self):
        assert predict_header(Sheet.from_values([["a", "b"], ["c", "d"]])) == 1
        assert predict_header(Sheet.from_values([["1", "2"], ["3", "4"]])) == 1


class TestTranslate:
    def test_rows_and_origin(self):
        assert translate_expression("B2", [0, 4, 5, 6], CellAddress(2, 2)) == "D7"

    def test_functions_and_ranges(self):
        assert translate_expression("SUM(B2:B4)", [0, 4, 5, 6], CellAddress(0, 0)) == "SUM(B5:B7)"

    def test_absolute_markers_kept(self):
        assert translate_expression("$B$2", [0, 9], CellAddress(0, 0)) == "$B$10"

    def test_out_of_chunk_left_alone(self):
        assert translate_expression("B9", [0, 1], CellAddress(0, 0)) == "B9"

    def test_function_named_like_address(self):
        assert translate_expression("LOG10(B2)", [0, 3], CellAddress(0, 0)) == "LOG10(B4)"


class TestConfig:
    @pytest.mark.parametrize("kw", [{"gate": 0}, {"window": 0}, {"stride": 0}, {"parallelism": 0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            PipelineConfig(**kw)

    def test_gate_is_inclusive(self):
        region = sales_sheet()
        tokens = encode_vanilla(region).token_count
        at = run_cos_qa(region, "q", PipelineConfig(gate=tokens), MockClient(["[A1:C10]", "{[B2]}"]))
        below = run_cos_qa(region, "q", PipelineConfig(gate=tokens - 1), MockClient(["[A1:C10]"], fallback=lambda r: "x"))
        assert not at.split and below.split
        assert CellRange(0, 0, 9, 2) == at.region == below.region
