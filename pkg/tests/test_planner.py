import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ramanqa.errors import PlanError, PlanParseError
from ramanqa.evalsuite import load_benchmark_questions
from ramanqa.families import CANONICAL_CENTERS
from ramanqa.planner import (
    ContextFilters,
    MockPlannerProvider,
    build_prompt,
    extract_first_object,
    instantiate_template,
    load_mock_templates,
    parse_plan_response,
    plan,
)
from ramanqa.providers import StaticChatProvider
from ramanqa.store import validate_sql


class TestContextFilters:
    def test_unordered_range_rejected(self):
        with pytest.raises(PlanError):
            ContextFilters(ts_range=(5, 1))

    def test_unknown_family_rejected(self):
        with pytest.raises(PlanError):
            ContextFilters(families=("d", "q9"))

    def test_json_round_trip(self):
        f = ContextFilters(
            ts_range=(0, 10),
            coords=((0, 0), (15, 15)),
            families=("d", "g"),
            qualifiers=("at early cycles",),
        )
        assert ContextFilters.from_json(f.to_json()) == f

    def test_empty_description(self):
        assert ContextFilters().describe() == "no filters"


class TestBuildPrompt:
    def test_contains_schema_and_families(self):
        prompt = build_prompt("Which timestep has the highest D/G ratio?")
        assert "samples(id, ts, x, y)" in prompt.system
        assert "peaks(id, sample_id, family, center, height, width)" in prompt.system
        for family in CANONICAL_CENTERS:
            assert family in prompt.system

    def test_contains_both_exemplars(self):
        prompt = build_prompt("anything")
        assert "d.height / g.height" in prompt.system  # derived-ratio self-join
        assert "JOIN samples b ON b.x = a.x AND b.y = a.y" in prompt.system

    def test_filters_serialized_into_constraints(self):
        prompt = build_prompt("q", ContextFilters(ts_range=(0, 10)))
        assert "timesteps between 0 and 10" in prompt.user
        assert '"ts_range": [0, 10]' in prompt.user

    def test_empty_filters_say_none(self):
        prompt = build_prompt("q")
        assert "no filters" in prompt.user

    def test_empty_question_rejected(self):
        with pytest.raises(PlanError):
            build_prompt("  ")


class TestExtractFirstObject:
    CASES = [
        ('{"a": 1}', '{"a": 1}'),
        ('prose before {"a": {"b": 2}} prose after', '{"a": {"b": 2}}'),
        ('text {"s": "has } brace"} end', '{"s": "has } brace"}'),
        ('{"s": "escaped \\" quote }"} tail', '{"s": "escaped \\" quote }"}'),
        ('{"x": 1} {"y": 2}', '{"x": 1}'),
    ]

    @pytest.mark.parametrize("raw,expected", CASES)
    def test_known_extractions(self, raw, expected):
        assert extract_first_object(raw) == expected

    def test_unbalanced_rejected(self):
        with pytest.raises(PlanParseError):
            extract_first_object('{"a": ')

    def test_no_object_rejected(self):
        with pytest.raises(PlanParseError):
            extract_first_object("no braces here")

    @settings(max_examples=100, deadline=None)
    @given(
        payload=st.dictionaries(
            st.text(st.characters(max_codepoint=127), min_size=1, max_size=8),
            st.one_of(
                st.integers(),
                st.text(st.characters(max_codepoint=127), max_size=20),
            ),
            max_size=4,
        ),
        prefix=st.text(
            st.characters(max_codepoint=127, exclude_characters="{}"), max_size=30
        ),
        suffix=st.text(st.characters(max_codepoint=127), max_size=30),
    )
    def test_round_trips_json_wrapped_in_prose(self, payload, prefix, suffix):
        block = json.dumps(payload)
        raw = prefix + block + suffix
        assert json.loads(extract_first_object(raw)) == payload


class TestParsePlanResponse:
    def test_well_formed(self):
        raw = json.dumps({"sql": "SELECT 1", "lit_query": "carbon"})
        p = parse_plan_response(raw)
        assert p.sql == "SELECT 1"
        assert p.lit_query == "carbon"
        assert p.planner_raw == raw

    def test_missing_lit_query_names_field(self):
        with pytest.raises(PlanParseError, match="lit_query"):
            parse_plan_response(json.dumps({"sql": "SELECT 1"}))

    def test_empty_sql_rejected(self):
        with pytest.raises(PlanParseError, match="sql"):
            parse_plan_response(json.dumps({"sql": " ", "lit_query": "x"}))

    def test_prose_wrapped_response(self):
        raw = 'Sure! Here is the plan: {"sql": "SELECT 1", "lit_query": "q"} hope it helps'
        p = parse_plan_response(raw)
        assert p.sql == "SELECT 1"

    def test_raw_preserved_byte_for_byte(self):
        raw = '  padding {"sql": "SELECT 1", "lit_query": "q"}\n\ttrailing  '
        assert parse_plan_response(raw).planner_raw == raw


class TestPlan:
    def test_mock_dg_question_self_joins_with_family_filters(self):
        provider = MockPlannerProvider()
        p = plan("Which timestep has the highest D/G ratio", None, provider)
        assert "JOIN peaks d" in p.sql and "JOIN peaks g" in p.sql
        assert "d.family = 'd'" in p.sql and "g.family = 'g'" in p.sql
        assert p.validated is not None

    def test_mutating_response_repaired_then_hard_error(self):
        provider = StaticChatProvider(
            json.dumps({"sql": "DROP TABLE samples", "lit_query": "x"})
        )
        with pytest.raises(PlanError, match="twice"):
            plan("whatever", None, provider)
        assert len(provider.calls) == 2
        assert "rejected" in provider.calls[1][1]

    def test_repair_round_trip_recovers(self):
        provider = StaticChatProvider(
            [
                json.dumps({"sql": "DELETE FROM peaks", "lit_query": "x"}),
                json.dumps({"sql": "SELECT COUNT(*) FROM peaks", "lit_query": "x"}),
            ]
        )
        p = plan("whatever", None, provider)
        assert p.sql == "SELECT COUNT(*) FROM peaks"

    def test_benchmark_a9_template_instantiation(self):
        questions = {q.qid: q for q in load_benchmark_questions()}
        provider = MockPlannerProvider()
        p = plan(questions[9].text, None, provider)
        expected = (
            "SELECT s.x, s.y, p.height FROM samples s "
            "JOIN peaks p ON p.sample_id = s.id "
            "WHERE p.family = 'a1g_c' AND s.ts = 30 "
            "AND ((s.x = 0 AND s.y = 0) OR (s.x = 15 AND s.y = 15)) "
            "AND 1=1 ORDER BY s.x, s.y"
        )
        assert p.sql == expected

    def test_determinism(self):
        provider = MockPlannerProvider()
        f = ContextFilters(ts_range=(2, 9))
        a = plan("Which timestep has the highest D/G ratio?", f, provider)
        b = plan("Which timestep has the highest D/G ratio?", f, provider)
        assert a.sql == b.sql and a.lit_query == b.lit_query


class TestMockProvider:
    def test_every_benchmark_question_hits_its_own_template(self):
        questions = load_benchmark_questions()
        templates = load_mock_templates()
        provider = MockPlannerProvider(templates)
        by_qid = {t["qid"]: t for t in templates}
        for q in questions:
            prompt = build_prompt(q.text)
            raw = provider.complete(prompt.system, prompt.user)
            got = json.loads(raw)
            assert not got.get("fallback", False), f"qid {q.qid} fell back"
            want = instantiate_template(by_qid[q.qid]["sql"], ContextFilters())
            assert got["sql"] == want, f"qid {q.qid} matched the wrong template"

    def test_all_templates_validate(self):
        for t in load_mock_templates():
            sql = instantiate_template(t["sql"], ContextFilters())
            q = validate_sql(sql)
            assert q.referenced_tables <= {"samples", "peaks"}

    def test_templates_validate_with_ts_filter(self):
        f = ContextFilters(ts_range=(0, 10))
        for t in load_mock_templates():
            validate_sql(instantiate_template(t["sql"], f))

    def test_filter_faithfulness_ts_predicate_present(self):
        f = ContextFilters(ts_range=(3, 7))
        for t in load_mock_templates():
            sql = instantiate_template(t["sql"], f)
            assert "(s.ts >= 3 AND s.ts <= 7)" in sql, t["qid"]

    def test_unmatched_question_returns_flagged_fallback(self):
        provider = MockPlannerProvider()
        p = plan("what is the meaning of life?", None, provider)
        assert p.fallback
        assert p.validated is not None

    def test_same_question_same_plan(self):
        provider = MockPlannerProvider()
        prompt = build_prompt("completely novel question about nothing")
        assert provider.complete(prompt.system, prompt.user) == provider.complete(
            prompt.system, prompt.user
        )
