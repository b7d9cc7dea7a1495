import math
import os
from pathlib import Path

import pytest

import cohort_copilot as cc

DATA_DIR = Path(os.environ.get("COHORT_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))
FIXTURE = Path(__file__).resolve().parents[2] / "tests" / "data" / "five_cases.jsonl"


@pytest.fixture(scope="module")
def catalog():
    return cc.Catalog.from_file(DATA_DIR / "desk_catalog.json")


def test_catalog_loads(catalog):
    assert len(catalog) == 21
    assert "cases.samples.tissue_type" in catalog.field_names()
    assert len(cc.Catalog.from_manifest(catalog.manifest())) == len(catalog)


def test_null_filter_hash():
    assert cc.canonical_hash({"op": "and", "content": []}) == "ae60de4d1944765f7a9b720fa83a4f78"


def test_generated_filters_validate_and_hash(catalog):
    corpus = cc.generate(catalog, 50, seed=42)
    assert len(corpus) == 50
    assert len({s["hash"] for s in corpus}) == 50
    for sample in corpus:
        assert cc.validate(sample["filter"], catalog)["valid"]
        assert cc.canonical_hash(sample["filter"]) == sample["hash"]
        assert sample["query"] == cc.verbalize(sample["filter"], catalog)


def test_generation_is_seeded(catalog):
    assert cc.generate(catalog, 10, seed=3) == cc.generate(catalog, 10, seed=3)


def test_validate_reports_unknown_field(catalog):
    report = cc.validate(
        {"op": "and", "content": [{"op": "in", "content": {"field": "cases.bogus", "value": ["x"]}}]}, catalog
    )
    assert report["valid"] is False
    assert report["issues"]


def test_malformed_filter_raises(catalog):
    with pytest.raises(cc.FilterSyntaxError):
        cc.canonicalize("{not json")
    with pytest.raises(cc.CohortError):
        cc.canonicalize({"op": "or", "content": []})


def test_parse_round_trip(catalog):
    parser = cc.QueryParser(catalog)
    for sample in cc.generate(catalog, 20, seed=9):
        parsed, confidence = cc.parse_query(sample["query"], parser)
        assert confidence == "exact"
        assert cc.canonicalize(parsed) == cc.canonicalize(sample["filter"])


def test_automaton(catalog):
    fsm = cc.FilterAutomaton(catalog)
    assert fsm.accepts('{"op":"and","content":[]}')
    assert not fsm.accepts('{"op":"and","content":[}')


def test_execute_fixture(catalog):
    index = cc.CaseIndex.from_file(FIXTURE, catalog)
    assert len(index) == 5
    tumor = {"op": "and", "content": [{"op": "in", "content": {"field": "cases.samples.tissue_type", "value": ["tumor"]}}]}
    assert cc.execute(tumor, index) == ["case-1", "case-3", "case-4"]
    assert len(cc.execute({"op": "and", "content": []}, index)) == 5


def test_metrics_and_statistics():
    tpr, iou, exact = cc.set_metrics(["a", "b", "c"], ["b", "c", "d"])
    assert tpr == pytest.approx(2 / 3)
    assert iou == 0.5
    assert exact is False
    assert cc.token_f1("cases with lung cancer", "lung adenocarcinoma cases") == pytest.approx(4 / 7, abs=1e-12)
    stat, p = cc.mcnemar(5, 15)
    assert stat == 5.0
    assert p == pytest.approx(math.erfc(math.sqrt(2.5)), abs=1e-4)
    assert cc.paired_t_test([0.2, -0.1, 0.3, 0.1, 0.0]) == pytest.approx(0.23019964108049873, abs=1e-6)
    assert cc.bonferroni(0.5, 4) == 1.0
    with pytest.raises(cc.ContractError):
        cc.set_metrics(["a"], [])
