import json
import math

from hypothesis import given, strategies as st

from scl.report import Record, VerificationReport


def sample_report():
    rep = VerificationReport(fixture="flat4", seed=3)
    rep.add("torsion", "connection is torsion free", 1e-16, 1e-10)
    rep.add("ricci", "Ricci vanishes", 2e-3, 1e-8)
    rep.scale_ledger["reduced_form_factor"] = 0.5
    rep.diagnostics["split"] = 1.5
    rep.notes.append("a note")
    return rep


def test_empty_report_skeleton():
    data = VerificationReport().to_dict()
    assert data == {"fixture": None, "seed": None, "overall": True, "records": [],
                    "scale_ledger": {}, "diagnostics": {}, "notes": []}


def test_record_verdicts():
    assert Record("a", "", 1e-10, 1e-10).passed
    assert not Record("a", "", 2e-10, 1e-10).passed
    assert not Record("a", "", math.nan, 1.0).passed
    assert not Record("a", "", math.inf, 1.0).passed
    assert Record("a", "b", 0.0, 1.0).to_dict() == {"identity": "a", "anchor": "b", "residual": 0.0,
                                                   "tol": 1.0, "pass": True}


def test_overall_and_lookup():
    rep = sample_report()
    assert not rep.overall
    assert "ricci" in rep and "other" not in rep
    assert rep.record("torsion").passed


def test_json_round_trip_is_exact():
    rep = sample_report()
    text = rep.to_json()
    again = VerificationReport.from_json(text)
    assert again.to_json() == text
    assert text.endswith("\n")
    assert list(json.loads(text)) == sorted(json.loads(text))


def test_text_has_one_line_per_record():
    lines = sample_report().to_text().splitlines()
    assert lines[0] == "fixture: flat4  seed: 3"
    assert lines[1].startswith("PASS  torsion") and lines[2].startswith("FAIL  ricci")
    assert lines[-1] == "overall: FAIL"
    assert "scale   reduced_form_factor = 0.5" in lines


def test_extend_merges_without_duplicate_notes():
    a, b = sample_report(), sample_report()
    a.extend(b)
    assert len(a.records) == 4 and a.notes == ["a note"]


@given(st.lists(st.tuples(st.text(min_size=1, max_size=8),
                          st.floats(min_value=0, max_value=1e6, allow_nan=False),
                          st.floats(min_value=1e-16, max_value=1.0)), max_size=6))
def test_round_trip_property(entries):
    rep = VerificationReport(fixture="x", seed=0)
    for name, res, tol in entries:
        rep.add(name, "anchor", res, tol)
    again = VerificationReport.from_json(rep.to_json())
    assert again.to_dict() == rep.to_dict()
    assert again.overall == all(res <= tol for _, res, tol in entries)
