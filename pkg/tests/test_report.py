"""Deterministic serialization and schema validation."""
import json

import numpy as np
import pytest

from latspec.eigen import eigenvalues_outside_band
from latspec.errors import SpecError
from latspec.lattice import LatticeDomain, LatticeOperator, Potential
from latspec.oscillation import count_bound_states
from latspec.report import Table, csv_text, dumps, format_float, report_csv, report_write, validate_report
from latspec.schemas import available, load, validate
from latspec.theorems import bargmann_check, v_squared_comparison


def test_format_float():
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(2.0) == "2.0"
    assert format_float(float("nan")) == "nan" and format_float(-float("inf")) == "-inf"
    assert float(format_float(1 / 3)) == 1 / 3


def test_dumps_sorted_and_stable():
    a = dumps({"b": 1, "a": [np.float64(0.5), np.int64(2), True, None]})
    b = dumps({"a": [0.5, 2, True, None], "b": 1})
    assert a == b and a.endswith("\n")
    assert json.loads(a) == {"a": [0.5, 2, True, None], "b": 1}
    assert json.loads(dumps({"x": float("inf")}))["x"] == "inf"


def test_csv_header_and_cells():
    text = csv_text(["x", "flag"], [[0.25, True], {"x": 1.0, "flag": False}])
    assert text.splitlines() == ["x,flag", "0.25,true", "1.0,false"]


def test_spectral_report_csv_columns():
    V = Potential.from_sites(LatticeDomain.half_line(50), [((1,), 3.0)])
    rep = eigenvalues_outside_band(LatticeOperator(V.domain, V))
    lines = report_csv(rep).splitlines()
    assert lines[0] == "index,eigenvalue,side,gap_to_band" and len(lines) == 2


def test_generic_csv_fallback():
    r = bargmann_check(Potential.from_sites(LatticeDomain.half_line(20), [((2,), 0.25)]))
    lines = report_csv(r).splitlines()
    assert lines[0] == "field,value" and "sum,0.5" in lines


def test_reports_validate_against_schemas():
    V = Potential.from_sites(LatticeDomain.half_line(60), [((1,), 3.0)])
    for rep in (eigenvalues_outside_band(LatticeOperator(V.domain, V)), count_bound_states(V),
                bargmann_check(V), v_squared_comparison(V),
                Table("oscillation_sweep", ["lambda", "above"], [[0.1, 0]])):
        validate_report(rep)


def test_schema_violation_has_pointer():
    with pytest.raises(SpecError) as err:
        validate({"report_type": "bargmann_result", "sum": "x"}, "bargmann_result")
    assert err.value.pointer.startswith("/")


def test_all_schemas_are_valid_documents():
    import jsonschema

    names = available()
    assert {"potential_spec", "run_config", "scoreboard", "spectral_report"} <= set(names)
    for n in names:
        jsonschema.Draft202012Validator.check_schema(load(n))


def test_report_write_identical_bytes(tmp_path):
    V = Potential.from_rule(LatticeDomain.half_line(300), lambda n: 2.0 / n)
    rep = eigenvalues_outside_band(LatticeOperator(V.domain, V))
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    report_write(rep, p1)
    report_write(eigenvalues_outside_band(LatticeOperator(V.domain, V)), p2)
    assert p1.read_bytes() == p2.read_bytes()
    with pytest.raises(ValueError):
        report_write(rep, p1, "xml")


def test_report_write_surfaces_io_errors(tmp_path):
    with pytest.raises(OSError):
        report_write({"report_type": "x"}, tmp_path / "missing" / "out.json")
