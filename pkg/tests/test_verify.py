import pytest

from apmetric.verify import SUITES, Check, run_suite


@pytest.mark.parametrize("name", ["sade", "prcko", "weight-equiv", "contraction", "transfer"])
def test_suite_passes(name):
    rows = run_suite(name)
    assert rows and all(isinstance(r, Check) for r in rows)
    assert all(r.passed for r in rows), [r.to_dict() for r in rows if not r.passed]
    assert all(r.citation for r in rows)


def test_rows_serialise():
    row = run_suite("telescoping")[0].to_dict()
    assert set(row) == {"suite", "name", "passed", "margin", "detail", "citation"}


def test_unknown_suite():
    with pytest.raises(KeyError, match="unknown suite"):
        run_suite("nope")
    assert "all" not in SUITES
