from fluxtube.properties import SUITES, bdg_suite, gauge_suite, table_suite


def test_gauge_suite_small():
    res = gauge_suite(n=15)
    assert all(c["passed"] for c in res.values()), res


def test_bdg_suite_small():
    res = bdg_suite(n=8)
    assert all(c["passed"] for c in res.values()), res


def test_table_suite():
    assert table_suite()["table1_totality"]["passed"]


def test_suite_registry():
    assert set(SUITES) == {"gauge", "operators", "bdg", "table1", "trace"}
