import pytest

from phifam.fixtures import FIXTURES, run_fixture


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_fixture_checks_pass(name):
    rows = run_fixture(name)
    failed = [r.name for r in rows if not r.passed]
    assert not failed, failed


def test_unknown_fixture():
    with pytest.raises(KeyError):
        run_fixture("example9")
