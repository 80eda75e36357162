import pytest

from philr.verify import Check, run_suite


@pytest.mark.parametrize("suite", ["identity", "frechet", "sandwich", "bounds"])
@pytest.mark.parametrize("seed", [0, 3])
def test_suites_pass(suite, seed):
    checks = run_suite(suite, seed)
    assert checks
    bad = [(c.name, c.measured, c.bound) for c in checks if not c.passed]
    assert not bad


def test_check_slack_and_failure():
    c = Check("s", "n", 2.0, 1.0)
    assert c.slack == -1.0 and not c.passed
    assert not Check("s", "n", float("nan"), 1.0).passed
    assert Check("s", "n", 1.0, 1.0).as_dict()["passed"]


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("nope")
