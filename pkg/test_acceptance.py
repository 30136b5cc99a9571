"""
Acceptance suites on small free products, run with reduced sample counts.

The full-size runs belong to `python cli.py verify`; these keep the same
checks within a test-suite time budget.
"""

from pathlib import Path

import numpy as np
import pytest

from config import load_run_config
from group_core import load_group_file
from verification import (
    SUITES,
    run_suite,
    suite_f_standard,
    suite_fixed_points,
    suite_homology,
    suite_join_decomposition,
    suite_lift_restrict,
    suite_local_contractibility,
    suite_minimal_vertex,
    suite_names,
    suite_peak_reduction,
    suite_stabilizers,
    suite_trees,
    suite_word_length,
)

GROUPS = Path(__file__).parent / "groups"
CONFIG = load_run_config(seed=0)


def group(name):
    return load_group_file(GROUPS / f"{name}.grp")


def rng():
    return np.random.default_rng(0)


def assert_passed(report):
    assert report.passed, report.failures[:3]
    assert report.checks > 0


def test_suite_selection():
    assert suite_names("all") == list(SUITES)
    assert suite_names("trees, homology") == ["trees", "homology"]
    with pytest.raises(ValueError):
        suite_names("trees,nope")


def test_trees_against_naive_generator():
    assert_passed(suite_trees(group("z2z2"), CONFIG, rng(), max_n=5))


def test_minimal_vertex_is_unique():
    for name in ("z2z2", "z2z3", "z2z2z2"):
        assert_passed(suite_minimal_vertex(group(name), CONFIG, rng()))


def test_peak_reduction_reaches_standard_basis():
    for name in ("z2z3", "z2z2z2"):
        assert_passed(suite_peak_reduction(group(name), CONFIG, rng(), samples=5, max_moves=4))


def test_local_contractibility():
    for name in ("z2z2", "z2z3"):
        assert_passed(suite_local_contractibility(group(name), CONFIG, rng()))


def test_stabilizer_of_base_vertex():
    for name in ("z2z2", "z3z3"):
        report = suite_stabilizers(group(name), CONFIG, rng(), samples=5)
        assert_passed(report)
        assert report.checks == 6


def test_finite_order_elements_fix_a_vertex():
    assert_passed(suite_fixed_points(group("z2z2"), CONFIG, rng()))


def test_f_standard_matches_reduced():
    assert_passed(suite_f_standard(group("z2z2"), CONFIG, rng(), count=2))


def test_word_length_splits_by_block():
    assert_passed(suite_word_length(group("z2z2"), CONFIG, rng(), count=2))


def test_lift_restrict_has_no_failures():
    report = suite_lift_restrict(group("z2z2"), CONFIG, rng(), count=2)
    assert report.passed, report.failures[:3]


def test_lift_restrict_meets_quota_on_three_factors():
    report = suite_lift_restrict(group("z2z2z2"), CONFIG, rng(), count=0)
    assert_passed(report)
    assert not report.warnings


def test_lift_restrict_shortfall_is_a_failure():
    report = suite_lift_restrict(group("z2z2z2"), CONFIG, rng(), count=0, samples=10_000)
    assert not report.passed
    assert report.failures[-1]["required"] == 10_000


def test_join_decomposition():
    assert_passed(suite_join_decomposition(group("z2z2"), CONFIG, rng(), count=2))


def test_join_decomposition_meets_quota_on_four_factors():
    report = suite_join_decomposition(group("z2z2z2z2"), CONFIG, rng(), count=0)
    assert_passed(report)


def test_homology_fixtures():
    report = suite_homology(group("z2z2"), CONFIG, rng())
    assert_passed(report)
    assert report.checks == 4


def test_run_suite_records_time():
    report = run_suite("homology", group("z2z2"), CONFIG)
    assert report.passed
    assert report.seconds >= 0
    assert report.to_dict()["name"] == "homology"


def main() -> None:
    tests = [value for name, value in sorted(globals().items()) if name.startswith("test_") and callable(value)]
    print("=" * 60)
    print("ACCEPTANCE SUITES")
    print("=" * 60)
    failed = 0
    for test in tests:
        try:
            test()
            print(f"✅ {test.__name__}")
        except Exception as exc:
            failed += 1
            print(f"❌ {test.__name__}: {exc!r}")
    print("=" * 60)
    print("✅ ALL TESTS PASSED" if not failed else f"❌ {failed} TEST(S) FAILED")


if __name__ == "__main__":
    main()
