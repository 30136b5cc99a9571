"""
End-to-end checks of the command line: artifacts, manifest hashes and exit codes.

Usage:
  pytest test_cli.py
  python test_cli.py
"""

import hashlib
import inspect
import json
import tempfile
from pathlib import Path

import pandas as pd

from cli import EXIT_CAP, EXIT_INPUT, EXIT_OK, main as run_cli

GROUPS = Path(__file__).parent / "groups"
Z2Z2 = str(GROUPS / "z2z2.grp")


def read_manifest(out: Path) -> dict:
    return json.loads((out / "manifest.json").read_text(encoding="utf-8"))


def test_trees_writes_artifacts_and_manifest(tmp_path):
    assert run_cli(["trees", "-n", "2", "--out", str(tmp_path)]) == EXIT_OK
    lines = (tmp_path / "trees.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 3
    manifest = read_manifest(tmp_path)
    assert len(manifest["config_hash"]) == 64
    for entry in manifest["artifacts"]:
        data = (tmp_path / entry["path"]).read_bytes()
        assert hashlib.sha256(data).hexdigest() == entry["sha256"]


def test_ball_radius_below_n_is_an_input_error(tmp_path):
    assert run_cli(["ball", "-g", Z2Z2, "-R", "1", "--out", str(tmp_path)]) == EXIT_INPUT


def test_ball_output_is_deterministic(tmp_path):
    first, second = tmp_path / "one", tmp_path / "two"
    assert run_cli(["ball", "-g", Z2Z2, "-R", "4", "--out", str(first)]) == EXIT_OK
    assert run_cli(["ball", "-g", Z2Z2, "-R", "4", "--out", str(second)]) == EXIT_OK
    for name in ("ball.jsonl", "ball.dot"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    assert len((first / "ball.jsonl").read_text(encoding="utf-8").splitlines()) == 3


def test_ball_cap_exit_code(tmp_path):
    code = run_cli(["ball", "-g", Z2Z2, "-R", "4", "--cap-ball", "2", "--out", str(tmp_path)])
    assert code == EXIT_CAP


def test_reduce_given_basis(tmp_path):
    assert run_cli(["reduce", "-g", Z2Z2, "--basis", "ε; 1:1", "--out", str(tmp_path)]) == EXIT_OK
    payload = json.loads((tmp_path / "reduce.json").read_text(encoding="utf-8"))
    assert payload["start"] == [[], [[1, 1]]]
    assert len(payload["steps"]) == 1
    assert payload["steps"][0]["norm"] == 2


def test_reduce_rejects_bad_letters(tmp_path):
    assert run_cli(["reduce", "-g", Z2Z2, "--basis", "ε; 3:1", "--out", str(tmp_path)]) == EXIT_INPUT


def test_verify_homology_suite(tmp_path):
    assert run_cli(["verify", "-g", Z2Z2, "--suite", "homology", "--out", str(tmp_path)]) == EXIT_OK
    summary = pd.read_csv(tmp_path / "verify" / "summary.csv")
    assert list(summary["suite"]) == ["homology"]
    assert bool(summary["passed"].iloc[0])
    report = json.loads((tmp_path / "verify" / "homology.json").read_text(encoding="utf-8"))
    assert report["passed"] is True
    assert report["checks"] == 4


def test_verify_unknown_suite(tmp_path):
    assert run_cli(["verify", "-g", Z2Z2, "--suite", "nope", "--out", str(tmp_path)]) == EXIT_INPUT


def test_corrupted_group_file(tmp_path):
    bad = tmp_path / "bad.grp"
    bad.write_text("factor table A 2\n0 1\n1 1\nfactor cyclic 2\n", encoding="utf-8")
    out = tmp_path / "out"
    assert run_cli(["ball", "-g", str(bad), "--out", str(out)]) == EXIT_INPUT
    assert not (out / "manifest.json").exists()


def test_missing_group_file(tmp_path):
    assert run_cli(["ball", "-g", str(tmp_path / "absent.grp"), "--out", str(tmp_path)]) == EXIT_INPUT


def main() -> None:
    tests = [value for name, value in sorted(globals().items()) if name.startswith("test_") and callable(value)]
    print("=" * 60)
    print("COMMAND LINE")
    print("=" * 60)
    failed = 0
    for test in tests:
        try:
            if inspect.signature(test).parameters:
                with tempfile.TemporaryDirectory() as tmp:
                    test(Path(tmp))
            else:
                test()
            print(f"✅ {test.__name__}")
        except Exception as exc:
            failed += 1
            print(f"❌ {test.__name__}: {exc!r}")
    print("=" * 60)
    print("✅ ALL TESTS PASSED" if not failed else f"❌ {failed} TEST(S) FAILED")


if __name__ == "__main__":
    main()
