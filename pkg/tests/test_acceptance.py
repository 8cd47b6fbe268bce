"""Acceptance criteria 1-13 at their stated tolerances.

Each test prints one ``criterion NN [PASS|FAIL] name`` line (shown with
``pytest -s``).  Run ``python tests/test_acceptance.py``
to print all thirteen lines without pytest.
"""

import contextlib
import io
import sys

import pytest

from carlteleport.cli import main
from carlteleport.verification import CRITERIA, DEFAULT_SEED, CriterionResult, run_criterion

DETERMINISM_FILES = ("verification.json", "verification.txt")


def run_verify_twice(base):
    with contextlib.redirect_stdout(io.StringIO()):
        codes = [main(["verify-all", "--out", str(base / name), "--seed", str(DEFAULT_SEED)])
                 for name in ("first", "second")]
    identical = {f: (base / "first" / f).read_bytes() == (base / "second" / f).read_bytes() for f in DETERMINISM_FILES}
    return CriterionResult(13, "determinism", all(identical.values()), {"exit_codes": codes, "identical": identical})


@pytest.fixture(scope="module")
def determinism(tmp_path_factory):
    return run_verify_twice(tmp_path_factory.mktemp("verify"))


class TestAcceptance:
    @pytest.mark.parametrize("cid", sorted(CRITERIA))
    def test_criterion(self, cid):
        result = run_criterion(cid)
        print(result.line())
        assert result.passed, result.values

    def test_criterion_13_determinism(self, determinism):
        print(determinism.line())
        assert determinism.passed, determinism.values


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    lines = [run_criterion(cid).line() for cid in sorted(CRITERIA)]
    with tempfile.TemporaryDirectory() as tmp:
        lines.append(run_verify_twice(Path(tmp)).line())
    print("\n".join(lines))
    sys.exit(0 if all("[PASS]" in line for line in lines) else 1)
