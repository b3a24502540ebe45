import os

from hypothesis import HealthCheck, settings

# "dev" keeps runs quick; HYPOTHESIS_PROFILE=thorough for a longer soak
settings.register_profile("dev", max_examples=60, deadline=None, suppress_health_check=(HealthCheck.too_slow,))
settings.register_profile("thorough", max_examples=1000, deadline=None, suppress_health_check=(HealthCheck.too_slow,))
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "dev"))

import stat
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
EXERCISES = ROOT / "exercises"
REFERENCE = ROOT / "scripts" / "reference_candidate.py"


@pytest.fixture
def make_candidate(tmp_path):
    """Write an executable Python candidate from source text and return its path."""

    def make(source, name="candidate"):
        path = tmp_path / name
        path.write_text(f"#!{sys.executable}\n{source}")
        path.chmod(path.stat().st_mode | stat.S_IXUSR)
        return path

    return make


@pytest.fixture
def reference_candidate(make_candidate):
    def make(construction):
        source = f"import runpy, sys\nsys.argv = ['ref', {construction!r}]\nrunpy.run_path({str(REFERENCE)!r}, run_name='__main__')\n"
        return make_candidate(source, f"ref_{construction}")

    return make


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module and module.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in module.RESULTS:
            terminalreporter.write_line(line)
