import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from alluvial_lab.core import extract_features  # noqa: E402
from alluvial_lab.generator import GeneratorConfig, generate_corpus  # noqa: E402
from alluvial_lab.layout import order_columns  # noqa: E402


@pytest.fixture(scope="session")
def corpus45():
    return generate_corpus(GeneratorConfig(seed=1), 45)


@pytest.fixture(scope="session")
def features45(corpus45):
    return [extract_features(d, order_columns(d)) for d in corpus45]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
