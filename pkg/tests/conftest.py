import sys
from pathlib import Path

from hypothesis import settings

# property suites: 100 cases each, seed fixed in helpers.PROPERTY_SEED
settings.register_profile("hjdp", max_examples=100, deadline=None, print_blob=True)
settings.load_profile("hjdp")

sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
