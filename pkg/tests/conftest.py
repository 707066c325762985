import pytest

from cganlab import scenarios

# criterion number -> (status, title, detail); printed once at the end of the session
ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


def record(number: int, title: str, passed: bool, detail: str, *, warn_only: bool = False) -> None:
    status = "PASS" if passed else ("WARN" if warn_only else "FAIL")
    ACCEPTANCE[number] = (status, title, detail)
    print(f"criterion {number:2d} {status}: {title} ({detail})")


class ScenarioRunner:
    """Runs scenarios once per (name, preset, seed) and keeps the result and output directory."""

    def __init__(self, factory):
        self.factory = factory
        self.cache = {}

    def run(self, name, preset="desk", seed=0):
        key = (name, preset, seed)
        if key not in self.cache:
            out = self.factory.mktemp(f"{name}-{preset}-{seed}")
            self.cache[key] = (scenarios.run_scenario(name, preset=preset, seed=seed, out_dir=out), out)
        return self.cache[key]


@pytest.fixture(scope="session")
def runner(tmp_path_factory):
    return ScenarioRunner(tmp_path_factory)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{status} {n:2d}. {title}: {detail}")
