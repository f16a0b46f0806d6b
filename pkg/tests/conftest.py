from pathlib import Path

import pytest

import percosim as ps


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_c"):
        return
    number, _, slug = name[len("test_c"):].partition("_")
    status = "PASS" if report.passed else "FAIL"
    print(f"\nACCEPTANCE {int(number)} ({slug}): {status}")

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

# stub21 letters A..U map alphabetically onto 0..20
STUB21 = {chr(ord("A") + i): i for i in range(21)}
# neighborhood16 letters map alphabetically onto 0..15
NEIGH16 = dict(zip("EGHIJKLMNOPQRSTU", range(16)))


@pytest.fixture
def neighborhood_graph():
    return ps.read_edge_list(ps.fixture_path("neighborhood16.edges"))


@pytest.fixture
def stub_graph():
    return ps.read_edge_list(ps.fixture_path("stub21.edges"))


@pytest.fixture
def three_paths_graph():
    return ps.read_edge_list(ps.fixture_path("three_paths.edges"))


@pytest.fixture
def line10_graph():
    return ps.load_graph([(i, i + 1, 2) for i in range(9)])
