import pytest

ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_addoption(parser):
    parser.addoption("--long", action="store_true", default=False,
                     help="run the full-scale checks (hours, large memory)")


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


def pytest_collection_modifyitems(config, items):
    if config.getoption("--long"):
        return
    skip = pytest.mark.skip(reason="needs --long")
    for item in items:
        if "long" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash[ACCEPTANCE_LINES]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
