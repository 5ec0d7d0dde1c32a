import os

import pytest

pytest_plugins = (
    "tests.fix_mypy",
    "tests.fix_faker",
)

HERE = os.path.dirname(os.path.abspath(__file__))


def pytest_configure(config):
    # register slow marker
    config.addinivalue_line(
        "markers", "slow: this test is kinda slow (skip with -m 'not slow')"
    )


def pytest_addoption(parser):
    parser.addoption(
        "--corpus-dir",
        metavar="PATH",
        default=os.environ.get(
            "COMMCSL_CORPUS", os.path.join(HERE, "..", "corpus")
        ),
        help="The corpus of annotated programs to test"
        " [default: $COMMCSL_CORPUS or the corpus in the source tree].",
    )


def pytest_report_header(config):
    rv = [f"corpus: {os.path.normpath(config.getoption('--corpus-dir'))}"]
    workers = os.environ.get("COMMCSL_WORKERS")
    if workers:
        rv.append(f"workers: {workers}")
    return rv


@pytest.fixture(scope="session")
def corpus_dir(request):
    """Return the path of the corpus of annotated programs."""
    path = request.config.getoption("--corpus-dir")
    if not os.path.isdir(path):
        pytest.skip(f"corpus not found: {path}")
    return path
