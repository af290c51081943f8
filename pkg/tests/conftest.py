import numpy as np
import pytest

from fourier_shap import ProductMeasure, TensorBasis, random_sparse_model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_basis(rng, cards):
    return TensorBasis(ProductMeasure.random(cards, rng))


def random_model(rng, cards, n_entries, max_order=None):
    basis = random_basis(rng, cards)
    return random_sparse_model(basis, n_entries, rng, max_order=max_order)


def xy_table():
    """Dense table of ``h(x1, x2) = x1 + 2 x2 + x1 x2`` on two binary features."""
    return np.array([0.0, 2.0, 1.0, 4.0])


_RESULTS = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Recorder for one acceptance criterion; a test that raises is recorded as failing."""
    results = request.config.stash.setdefault(_RESULTS, [])
    seen = []

    def record(number, ok, detail):
        seen.append(number)
        results.append((number, bool(ok), detail))
        return bool(ok)

    yield record
    if not seen:
        results.append((request.node.name, False, "raised before reporting"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(results, key=lambda r: str(r[0]).zfill(3)):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
