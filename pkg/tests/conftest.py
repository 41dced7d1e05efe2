import numpy as np
import pytest

from renyi_ci.bounds import Decomposition
from renyi_ci.prob_core import Dist

ACCEPTANCE_REPORT: dict[int, str] = {}


def random_feasible_decomposition(rng: np.random.Generator, pi: np.ndarray, n_w: int = 2) -> Decomposition:
    """Random decomposition whose induced joint is exactly ``pi``.

    Mixes a random conditionally independent model with point-mass components
    (one per cell of ``pi``) that absorb the remainder.
    """
    nx, ny = pi.shape
    pw = rng.dirichlet(np.ones(n_w))
    px = rng.dirichlet(np.ones(nx), size=n_w)
    py = rng.dirichlet(np.ones(ny), size=n_w)
    induced = np.einsum("w,wx,wy->xy", pw, px, py)
    with np.errstate(divide="ignore"):
        lam = rng.uniform(0.2, 0.95) * np.min(np.where(induced > 0, pi / induced, np.inf))
    rest = pi - lam * induced
    rest = np.maximum(rest, 0.0)
    cells = [(x, y) for x in range(nx) for y in range(ny) if rest[x, y] > 0]
    weights = [lam * w for w in pw] + [rest[x, y] for x, y in cells]
    rows_x = list(px) + [np.eye(nx)[x] for x, _ in cells]
    rows_y = list(py) + [np.eye(ny)[y] for _, y in cells]
    w = np.array(weights)
    return Decomposition(Dist(w / w.sum()), np.array(rows_x), np.array(rows_y))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_REPORT):
        terminalreporter.write_line(ACCEPTANCE_REPORT[key])
