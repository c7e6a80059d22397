import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from greenlame import enumerate_branch_points, make_lattice

settings.register_profile(
    "repo", derandomize=True, deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

# rectangular, rectangular, generic, near-hexagonal (g2 ~ 3e-6)
TORI = (1j, 1.1j, 0.3 + 1.2j, 0.5 + 0.8660254j)
NONSINGULAR = (1j, 1.1j, 0.3 + 1.2j)
HEX = 0.5 + 0.8660254j

_lattices = {}
_points = {}


def lattice(tau):
    if tau not in _lattices:
        _lattices[tau] = make_lattice(tau)
    return _lattices[tau]


def branch_points(tau, n):
    if (tau, n) not in _points:
        _points[tau, n] = enumerate_branch_points(n, lattice(tau))
    return _points[tau, n]


def cell_points(L, count, seed, margin=0.05):
    """Points ``r + s tau`` with ``r, s`` uniform in ``[margin, 1 - margin]``."""
    rng = np.random.default_rng(seed)
    r, s = rng.uniform(margin, 1 - margin, size=(2, count))
    return r + s * L.tau


def random_configuration(L, n, rng, sep=0.08):
    """``n`` points, away from the lattice, each other and their negatives."""
    from greenlame.elliptic import torus_distance

    while True:
        r, s = rng.uniform(0, 1, size=(2, n))
        a = r + s * L.tau
        d = [torus_distance(x, 0.0, L) for x in a] + [torus_distance(x, -x, L) for x in a]
        d += [torus_distance(a[i], a[j], L) for i in range(n) for j in range(i)]
        d += [torus_distance(a[i], -a[j], L) for i in range(n) for j in range(i)]
        if min(d) > sep:
            return a


@pytest.fixture(params=TORI, ids=lambda t: f"tau={t}")
def any_lattice(request):
    return lattice(request.param)


@pytest.fixture(params=NONSINGULAR, ids=lambda t: f"tau={t}")
def regular_lattice(request):
    return lattice(request.param)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
