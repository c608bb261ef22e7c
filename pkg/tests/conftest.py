import pytest

import quadwalk as qw
from quadwalk.model import QuadrantModel, StepDistribution


@pytest.fixture(scope="session")
def reference():
    return qw.load_model("reference")


@pytest.fixture(scope="session")
def nonsym():
    return qw.load_model("nonsym")


@pytest.fixture(scope="session")
def symmetric():
    return qw.load_model("symmetric")


@pytest.fixture(scope="session")
def ref_analysis(reference):
    return qw.analyze(reference)


@pytest.fixture(scope="session")
def ref_chain_x(reference, ref_analysis):
    return qw.solve_chain(reference, "x1", x_root=ref_analysis.x1)


@pytest.fixture(scope="session")
def ref_chain_y(reference, ref_analysis):
    return qw.solve_chain(reference, "y2", x_root=ref_analysis.y1)


@pytest.fixture(scope="session")
def ref_table(reference):
    """Medium-tolerance Green table from (1, 1), shared by the green and
    asymptotics tests; target set covers the panels every test reads."""
    targets = [(i, j) for i in range(0, 8) for j in range(0, 8)]
    targets += [(1, j) for j in range(8, 29)]
    targets += [(i, 1) for i in range(8, 29)]
    targets += [(i, round(i * 0.63)) for i in range(4, 28)]
    return qw.green_exact(reference, (1, 1), targets, tol=1e-7)


@pytest.fixture(scope="session")
def ref_escape(reference, ref_analysis):
    return qw.escape_exact(
        reference, ref_analysis.t0, sources=[(1, 1), (0, 0), (2, 2)], tol=1e-8
    )


def make_model(interior, vert=None, horiz=None, corner=None, k0=1):
    """Assemble a k0=1 model from offset->probability dicts."""
    interior = StepDistribution(interior, floor=(-k0, -k0))
    vert = StepDistribution(vert or {(1, 1): 0.5, (0, 1): 0.5}, floor=(0, -k0))
    horiz = StepDistribution(horiz or {(1, 1): 0.5, (1, 0): 0.5}, floor=(-k0, 0))
    corner = StepDistribution(corner or {(1, 1): 1.0}, floor=(0, 0))
    return QuadrantModel(k0, interior, [horiz], [vert], [[corner]])


NONSYM_INTERIOR = {(1, 0): 1 / 6, (0, -1): 3 / 8, (-1, 0): 1 / 3, (0, 1): 1 / 8}
