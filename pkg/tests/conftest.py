import pytest

from aldual.instance import MiqpInstance
from aldual.numkit import RatMat, RatVec


def d1_instance() -> MiqpInstance:
    """Reference instance: two integer variables on [-3,3]^2, objective
    x1^2 + x2^2, one dualized row x1 + x2 = 1.  Ground truth (by
    enumeration and hand KKT): integer optimum 1 at (0,1), relaxation
    optimum 1/2 at (1/2,1/2) with multiplier (1)."""
    return MiqpInstance(
        Q=RatMat([[2, 0], [0, 2]]),
        c=RatVec([0, 0]),
        A=RatMat([[1, 1]]),
        b=RatVec([1]),
        E=RatMat([[1, 0], [-1, 0], [0, 1], [0, -1]]),
        f=RatVec([3, 3, 3, 3]),
        n1=0,
        n2=2,
    )


@pytest.fixture
def d1() -> MiqpInstance:
    return d1_instance()
