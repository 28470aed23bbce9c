import numpy as np
import pytest

from upbdimer import DimerParams, DriveSpec, locus_quadrature


@pytest.fixture(scope="session")
def locus04():
    pt = locus_quadrature(0.4)
    return DimerParams(Delta=pt.Delta, U=pt.U, J=0.4)


@pytest.fixture
def weak_drive():
    return DriveSpec(F1=0.01, phi=np.pi / 2)
