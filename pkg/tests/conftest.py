from pathlib import Path

import numpy as np
import pytest

from ohmwell.basis import build_basis, build_grid, default_panels, project_initial
from ohmwell.materials import build_material_field, build_ohm_law

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def make_setup(m, L=np.pi, material=None, ohm=None, q=8, panels=None):
    grid = build_grid(L, q, panels or default_panels(m))
    mat = build_material_field(material or {"kind": "constant"}, grid.nodes)
    law = build_ohm_law(ohm or {"kind": "zero"}, L)
    basis = build_basis(m, grid, mat)
    return grid, mat, law, basis


def project(basis, mat, e0, h0=None):
    x = basis.grid.nodes
    h = np.zeros_like(x) if h0 is None else h0(x)
    return project_initial(basis, mat, e0(x), h)


@pytest.fixture
def config_dir():
    return CONFIG_DIR
