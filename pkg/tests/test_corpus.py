import numpy as np
import pytest

from srharmonic import corpus
from srharmonic.domain import GridDomain
from srharmonic.errors import InputError
from srharmonic.forms import darboux_derivative, horizontality_residual, restrict
from srharmonic.heisenberg import HeisenbergMap, recover_Y
from srharmonic.variational import normal_certificate


@pytest.mark.parametrize("name", corpus.names())
def test_entries_build(name):
    entry = corpus.build(name, 21 if "interval" in name or "geodesic" in name else 12)
    assert entry.f.shape == entry.domain.shape + (3,)
    assert np.all(np.isfinite(entry.f))
    assert "horizontal" in entry.expected


@pytest.mark.parametrize("name", [n for n in corpus.names() if not n.startswith("grad")])
def test_expected_classes(name):
    entry = corpus.build(name)
    dom, st = entry.domain, entry.structure
    a = darboux_derivative(dom, st.algebra, entry.f)
    horiz = np.abs(horizontality_residual(dom, st, a, restricted=False)[dom.interior_mask]).max()
    h = max(dom.spacing)
    assert (horiz <= 10 * h ** 2) == entry.expected["horizontal"]
    if "normal" in entry.expected:
        cert = normal_certificate(dom, st, restrict(dom, a))
        assert (cert.residual_norm <= 5 * h ** 2) == entry.expected["normal"]
        _, rep = recover_Y(dom, st, cert, HeisenbergMap.from_map_field(entry.f))
        assert (max(rep["pde_residual_max"], rep["divY_max"]) <= 5 * h ** 2) == entry.expected["normal"]


def test_unknown():
    with pytest.raises(InputError):
        corpus.build("nope")
    with pytest.raises(InputError):
        corpus.regularity_form("nope", GridDomain.torus((4, 4)))
    with pytest.raises(InputError):
        corpus.regularity_form("zero", GridDomain.interval(4))
