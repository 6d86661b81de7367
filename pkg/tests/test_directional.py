import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpptess import InvalidParameter
from fpptess.directional import (
    Isotropic,
    Mixture,
    SymmetricAtoms,
    mean_positive_part,
    parse_phi,
    sample_direction,
    zonoid_support,
)

AXES = SymmetricAtoms([(np.array([1.0, 0.0]), 0.5), (np.array([0.0, 1.0]), 0.5)])
coord = st.floats(-3.0, 3.0, allow_nan=False)
vec2 = st.tuples(coord, coord).map(np.array)
MODELS = [Isotropic(2), AXES, Isotropic(3),
          Mixture([(Isotropic(2), 0.3), (AXES, 0.7)])]


def test_isotropic_mean_positive_part():
    assert mean_positive_part(Isotropic(2), [1.0, 0.0]) == pytest.approx(1 / math.pi)
    assert mean_positive_part(Isotropic(2), [0.0, 0.0]) == 0.0


def test_isotropic_quadrature_constants():
    # E[(U_1)_+] = Gamma(d/2) / (2 sqrt(pi) Gamma((d+1)/2))
    for d in (3, 4, 5, 7):
        exact = math.gamma(d / 2) / (2 * math.sqrt(math.pi) * math.gamma((d + 1) / 2))
        e1 = np.eye(d)[0]
        assert mean_positive_part(Isotropic(d), e1) == pytest.approx(exact, rel=1e-8)


def test_isotropic_monte_carlo_consistency():
    rng = np.random.default_rng(0)
    for d in (2, 3):
        x = np.arange(1.0, d + 1.0)
        u = Isotropic(d).sample(rng, 2_000_000)
        vals = np.maximum(u @ x, 0.0)
        se = vals.std() / math.sqrt(len(vals))
        assert abs(vals.mean() - mean_positive_part(Isotropic(d), x)) < 4 * se


def test_atom_examples():
    assert mean_positive_part(AXES, [1.0, 1.0]) == pytest.approx(0.5)
    assert zonoid_support(AXES, 4.0, [1.0, 1.0]) == pytest.approx(4.0)
    assert zonoid_support(Isotropic(2), math.pi, [1.0, 0.0]) == pytest.approx(2.0)
    assert zonoid_support(AXES, 4.0, [0.0, 0.0]) == 0.0


def test_atoms_symmetrized_and_normalized():
    phi = SymmetricAtoms([(np.array([1.0, 0.0]), 2.0), (np.array([0.0, 1.0]), 2.0)])
    assert phi.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert phi.directions.shape == (4, 2)
    assert np.allclose(phi.directions[:2], -phi.directions[2:])


def test_great_subsphere_rejected():
    with pytest.raises(InvalidParameter):
        SymmetricAtoms([(np.array([1.0, 0.0]), 1.0)])
    with pytest.raises(InvalidParameter):
        SymmetricAtoms([(np.array([1.0, 0.0, 0.0]), 1.0), (np.array([0.0, 1.0, 0.0]), 1.0)])


def test_sampling_frequencies():
    rng = np.random.default_rng(1)
    u = AXES.sample(rng, 10_000)
    for atom in ([1, 0], [-1, 0], [0, 1], [0, -1]):
        freq = np.mean(np.all(u == atom, axis=1))
        assert abs(freq - 0.25) < 0.02
    iso = Isotropic(2).sample(rng, 100_000)
    assert np.all(np.abs(iso.mean(axis=0)) < 3 * np.sqrt(0.5 / 100_000))
    iso3 = Isotropic(3).sample(rng, 100_000)
    assert np.allclose(np.einsum("ij,ij->i", iso3, iso3), 1.0)


def test_sample_direction_deterministic():
    a = sample_direction(Isotropic(2), np.random.default_rng(5))
    b = sample_direction(Isotropic(2), np.random.default_rng(5))
    assert np.array_equal(a, b)


def test_dimension_mismatch():
    with pytest.raises(InvalidParameter):
        mean_positive_part(Isotropic(2), [1.0, 0.0, 0.0])


@pytest.mark.parametrize("phi", MODELS, ids=lambda p: p.to_spec())
@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_support_function_properties(phi, data):
    d = phi.dim
    x = np.array(data.draw(st.lists(coord, min_size=d, max_size=d)))
    y = np.array(data.draw(st.lists(coord, min_size=d, max_size=d)))
    lam = data.draw(st.floats(-5.0, 5.0))
    h = lambda v: zonoid_support(phi, 1.7, v)
    assert h(x) == pytest.approx(h(-x), abs=1e-10)
    assert h(lam * x) == pytest.approx(abs(lam) * h(x), abs=1e-10)
    assert h(x + y) <= h(x) + h(y) + 1e-10


def test_parse_round_trip():
    for text in ("isotropic", "isotropic:3", "atoms:1,1:1;1,-1:1",
                 "mixture:0.5*isotropic|0.5*atoms:1,0:1"):
        phi = parse_phi(text)
        again = parse_phi(phi.to_spec())
        x = np.array([0.3, -1.2, 0.5][:phi.dim])
        assert mean_positive_part(again, x) == pytest.approx(mean_positive_part(phi, x), rel=1e-12)
    assert parse_phi("atoms:1,1:1;1,-1:1").directions[0] == pytest.approx([2 ** -0.5, 2 ** -0.5])
    for bad in ("circle", "atoms:1,0", "mixture:isotropic", "atoms:0,0:1"):
        with pytest.raises(InvalidParameter):
            parse_phi(bad)
