import numpy as np
import pytest

from bergman_lab.domains import (Annulus, Ball, General, Polydisc, Product, TangentVector,
                                 as_point, contains, domain_from_json)


def test_disc_contains_center_and_excludes_boundary():
    d = Ball(1)
    assert contains(d, [0j])
    assert not contains(d, [1.0 + 0j])


def test_annulus_contains_shell_point():
    a = Annulus(0.5)
    assert contains(a, [0.7 + 0j])
    assert not contains(a, [0.3 + 0j])
    assert not contains(a, [1.2 + 0j])


def test_contains_rejects_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        contains(Ball(2), [0.1 + 0j])


def test_annulus_radius_validated():
    with pytest.raises(ValueError):
        Annulus(1.5)
    with pytest.raises(ValueError):
        Annulus(0.0)


def test_ball_volume_and_box():
    assert Ball(2).volume() == pytest.approx(np.pi ** 2 / 2)
    assert Polydisc(3).volume() == pytest.approx(np.pi ** 3)
    assert Annulus(0.5).volume() == pytest.approx(np.pi * 0.75)
    assert len(Ball(2).bounding_box()) == 4


def test_product_concatenates_coordinates():
    p = Product((Ball(1), Annulus(0.5)))
    assert p.dim == 2
    assert p.contains([0.2 + 0j, 0.7 + 0j])
    assert not p.contains([0.2 + 0j, 0.2 + 0j])
    assert p.volume() == pytest.approx(np.pi * np.pi * 0.75)


def test_json_round_trip():
    for dom in (Ball(2), Polydisc(3), Annulus(0.25), Product((Ball(1), Polydisc(2)))):
        again = domain_from_json(dom.to_json())
        assert again == dom


def test_json_unknown_kind_rejected():
    with pytest.raises(ValueError, match="kind"):
        domain_from_json({"kind": "torus", "dim": 1})


def test_general_domain_indicator_and_sampling(rng):
    halfdisc = General(dim=1, box=((0.0, 1.0), (-1.0, 1.0)),
                       indicator_fn=lambda p: (np.abs(p[..., 0]) < 1.0) & (p[..., 0].real > 0))
    assert halfdisc.contains([0.5 + 0.1j])
    assert not halfdisc.contains([-0.5 + 0j])
    pts = halfdisc.sample_interior(rng, 25)
    assert pts.shape == (25, 1)
    assert np.all(halfdisc.indicator(pts))


def test_sample_interior_respects_margin(rng):
    pts = Ball(1).sample_interior(rng, 200, margin=0.3)
    assert np.max(np.abs(pts)) < 0.7 + 1e-12


def test_tangent_vector_shape_checks():
    v = TangentVector([0.1 + 0j, 0.2j], [1.0, 0.0])
    assert v.base.shape == v.dir.shape == (2,)
    assert not v.is_zero
    with pytest.raises(ValueError):
        TangentVector([0.1 + 0j], [1.0, 2.0])


def test_as_point_coerces_scalars():
    p = as_point(0.5)
    assert p.shape == (1,) and p.dtype == complex
