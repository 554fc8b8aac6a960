from math import sqrt

import numpy as np
import pytest

from conftest import small_scenario
from sgtumor.chaos import Projector, build_basis, build_quadrature
from sgtumor.scenarios import (NAMES, Numerics, check_scenario, dump_scenario, load_scenario_file,
                               make_scenario, node_initial, node_species_initial,
                               parse_config_text, sample_initial)


def at(sc, r, z):
    return float(sc.initial(np.array([r]), np.array([0.0]), z)[0])


def test_catalogue_builds_and_validates():
    for name in NAMES:
        sc = make_scenario(name)
        assert sc.grid().shape == (44, 44)
    assert make_scenario("testIb").dim == 2
    assert make_scenario("testIII").species is not None


def test_test_ia_profile():
    sc = make_scenario("testIa")
    assert at(sc, 0.0, 0.0) == pytest.approx(0.15, abs=1e-15)
    assert at(sc, 0.55, 0.0) == pytest.approx(0.35, abs=1e-15)
    assert at(sc, 0.0, 1.0) == pytest.approx(0.05, abs=1e-15)
    assert at(sc, 0.8, 0.0) == 0.0
    # ramp between r1 and r2 at z = 0 reaches core + 1/ramp_div
    assert at(sc, 0.5, 0.0) == pytest.approx(0.35, abs=1e-15)
    assert float(sc.closure.cutoff(np.array([1.0]))[0]) == pytest.approx(0.91, abs=1e-15)


def test_test_ii_and_iii_profiles():
    sc = make_scenario("testII")
    assert at(sc, 0.0, 0.0) == pytest.approx(0.2, abs=1e-15)
    assert at(sc, 0.0, 1.0) == pytest.approx(0.3, abs=1e-15)
    assert at(sc, 0.45, 0.0) == pytest.approx(0.1, abs=1e-15)
    s3 = make_scenario("testIII")
    P, Q, D = s3.species_initial(np.array([0.0]), np.array([0.0]), 0.0)
    assert D[0] == pytest.approx(0.15) and P[0] + Q[0] + D[0] == pytest.approx(0.3)
    assert P[0] == pytest.approx(0.55 * 0.15)


def test_origin_coefficients():
    sc = make_scenario("testIa")
    space = sc.space
    proj = Projector(build_basis(space, 3), build_quadrature(space, 16))
    coeffs = sample_initial(sc, proj)
    i = sc.grid().column_index(0.0)
    assert coeffs[0, i, i] == pytest.approx(0.15, abs=1e-14)
    assert coeffs[1, i, i] == pytest.approx(-0.1 / sqrt(3), abs=1e-14)
    assert np.abs(coeffs[2:, i, i]).max() < 1e-14


def test_cell_average_of_linear_data_is_centre_value():
    sc = make_scenario("testIa", {"subcells": 8})
    flat = make_scenario("testIa", {"subcells": 1})
    i = sc.grid().column_index(0.0)
    a = node_initial(sc, [0.3])
    b = node_initial(flat, [0.3])
    assert a[i, i] == pytest.approx(b[i, i], abs=1e-15)
    assert a.sum() == pytest.approx(b.sum(), rel=0.05)


def test_species_parts_sum_to_total():
    sc = small_scenario("testIII")
    for z in (-0.9, 0.0, 0.7):
        P, Q, D = node_species_initial(sc, [z])
        assert np.abs(P + Q + D - node_initial(sc, [z])).max() < 1e-14
        assert min(P.min(), Q.min(), D.min()) >= 0


def test_overrides():
    sc = make_scenario("testII", {"numerics.m": "12", "params.core": 0.25, "dt": 5e-4})
    assert sc.numerics.m == 12.0 and sc.params["core"] == 0.25 and sc.numerics.dt == 5e-4
    sc = make_scenario("testIa", {"snapshots": "0.1, 0.2", "epsilon": "none"})
    assert sc.numerics.snapshots == (0.1, 0.2) and sc.numerics.epsilon is None
    with pytest.raises(KeyError):
        make_scenario("testII", {"nonsense": 1})
    with pytest.raises(KeyError):
        make_scenario("testII", {"solver.m": 1})
    with pytest.raises(KeyError):
        make_scenario("nope")
    for bad in ({"m": 1.0}, {"dt": -1.0}, {"coupling": "x"}, {"outer_ramp": "flat"}):
        with pytest.raises(ValueError):
            make_scenario("testIa", bad)


def test_validation_rejects_bad_data():
    with pytest.raises(ValueError, match="boundary"):
        make_scenario("testII", {"a": -0.6, "b": 0.6})
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        make_scenario("testII", {"core": 1.5})
    sc = make_scenario("testII", {"core": 1.5}, validate=False)
    with pytest.raises(ValueError):
        check_scenario(sc)


def test_numerics_helpers():
    n = Numerics(T=0.5, dt=1e-3)
    assert n.steps == 500
    assert n.snapshot_times() == [0.25, 0.5]


def test_config_round_trip(tmp_path):
    sc = make_scenario("testIa", {"m": 40.0, "T": 0.3, "spread": 0.25, "snapshots": (0.1, 0.3)})
    path = tmp_path / "sc.cfg"
    path.write_text(dump_scenario(sc))
    name, over = load_scenario_file(path)
    again = make_scenario(name, over)
    assert again.numerics == sc.numerics and again.params == sc.params


def test_config_parse_errors(tmp_path):
    assert parse_config_text("# c\n m = 3 # tail\n\nT=1") == {"m": "3", "T": "1"}
    with pytest.raises(ValueError, match="line 2"):
        parse_config_text("m = 3\nbroken")
    with pytest.raises(ValueError):
        parse_config_text("= 4")
    p = tmp_path / "x.cfg"
    p.write_text("m = 3\n")
    with pytest.raises(ValueError, match="scenario"):
        load_scenario_file(p)
