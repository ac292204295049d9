import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spinann import crossbar as xb

G_ON = 1 / 20e3


def random_pair(rng, rows, cols, R=140.0):
    g = rng.uniform(G_ON / 6, G_ON, (rows, cols))
    sign = rng.integers(-1, 2, (rows, cols))
    gp = np.where(sign > 0, g, xb.G_OFF_DEFAULT)
    gn = np.where(sign < 0, g, xb.G_OFF_DEFAULT)
    return xb.CrossbarPair(gp, gn, R_neuron=rng.uniform(0, R, cols), dummy=rng.uniform(1e-7, G_ON, rows))


def test_one_by_one_divider():
    pair = xb.CrossbarPair(np.array([[G_ON]]), np.array([[xb.G_OFF_DEFAULT]]), R_neuron=140.0)
    expected = G_ON * 0.1 / (1 + 140 * G_ON)  # 5 uA / 1.007
    assert expected == pytest.approx(4.9652e-6, rel=1e-4)
    assert xb.column_current(pair, [0.1], 0) == pytest.approx(expected, rel=1e-14)
    assert xb.nodal_solve(pair, [0.1])[0] == pytest.approx(expected, rel=1e-12)


def test_no_load_is_plain_sum(rng):
    pair = random_pair(rng, 5, 3).with_(R_neuron=0.0)
    v = rng.uniform(0, 0.1, 5)
    np.testing.assert_allclose(xb.column_currents(pair, v), v @ pair.G_pos, rtol=1e-15)


def test_gamma_point_zero_seven():
    g = np.full((10, 1), 5e-5)  # column total 5e-4 S
    pair = xb.CrossbarPair(g, np.full_like(g, xb.G_OFF_DEFAULT), R_neuron=140.0)
    assert pair.gamma("pos")[0] == pytest.approx(0.07, rel=1e-12)
    v = np.full(10, 0.1)
    assert xb.column_current(pair, v, 0) == pytest.approx(5e-4 * 0.1 / 1.07, rel=1e-14)


def test_nodal_oracle_random_instances(rng):
    for _ in range(30):
        r, c = rng.integers(1, 17, 2)
        pair = random_pair(rng, r, c)
        v = rng.uniform(0, 0.1, r)
        for which in ("pos", "neg"):
            a = xb.column_currents(pair, v, which)
            b = xb.nodal_solve(pair, v, which)
            np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-22)
            assert all(xb.column_current(pair, v, j, which) == pytest.approx(a[j], rel=1e-12) for j in range(c))


def test_zero_drive_zero_current(rng):
    pair = random_pair(rng, 4, 3)
    assert np.all(xb.nodal_solve(pair, np.zeros(4)) == 0.0)
    assert np.all(xb.column_currents(pair, np.zeros(4)) == 0.0)


@given(arrays(float, 6, elements=st.floats(0, 0.1)), st.floats(0, 1))
def test_linear_in_drive(v, alpha):
    pair = random_pair(np.random.default_rng(0), 6, 4)
    np.testing.assert_allclose(
        xb.column_currents(pair, alpha * v), alpha * xb.column_currents(pair, v), rtol=1e-12, atol=1e-24
    )


def test_negative_array_sign(rng):
    pair = random_pair(rng, 4, 3)
    v = rng.uniform(0, 0.1, 4)
    assert np.all(xb.column_currents(pair, v, "neg") <= 0)


def test_dimension_and_range_errors(rng):
    pair = random_pair(rng, 4, 3)
    with pytest.raises(xb.CrossbarError):
        xb.column_current(pair, np.zeros(5), 0)
    with pytest.raises(xb.CrossbarError):
        xb.column_current(pair, np.zeros(4), 3)
    with pytest.raises(xb.CrossbarError):
        xb.RowDrive(np.array([0.2]))
    with pytest.raises(xb.CrossbarError):
        xb.CrossbarPair(np.full((1, 1), G_ON), np.full((1, 1), G_ON))


def test_split_unit_weight():
    m = xb.WeightMapping()
    pair = xb.split_signed(np.array([[1.0]]), m)
    assert pair.G_pos[0, 0] == pytest.approx(5e-5, rel=1e-15)
    assert pair.G_neg[0, 0] == xb.G_OFF_DEFAULT
    zero = xb.split_signed(np.zeros((3, 2)), m)
    assert np.all(zero.G_pos == xb.G_OFF_DEFAULT) and np.all(zero.G_neg == xb.G_OFF_DEFAULT)
    with pytest.raises(xb.CrossbarError):
        xb.split_signed(np.array([[1.5]]), m)


@given(arrays(float, (6, 4), elements=st.floats(-1, 1)))
def test_split_sign_exclusive(W):
    pair = xb.split_signed(W, xb.WeightMapping())
    tol = xb.G_OFF_DEFAULT * 1e-9
    assert not np.any((pair.G_pos > xb.G_OFF_DEFAULT + tol) & (pair.G_neg > xb.G_OFF_DEFAULT + tol))


def test_signed_currents_match_matrix_product(rng):
    # levels at or above the device floor map exactly; the OFF state leaks G_off
    m = xb.WeightMapping()
    W = rng.choice([-1, -0.5, -0.25, 0, 0.25, 0.5, 1], (8, 5))
    pair = xb.split_signed(W, m)
    v = rng.uniform(0, 0.1, 8)
    signed = xb.column_currents(pair, v, "pos") + xb.column_currents(pair, v, "neg")
    ideal = m.gain * (v @ W)
    assert np.max(np.abs(signed - ideal)) <= 8 * 0.1 * xb.G_OFF_DEFAULT


def test_dummy_equalize_example():
    ms = 1e-3
    gp = np.array([[1.0 * ms], [0.7 * ms], [0.4 * ms]])
    pair = xb.dummy_equalize(xb.CrossbarPair(gp, np.full_like(gp, 1e-7)))
    np.testing.assert_allclose(pair.dummy - 1e-7, [0, 0.3 * ms, 0.6 * ms], atol=1e-18)
    tot = pair.row_totals()
    assert np.ptp(tot) / tot.mean() <= 1e-12


def test_dummy_equalize_noop_on_equal_rows():
    g = np.full((4, 3), G_ON)
    pair = xb.dummy_equalize(xb.CrossbarPair(g, np.full_like(g, 1e-7)))
    np.testing.assert_allclose(pair.dummy, 1e-7, rtol=1e-9)


def test_conductance_csv_round_trip(tmp_path, rng):
    G = rng.uniform(1e-7, G_ON, (7, 3))
    back = xb.load_conductances(xb.save_conductances(G, tmp_path / "g.csv"))
    np.testing.assert_allclose(back, G, rtol=1e-12)
