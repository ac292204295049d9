import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinann import mtj
from spinann.mtj import NM

A0 = -1.0 / (0.12 * NM)
B0 = math.log(1e-14 / 9040e-12) - A0 * 2.0 * NM


def known_model():
    """Exponential-in-thickness junction, 600% TMR, AP branch softening with bias."""
    ap = mtj.MtjCalibration((A0, A0, A0), (B0, B0 + math.log(4.0), B0 + math.log(0.8)))
    p = mtj.MtjCalibration((A0,), (B0 + math.log(7.0),))
    return mtj.MtjModel(p, ap, (1.6 * NM, 2.4 * NM), 0.5)


def sample_grid(model, ts, vs):
    rows = []
    for t in ts:
        for v in vs:
            for th in (0.0, math.pi):
                rows.append((t, v, th, mtj.resistance(model, t, v, th)))
    return np.array(rows)


def test_known_model_anchor_values():
    m = known_model()
    r_p, r_ap = m.branches(2.0 * NM, 0.0)
    assert r_ap == pytest.approx(9040e-12 / 1e-14, rel=1e-12)
    assert r_ap / r_p == pytest.approx(7.0, rel=1e-12)


@pytest.mark.parametrize("t", [1.7 * NM, 2.0 * NM, 2.3 * NM])
@pytest.mark.parametrize("v", [0.0, 0.05, 0.3])
def test_angle_endpoints_exact(t, v):
    m = mtj.default_mtj_model()
    r_p, r_ap = m.branches(t, v)
    assert mtj.resistance(m, t, v, 0.0) == r_p
    assert mtj.resistance(m, t, v, math.pi) == r_ap
    assert mtj.resistance(m, t, v, math.pi / 2) == pytest.approx(2 * r_p * r_ap / (r_p + r_ap), rel=1e-14)


@given(st.floats(1e2, 1e7), st.floats(1e2, 1e7), st.floats(0.0, math.pi))
def test_angle_interpolation_bounded(r_p, r_ap, th):
    r = mtj.combine_angle(r_p, r_ap, th)
    assert min(r_p, r_ap) * (1 - 1e-12) <= r <= max(r_p, r_ap) * (1 + 1e-12)


def test_angle_out_of_range():
    with pytest.raises(mtj.MtjError):
        mtj.combine_angle(1.0, 2.0, -0.1)


def test_calibration_round_trip_held_out():
    truth = known_model()
    train = sample_grid(truth, np.linspace(1.6, 2.4, 5) * NM, [0.01, 0.1, 0.2, 0.3, 0.4, 0.5])
    fitted = mtj.fit_calibration(train, c_order=2)
    T, V = np.meshgrid(np.array([1.7, 1.9, 2.1, 2.3]) * NM, [0.03, 0.15, 0.25, 0.45], indexing="ij")
    for th in (0.0, math.pi / 3, math.pi):
        r_true = mtj.resistance(truth, T, V, th)
        r_fit = mtj.resistance(fitted, T, V, th)
        assert np.max(np.abs(r_fit / r_true - 1)) <= 0.01


def test_default_model_properties():
    m = mtj.default_mtj_model()
    assert mtj.resistance(m, 2.0 * NM, 0.01, math.pi) > mtj.resistance(m, 1.8 * NM, 0.01, math.pi)
    assert mtj.resistance(m, 2.0 * NM, 0.01, 0.0) > mtj.resistance(m, 1.8 * NM, 0.01, 0.0)
    for t in np.linspace(1.6, 2.4, 5) * NM:
        r10 = mtj.resistance(m, t, 0.01, math.pi)
        r90 = mtj.resistance(m, t, 0.09, math.pi)
        assert abs(r90 - r10) / r10 <= 0.05
    mtj.check_monotonic(m)


def test_domain_refused_unless_extrapolating():
    m = mtj.default_mtj_model()
    with pytest.raises(mtj.OutOfCalibrationError):
        mtj.resistance(m, 3.0 * NM, 0.01, 0.0)
    with pytest.raises(mtj.OutOfCalibrationError):
        mtj.resistance(m, 2.0 * NM, 0.8, 0.0)
    assert mtj.resistance(m, 2.5 * NM, 0.01, 0.0, extrapolate=True) > 0


def test_rank_deficient_samples():
    truth = known_model()
    one_t = sample_grid(truth, [2.0 * NM], [0.01, 0.1, 0.2, 0.3])
    with pytest.raises(mtj.CalibrationError, match="rank-deficient"):
        mtj.fit_calibration(one_t)
    with pytest.raises(mtj.CalibrationError, match="rank-deficient"):
        mtj.fit_calibration(one_t[:4])


def test_calibration_table_round_trip(tmp_path):
    truth = known_model()
    rows = sample_grid(truth, [1.8 * NM, 2.2 * NM], [0.01, 0.2])
    path = mtj.write_calibration_table(rows, tmp_path / "cal.csv")
    assert path.read_text().splitlines()[0] == "t_mgo_nm,v_mV,theta_rad,r_ohm"
    back = mtj.read_calibration_table(path)
    np.testing.assert_allclose(back, rows, rtol=1e-5)


def test_model_json_round_trip():
    m = mtj.default_mtj_model()
    assert mtj.MtjModel.from_dict(m.to_dict()) == m


def device(x=0.0):
    return mtj.DwDevice(100e-9, 20e-9, 7.6e-9, 3e-5, 5e-6, 1e-6, x)


def test_device_endpoints_and_midpoint():
    d = device()
    assert d.conductance(0.0) == 5e-6 + 1e-6
    assert d.conductance(100e-9) == 3e-5 + 1e-6
    assert d.conductance(50e-9) == pytest.approx(0.5 * (d.conductance(0.0) + d.conductance(100e-9)), rel=1e-15)
    assert mtj.dw_conductance(device(100e-9)) == d.conductance(100e-9)


@given(st.floats(0, 100e-9), st.floats(0, 100e-9), st.floats(0, 1))
def test_device_affine(x1, x2, lam):
    d = device()
    lhs = d.conductance(lam * x1 + (1 - lam) * x2)
    rhs = lam * d.conductance(x1) + (1 - lam) * d.conductance(x2)
    assert lhs == pytest.approx(rhs, rel=1e-13)


def test_device_invariants():
    with pytest.raises(mtj.MtjError):
        device(101e-9)
    with pytest.raises(mtj.MtjError):
        mtj.DwDevice(100e-9, 20e-9, 7.6e-9, 1e-6, 5e-6, 1e-6)


def test_weight_range_from_tmr():
    d = mtj.DwDevice.from_tmr(5e-5, 6.0, 170e-9, 200e-9, 7.62e-9)
    assert mtj.weight_range(d) == pytest.approx(7.0, rel=0.15)
    assert mtj.weight_range(mtj.DwDevice.from_tmr(5e-5, 0.0, 170e-9, 200e-9, 7.62e-9)) == 1.0
    ratios = [mtj.weight_range(mtj.DwDevice.from_tmr(5e-5, t, 170e-9, 200e-9, 7.62e-9)) for t in np.linspace(0, 10, 41)]
    assert np.all(np.diff(ratios) > 0)


def test_width_scaling_halves_resistance():
    m = mtj.default_mtj_model()
    a = mtj.DwDevice.from_mtj(m, 2.0 * NM, 170e-9, 100e-9, 7.6e-9)
    b = mtj.DwDevice.from_mtj(m, 2.0 * NM, 170e-9, 200e-9, 7.6e-9)
    for x in (0.0, 85e-9, 170e-9):
        assert 1 / b.conductance(x) == pytest.approx(0.5 / a.conductance(x), rel=1e-12)


def test_design_device_hits_target():
    m = mtj.default_mtj_model()
    d = mtj.design_device(m, 170e-9, 200e-9, 7.62e-9, 20e3, at_x="max")
    assert 1 / d.conductance(d.L_free) == pytest.approx(20e3, rel=1e-9)
    with pytest.raises(mtj.OutOfCalibrationError):
        mtj.design_device(m, 170e-9, 200e-9, 7.62e-9, 1.0)
