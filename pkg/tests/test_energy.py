import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinann import energy as en

FJ = 1e-15


def test_write_and_reset_golden():
    assert en.write_energy(17.5e-6, 140.0, 4e-9) == pytest.approx(0.1715 * FJ, rel=1e-12)
    assert en.write_energy(17.5e-6, 140.0, 4e-9) == pytest.approx(0.17 * FJ, rel=0.03)
    assert en.write_energy(5e-6, 140.0, 2e-9) == pytest.approx(0.007 * FJ, rel=1e-12)
    assert en.write_energy(0.0, 140.0, 4e-9) == 0.0


def test_read_arithmetic():
    assert en.read_energy(0.9, 80e-9, 2e-9) == pytest.approx(0.144 * FJ, rel=1e-12)
    assert en.read_energy(0.9, 80e-9, 0.0) == 0.0
    with pytest.raises(ValueError):
        en.read_energy(-0.9, 80e-9, 2e-9)


def test_hm_resistance():
    assert en.hm_resistance(1e-6, 1e-6, 3e-9, 200e-9) == pytest.approx(66.667, rel=1e-4)
    assert en.hm_resistance(150e-9, 200e-9, 3e-9, 200e-9) == pytest.approx(50.0, rel=1e-12)
    a = en.hm_resistance(150e-9, 200e-9, 3e-9, 200e-9)
    assert en.hm_resistance(150e-9, 400e-9, 3e-9, 200e-9) == pytest.approx(a / 2, rel=1e-14)
    assert en.hm_resistance(300e-9, 200e-9, 3e-9, 200e-9) == pytest.approx(2 * a, rel=1e-14)
    with pytest.raises(ValueError):
        en.hm_resistance(0.0, 1e-6, 3e-9, 200e-9)


def test_synapse_power_ratio():
    assert en.synapse_power_ratio(0.1, 0.5) == pytest.approx(25.0, rel=1e-14)
    assert en.synapse_power_ratio(0.3, 0.3) == 1.0


@given(st.floats(1e3, 1e7))
def test_synapse_ratio_independent_of_resistance(R):
    p_spin, p_cmos = 0.1**2 / R, 0.5**2 / R
    assert p_cmos / p_spin == pytest.approx(en.synapse_power_ratio(0.1, 0.5), rel=1e-12)


def test_default_cycle_report():
    rep = en.inference_energy_report(en.nominal_cycle_log())
    assert rep.write_J == pytest.approx(0.1715 * FJ, rel=1e-12)
    assert rep.read_J == pytest.approx(0.144 * FJ, rel=1e-12)
    assert rep.reset_J == pytest.approx(0.007 * FJ, rel=1e-12)
    assert rep.total_J == pytest.approx(rep.write_J + rep.read_J + rep.reset_J, rel=1e-12)
    assert rep.total_J == pytest.approx(0.32 * FJ, rel=0.03)
    assert rep.ratio_vs_analog == pytest.approx(700 / 0.3225, rel=1e-9)
    assert rep.ratio_vs_digital == pytest.approx(832.6 / 0.3225, rel=1e-9)


def test_empty_log_zero_report():
    rep = en.inference_energy_report(en.EnergyLog())
    assert rep.total_J == 0.0 and rep.inference_J == 0.0 and rep.ratio_vs_analog == 0.0


def test_missing_phase_rejected():
    log = en.EnergyLog()
    log.add_joule("neuron", "write", 1e-6, 140.0, 2e-9)
    with pytest.raises(en.EnergyLogError, match="missing"):
        en.inference_energy_report(log)


@given(st.integers(1, 4), st.integers(1, 4))
def test_report_additive(a, b):
    la = sum((en.nominal_cycle_log(write_current=1e-6 * k) for k in range(1, a + 1)), en.EnergyLog())
    lb = sum((en.nominal_cycle_log(read_current=1e-8 * k) for k in range(1, b + 1)), en.EnergyLog())
    la.add_synapse_read(np.full(3, 0.1), np.full((3, 2), 1e-5), 2e-9)
    joint = en.inference_energy_report(la + lb)
    parts = en.inference_energy_report(la) + en.inference_energy_report(lb)
    for k in ("neuron_write_J", "neuron_read_J", "neuron_reset_J", "synapse_J"):
        assert getattr(joint, k) == pytest.approx(getattr(parts, k), rel=1e-12)
    assert joint.neuron_cycles == parts.neuron_cycles == a + b


def test_synapse_read_energy():
    log = en.EnergyLog()
    e = log.add_synapse_read(np.array([0.1, 0.05]), np.array([[1e-5, 2e-5], [3e-5, 4e-5]]), 2e-9)
    assert e == pytest.approx((0.01 * 3e-5 + 0.0025 * 7e-5) * 2e-9, rel=1e-14)


def test_report_json(tmp_path):
    import json

    rep = en.inference_energy_report(en.nominal_cycle_log())
    d = json.loads(rep.save(tmp_path / "e.json").read_text())
    assert d["total_fJ"] == pytest.approx(0.3225, rel=1e-9)
    assert d["baseline_analog_fJ"] == 700.0
