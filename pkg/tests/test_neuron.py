import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinann import neuron as nr
from spinann.energy import EnergyLog, R_NEURON_PATH
from spinann.network.hardware import default_devices


@pytest.fixture(scope="module")
def dev():
    return default_devices()[1]


@pytest.fixture(scope="module")
def ax(dev):
    return nr.default_axon(dev)


def cycle(dev, I, t=2e-9):
    n = nr.NeuronState(dev.at(0.0))
    nr.write_phase(n, I, t)
    return n


def test_critical_current_full_traversal(dev):
    assert cycle(dev, 5e-6).x == dev.L_free
    assert cycle(dev, 0.0).x == 0.0
    assert cycle(dev, 2.5e-6).x == pytest.approx(dev.L_free / 2, rel=1e-12)


def test_signed_sub_phases_commute(dev):
    a = cycle(dev, (4e-6, -1e-6)).x
    b = cycle(dev, (-1e-6, 4e-6)).x
    assert a == b == pytest.approx(dev.L_free * 3 / 5)


def test_half_critical_current_from_micromagnetics():
    dmap, disp = nr.calibrate_displacement()
    assert dmap.I_crit == pytest.approx(5e-6, rel=0.15)
    assert disp[1] == pytest.approx(25e-9, rel=0.15)  # 2.5 uA for 2 ns in a 50 nm layer


def test_phase_protocol(dev, ax):
    n = nr.NeuronState(dev.at(0.0))
    with pytest.raises(nr.PhaseError):
        nr.read_phase(n, ax)
    with pytest.raises(nr.PhaseError):
        nr.reset_phase(n)
    nr.write_phase(n, 1e-6, 2e-9)
    with pytest.raises(nr.PhaseError):
        nr.write_phase(n, 1e-6, 2e-9)
    with pytest.raises(nr.PhaseError):
        nr.gate_voltage(n, ax)
    nr.read_phase(n, ax)
    nr.reset_phase(n)
    assert n.x == 0.0 and n.phase == "reset"
    with pytest.raises(nr.NeuronError):
        nr.write_phase(n, 1e-6, -1.0)


def test_reset_from_write_and_energy_entry(dev):
    n = cycle(dev, 3e-6)
    log = EnergyLog()
    nr.reset_phase(n, 5e-6, 2e-9, log)
    assert n.x == 0.0
    assert log.records[0].energy_J == pytest.approx(5e-6**2 * R_NEURON_PATH * 2e-9, rel=1e-14)
    nr.write_phase(n, 0.0, 2e-9)
    assert n.x == 0.0


def test_divider_at_left_edge(dev, ax):
    n = cycle(dev, 0.0)
    n.phase = "read"
    assert nr.gate_voltage(n, ax) == pytest.approx(0.45, rel=1e-12)


def test_divider_monotone_and_bounded(dev, ax):
    x = np.linspace(0, dev.L_free, 101)
    vg = nr.divider_voltage(1 / dev.conductance(x), ax)
    assert np.all(np.diff(vg) < 0)
    assert np.all((vg > 0) & (vg < ax.V_div))
    assert nr.divider_voltage(1e3, ax.with_(R_ref=1e30)) < 1e-20


def test_axon_cutoff_and_saturation(ax):
    assert nr.axon_current(ax.V_src - ax.V_t, ax) == 0.0
    assert nr.axon_current(ax.V_src, ax) == 0.0
    sat = ax.with_(v_drain=0.0, V_t=0.5)  # v_sd = 0.65 >= v_ov = 0.15, saturation
    assert nr.axon_current(0.0, sat) == pytest.approx(sat.k_tr / 2 * (sat.V_src - sat.V_t) ** 2, rel=1e-14)


@given(st.floats(0, 0.9), st.floats(0, 0.9))
def test_axon_monotone(v1, v2):
    ax = nr.AxonCircuit(R_ref=1e6, V_t=0.2)
    lo, hi = sorted((v1, v2))
    assert nr.axon_current(lo, ax) >= nr.axon_current(hi, ax)


def test_transfer_function_shape(dev, ax):
    c = nr.transfer_function(dev, ax)
    assert np.all(np.diff(c.i_out) >= 0)
    assert c.i_out[0] == c.i_out.min() == 0.0
    tail = c.i_out[c.i_in >= c.i_sat]
    assert np.all(tail == tail[0]) and tail[0] == c.i_out.max()
    assert c.central_r2() >= 0.98


def test_default_threshold_near_tuned(dev):
    vt, r2 = nr.tune_threshold(dev, nr.AxonCircuit(R_ref=1 / dev.conductance(0.0)))
    assert nr.DEFAULT_V_T == pytest.approx(vt, abs=1e-3)
    assert r2 > 0.99


def test_transfer_csv(tmp_path, dev, ax):
    c = nr.transfer_function(dev, ax, samples=11)
    lines = c.to_csv(tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "i_in_A,v_g_V,i_out_A" and len(lines) == 12


def test_invalid_circuits():
    with pytest.raises(nr.NeuronError):
        nr.AxonCircuit(R_ref=1.0, V_src=1.0)
    with pytest.raises(nr.NeuronError):
        nr.AxonCircuit(R_ref=0.0)
    with pytest.raises(nr.NeuronError):
        nr.DisplacementMap(I_crit=0.0)
