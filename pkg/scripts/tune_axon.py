"""Search the axon threshold that makes the default neuron's transfer most linear.

The result is frozen as ``spinann.neuron.DEFAULT_V_T``.

    python3 scripts/tune_axon.py
"""

from spinann.network.hardware import default_devices
from spinann.neuron import AxonCircuit, transfer_function, tune_threshold


def main():
    _, neuron = default_devices()
    ax = AxonCircuit(R_ref=1.0 / neuron.conductance(0.0))
    vt, r2 = tune_threshold(neuron, ax)
    curve = transfer_function(neuron, ax.with_(V_t=round(vt, 3)), i_max=10e-6, samples=401)
    print(f"V_t = {vt:.4f} V  (position-linearity R^2 {r2:.4f})")
    print(f"rounded V_t = {round(vt, 3)} V  central transfer R^2 {curve.central_r2():.4f}")


if __name__ == "__main__":
    main()
