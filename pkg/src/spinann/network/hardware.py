"""Mapping a quantized network onto crossbars and domain-wall neurons.

Per layer ``l`` with largest weight magnitude ``m_l``:

* weight ``m_l`` maps to the synapse's lowest resistance ``1 / g_max``;
* an input activation ``a`` drives its row at ``a * m_l * V_max`` and the
  bias row sits at ``m_l * V_max``;

so that the net column current, in units of the neuron critical current
``g_max * V_max``, equals the software pre-activation (up to loading). The
hidden axons are sized so the largest output code drives the next layer's
rows at ``m_{l+1} * V_max`` through the equalized row conductance ``G_eq``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import truncnorm

from ..crossbar import G_OFF_DEFAULT, CrossbarPair, WeightMapping, column_currents, dummy_equalize, split_signed
from ..energy import R_NEURON_PATH, EnergyLog
from ..magnetics import MaterialParams
from ..mtj import DwDevice, default_mtj_model, design_device
from ..neuron import AxonCircuit, DisplacementMap, DEFAULT_V_T, divider_current, neuron_output, size_transistor
from .model import Activation, NetworkError, NetworkSpec, quantize_levels


class DeployError(NetworkError):
    pass


@dataclass(frozen=True)
class HardwareConfig:
    V_max: float = 0.1
    t_write: float = 2e-9
    t_read: float = 2e-9
    I_reset: float = 5e-6
    t_reset: float = 2e-9
    R_path: float = R_NEURON_PATH
    G_off: float = G_OFF_DEFAULT
    V_div: float = 0.9
    V_src: float = 0.65
    V_t: float = DEFAULT_V_T
    I_out_final: float = 10e-6
    snap_tolerance: float = 0.1
    compensate_loading: bool = True
    synapse: DwDevice | None = None
    neuron: DwDevice | None = None
    dmap: DisplacementMap = field(default_factory=DisplacementMap)

    def devices(self) -> tuple[DwDevice, DwDevice]:
        syn, neu = default_devices()
        return (self.synapse or syn, self.neuron or neu)


@functools.lru_cache(maxsize=None)
def default_devices(
    r_floor: float = 20e3,
    read_current: float = 80e-9,
    V_div: float = 0.9,
    synapse_size: tuple[float, float] = (170e-9, 200e-9),
    neuron_size: tuple[float, float] = (50e-9, 20e-9),
) -> tuple[DwDevice, DwDevice]:
    """Synapse (lowest resistance ``r_floor``) and neuron devices, as ``(length, width)``.

    The neuron oxide is chosen so that the divider draws ``read_current`` with
    the wall at the left edge and the reference equal to the neuron's own
    resistance there.
    """
    model = default_mtj_model()
    delta = MaterialParams().wall_width
    syn = design_device(model, *synapse_size, delta, r_floor, at_x="max")
    neu = design_device(model, *neuron_size, delta, V_div / read_current / 2.0, at_x="min", role="neuron")
    return syn, neu


def default_axon(neuron: DwDevice | None = None, V_t: float = DEFAULT_V_T, i_out_max: float = 10e-6) -> AxonCircuit:
    neuron = neuron or default_devices()[1]
    ax = AxonCircuit(R_ref=1.0 / neuron.conductance(0.0), V_t=V_t)
    return size_transistor(neuron, ax, i_out_max)


def default_activation(n: int = 101) -> Activation:
    """Neuron output versus normalized wall travel, scaled to 1 at full travel."""
    neuron = default_devices()[1]
    ax = default_axon(neuron)
    u = np.linspace(0.0, 1.0, n)
    i = neuron_output(u * neuron.L_free, neuron, ax)
    return Activation(u, i / i[-1])


@dataclass
class LayerHW:
    xbar: CrossbarPair
    w_scale: float
    axon: AxonCircuit
    i_out_max: float
    R_scale: np.ndarray  # neuron MTJ resistance factor per column
    R_ref_scale: np.ndarray  # reference MTJ resistance factor per column
    t_write: float = 2e-9


@dataclass
class Pipeline:
    layers: list[LayerHW]
    neuron: DwDevice
    config: HardwareConfig
    act_levels: int
    snap_error: float = 0.0

    @property
    def max_gamma(self) -> float:
        return max(L.xbar.max_gamma() for L in self.layers)

    def gammas(self) -> list[np.ndarray]:
        return [np.maximum(L.xbar.gamma("pos"), L.xbar.gamma("neg")) for L in self.layers]


def _mapping(cfg: HardwareConfig, w_scale: float) -> WeightMapping:
    syn, _ = cfg.devices()
    g_max = syn.conductance(syn.L_free)
    return WeightMapping(g_max=g_max, g_min=syn.conductance(0.0), w_scale=w_scale, G_off=cfg.G_off)


def _compensate_loading(xbar: CrossbarPair, A: np.ndarray, mapping: WeightMapping, iters: int = 20):
    """Rescale each column so every column has the same loaded gain ``kappa``.

    A column with conductance sum ``S`` delivers ``G v / (1 + R S)``. Setting
    each conductance to ``kappa * G_ideal * (1 + R S')``, with ``S'`` the new
    column sum, makes the loaded current exactly ``kappa`` times the unloaded
    ideal. ``kappa = 1 / (1 + gamma_max)`` keeps the largest conductance at
    or below ``g_max``, and the worst column's gamma is unchanged. Devices are
    then snapped to the representable range, so ``S'`` is found by fixed-point
    iteration.
    """
    R = xbar.R_neuron
    kappa = 1.0 / (1.0 + xbar.max_gamma())
    target = kappa * mapping.gain * np.abs(A)
    off = mapping.G_off
    pos, neg = A > 0, A < 0
    s_pos, s_neg = xbar.G_pos.sum(axis=0), xbar.G_neg.sum(axis=0)
    for _ in range(iters):
        g_pos = np.where(pos, _snap(target * (1 + R * s_pos), mapping), off)
        g_neg = np.where(neg, _snap(target * (1 + R * s_neg), mapping), off)
        new_pos, new_neg = g_pos.sum(axis=0), g_neg.sum(axis=0)
        done = np.allclose(new_pos, s_pos, rtol=1e-13) and np.allclose(new_neg, s_neg, rtol=1e-13)
        s_pos, s_neg = new_pos, new_neg
        if done:
            break
    return xbar.with_(G_pos=g_pos, G_neg=g_neg), kappa


def _snap(g: np.ndarray, mapping: WeightMapping) -> np.ndarray:
    """Clamp ideal conductances into the device range with the mapping's floor rule."""
    g = np.where(g >= mapping.g_min, g, np.where(g >= 0.5 * mapping.g_min, mapping.g_min, mapping.G_off))
    return np.minimum(g, mapping.g_max)


def deploy(spec: NetworkSpec, config: HardwareConfig | None = None) -> Pipeline:
    """Build crossbars, dummy columns, neuron devices and axons for a quantized network."""
    cfg = config or HardwareConfig()
    if not spec.quantized:
        raise DeployError("deploy needs a quantized network; call quantize() first")
    syn, neu = cfg.devices()
    g_max = syn.conductance(syn.L_free)
    i_unit = g_max * cfg.V_max
    if not np.isclose(i_unit, cfg.dmap.I_crit, rtol=1e-3):
        raise DeployError(
            f"full-scale synapse current {i_unit:.4g} A differs from the neuron critical current {cfg.dmap.I_crit:.4g} A"
        )
    xbars, scales, gains, worst = [], [], [], 0.0
    for k, (W, b) in enumerate(zip(spec.weights, spec.biases)):
        A = np.vstack([W, b[None, :]])
        m = float(np.abs(A).max())
        if m == 0.0:
            m = spec.bound(k)
        mapping = _mapping(cfg, m)
        xbar = split_signed(A, mapping, R_neuron=cfg.R_path)
        kappa = 1.0
        if cfg.compensate_loading:
            xbar, kappa = _compensate_loading(xbar, A, mapping)
        xbar = dummy_equalize(xbar)
        eff = (xbar.G_pos / (1 + xbar.gamma("pos")) - xbar.G_neg / (1 + xbar.gamma("neg"))) / (kappa * mapping.gain)
        if not cfg.compensate_loading:
            eff = (xbar.G_pos - xbar.G_neg) / mapping.gain
        worst = max(worst, float(np.abs(eff - A).max()) / m)
        xbars.append(xbar)
        scales.append(m)
        gains.append(kappa)
    if worst > cfg.snap_tolerance:
        raise DeployError(
            f"weight ratio exceeds the device TMR range: largest mapping error {worst:.3f} of full scale "
            f"(device max/min conductance {syn.conductance(syn.L_free) / syn.conductance(0.0):.2f})"
        )
    layers = []
    base = AxonCircuit(R_ref=1.0 / neu.conductance(0.0), V_t=cfg.V_t, V_div=cfg.V_div, V_src=cfg.V_src, v_drain=cfg.V_max)
    for k, xbar in enumerate(xbars):
        if k + 1 < len(xbars):
            i_max = scales[k + 1] * cfg.V_max * float(xbars[k + 1].row_totals()[0])
        else:
            i_max = cfg.I_out_final
        ax = size_transistor(neu, base, i_max)
        ones = np.ones(xbar.shape[1])
        layers.append(LayerHW(xbar, scales[k], ax, i_max, ones, ones.copy(), cfg.t_write / gains[k]))
    return Pipeline(layers, neu, cfg, spec.act_levels, worst)


def run(pipeline: Pipeline, X, log: EnergyLog | None = None, quantize_act: bool = True):
    """Batched inference. Returns the output-layer activations (normalized currents)."""
    cfg = pipeline.config
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] + 1 != pipeline.layers[0].xbar.shape[0]:
        raise NetworkError(f"input has {X.shape[1]} features, pipeline expects {pipeline.layers[0].xbar.shape[0] - 1}")
    if np.any(X < 0) or np.any(X > 1):
        raise NetworkError("inputs must be scaled to [0, 1]")
    dmap = cfg.dmap
    dev = pipeline.neuron
    m0 = pipeline.layers[0].w_scale
    v = np.hstack([X, np.ones((X.shape[0], 1))]) * (m0 * cfg.V_max)
    out = None
    for k, L in enumerate(pipeline.layers):
        i_pos = column_currents(L.xbar, v, "pos")
        i_neg = column_currents(L.xbar, v, "neg")
        x = dmap.advance(0.0, (i_pos + i_neg) * (L.t_write / dmap.t_write), dmap.t_write)
        i_out = neuron_output(x, dev, L.axon, L.R_scale, L.R_ref_scale)
        if log is not None:
            G_all = np.hstack([L.xbar.G_pos, L.xbar.G_neg, L.xbar.dummy[:, None]])
            log.add_synapse_read(v, G_all, 2 * L.t_write)
            log.add_joule("neuron", "write", np.hypot(i_pos, i_neg), L.xbar.R_neuron, L.t_write)
            i_div = cfg.V_div / (L.R_scale / dev.conductance(x) + L.axon.R_ref * L.R_ref_scale)
            log.add_vit("neuron", "read", cfg.V_div, i_div, cfg.t_read)
            log.add_joule("neuron", "reset", np.full(i_out.shape, cfg.I_reset), L.xbar.R_neuron, cfg.t_reset)
        a = i_out / L.i_out_max
        if k + 1 < len(pipeline.layers):
            nxt = pipeline.layers[k + 1]
            code = quantize_levels(a, pipeline.act_levels) if quantize_act else np.clip(a, 0.0, None)
            g_eq = nxt.xbar.row_totals()
            v_rows = code * L.i_out_max / g_eq[None, :-1]
            v_bias = np.full((X.shape[0], 1), nxt.w_scale * cfg.V_max)
            v = np.minimum(np.hstack([v_rows, v_bias]), cfg.V_max)
        else:
            out = a
    if log is not None:
        log.inferences += X.shape[0]
    return out


def infer(pipeline: Pipeline, image, log: EnergyLog | None = None) -> int | np.ndarray:
    """Class index for one flattened image (or an array of indices for a batch)."""
    X = np.asarray(image, dtype=float)
    pred = np.argmax(run(pipeline, X, log), axis=-1)
    return int(pred[0]) if X.ndim == 1 else pred


def hardware_accuracy(pipeline: Pipeline, X, y) -> float:
    return float(np.mean(infer(pipeline, np.atleast_2d(X)) == np.asarray(y)))


@dataclass(frozen=True)
class VariationModel:
    sigma_3: float = 0.20
    trials: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.sigma_3 < 0:
            raise ValueError("sigma_3 must be non-negative")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


def _factors(rng: np.random.Generator, sigma: float, shape) -> np.ndarray:
    """Resistance multipliers ``1 + eps``, ``eps`` normal with std ``sigma`` truncated at 3 sigma."""
    if sigma == 0.0:
        return np.ones(shape)
    return 1.0 + sigma * truncnorm.rvs(-3.0, 3.0, size=shape, random_state=rng)


def perturb(pipeline: Pipeline, rng: np.random.Generator, sigma_3: float) -> Pipeline:
    """Copy of ``pipeline`` with every device resistance scaled by an independent factor."""
    s = sigma_3 / 3.0
    layers = []
    for L in pipeline.layers:
        xb = L.xbar
        gp = xb.G_pos / _factors(rng, s, xb.G_pos.shape)
        gn = xb.G_neg / _factors(rng, s, xb.G_neg.shape)
        dummy = xb.dummy / _factors(rng, s, xb.dummy.shape)
        r_n = xb.R_neuron * _factors(rng, s, xb.R_neuron.shape)
        new = CrossbarPair(gp, gn, xb.G_off, r_n, dummy, strict=False)
        cols = xb.shape[1]
        layers.append(replace(L, xbar=new, R_scale=_factors(rng, s, cols), R_ref_scale=_factors(rng, s, cols)))
    return replace(pipeline, layers=layers)


@dataclass(frozen=True)
class MonteCarloResult:
    baseline: float
    accuracies: np.ndarray
    sigma_3: float
    seed: int

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def min(self) -> float:
        return float(np.min(self.accuracies))

    @property
    def degradation(self) -> float:
        return self.baseline - self.mean

    def to_dict(self) -> dict:
        return {
            "baseline_accuracy": self.baseline,
            "mean_accuracy": self.mean,
            "min_accuracy": self.min,
            "std_accuracy": float(np.std(self.accuracies)),
            "mean_degradation": self.degradation,
            "trials": int(self.accuracies.size),
            "sigma_3": self.sigma_3,
            "seed": self.seed,
            "accuracies": [float(a) for a in self.accuracies],
        }


def monte_carlo(pipeline: Pipeline, X, y, vm: VariationModel = VariationModel()) -> MonteCarloResult:
    """Accuracy under device variation, one independent seed stream per trial."""
    base = hardware_accuracy(pipeline, X, y)
    seeds = np.random.SeedSequence(vm.seed).spawn(vm.trials)
    accs = np.empty(vm.trials)
    for t, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        accs[t] = hardware_accuracy(perturb(pipeline, rng, vm.sigma_3), X, y)
    return MonteCarloResult(base, accs, vm.sigma_3, vm.seed)
