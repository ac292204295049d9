"""Command-line entry point: ``spinann <subcommand> --config PATH [--seed N] [--out DIR] [--dump-gamma]``.

Exit codes: 0 success, 2 configuration error, 3 stage error. Every run
writes ``manifest.json`` into the output directory last, so a manifest
only exists next to complete outputs.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import magnetics as mag
from ._io import atomic_write_json, atomic_write_text
from .config import ConfigError, RunConfig, file_digest, load_config, parse_config
from .crossbar import save_conductances
from .dataset import Dataset, load_dataset, save_dataset, synthetic_glyphs
from .energy import EnergyLog, inference_energy_report, nominal_cycle_log, synapse_power_ratio
from .mtj import MtjModel, fit_calibration, read_calibration_table, weight_range
from .network import hardware as hw
from .network.model import Activation, NetworkSpec, accuracy, predict, quantize, train
from .neuron import AxonCircuit, DisplacementMap, size_transistor, transfer_function

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 2, 3
COMMANDS = ("dw-sweep", "fit-mtj", "transfer-function", "train", "deploy", "infer", "montecarlo", "energy-report", "gen-data")


class StageError(RuntimeError):
    pass


class Run:
    """Output directory, config and the file list that goes into the manifest."""

    def __init__(self, command: str, cfg: RunConfig, out: Path, config_hash: str, seed: int, dump_gamma: bool):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.config_hash = config_hash
        self.seed = seed
        self.dump_gamma = dump_gamma
        self.outputs: list[str] = []
        self.timings: dict[str, float] = {}

    def record(self, path: Path) -> Path:
        self.outputs.append(str(Path(path).relative_to(self.out)))
        return path

    def write_json(self, name: str, obj) -> Path:
        return self.record(atomic_write_json(self.out / name, obj))

    def write_text(self, name: str, text: str) -> Path:
        return self.record(atomic_write_text(self.out / name, text))

    def manifest(self) -> dict:
        return {
            "command": self.command,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "tool_version": __version__,
            "outputs": sorted(self.outputs),
            "timings_s": self.timings,
        }


def _hardware_config(cfg: RunConfig) -> hw.HardwareConfig:
    c, d = cfg.circuit, cfg.devices
    syn, neu = hw.default_devices(
        d.r_floor, d.neuron_read_current, c.V_div, (d.synapse_length, d.synapse_width), (d.neuron_length, d.neuron_width)
    )
    return hw.HardwareConfig(
        V_max=c.V_max,
        t_write=c.t_write,
        t_read=c.t_read,
        I_reset=c.I_reset,
        t_reset=c.t_reset,
        R_path=c.R_path,
        G_off=c.G_off,
        V_div=c.V_div,
        V_src=c.V_src,
        V_t=c.V_t,
        I_out_final=c.I_out_final,
        compensate_loading=c.compensate_loading,
        synapse=syn,
        neuron=neu,
        dmap=DisplacementMap(d.neuron_length, syn.conductance(syn.L_free) * c.V_max, c.t_write),
    )


def _axon(cfg: RunConfig, hwc: hw.HardwareConfig) -> AxonCircuit:
    neu = hwc.devices()[1]
    c = cfg.circuit
    ax = AxonCircuit(R_ref=1.0 / neu.conductance(0.0), V_t=c.V_t, V_div=c.V_div, V_src=c.V_src, v_drain=c.V_max)
    return size_transistor(neu, ax, c.I_out_final)


def _activation(cfg: RunConfig, hwc: hw.HardwareConfig) -> Activation:
    if cfg.network.activation == "ideal":
        return Activation.ideal()
    from .neuron import neuron_output

    neu = hwc.devices()[1]
    ax = _axon(cfg, hwc)
    u = np.linspace(0.0, 1.0, 101)
    i = neuron_output(u * neu.L_free, neu, ax)
    return Activation(u, i / i[-1])


def _datasets(run: Run) -> tuple[Dataset, Dataset]:
    d = run.cfg.data
    if d.train_dir and d.eval_dir:
        return load_dataset(d.train_dir), load_dataset(d.eval_dir)
    if d.train_dir or d.eval_dir:
        raise StageError("data: set both train_dir and eval_dir, or neither")
    return (
        synthetic_glyphs(run.seed + d.train_seed, d.train_per_class, d.noise),
        synthetic_glyphs(run.seed + d.eval_seed, d.eval_per_class, d.noise),
    )


def _load_model(run: Run) -> NetworkSpec:
    path = run.out / "model.json"
    if not path.is_file():
        raise StageError(f"{path}: no trained model; run `spinann train` with the same --out first")
    return NetworkSpec.load(path)


def cmd_gen_data(run: Run) -> None:
    d = run.cfg.data
    for name, seed, n in (("train", d.train_seed, d.train_per_class), ("eval", d.eval_seed, d.eval_per_class)):
        for p in save_dataset(synthetic_glyphs(run.seed + seed, n, d.noise), run.out / name):
            run.record(p)


def cmd_dw_sweep(run: Run) -> None:
    s = run.cfg.simulation
    params = run.cfg.material.build()
    geom = mag.StripGeometry(free_length=s.sweep_length, width=s.sweep_width, cell=tuple(s.cell))
    rows = mag.velocity_sweep(params, geom, s.sweep_j, s.sweep_duration, s.sweep_transient, settings=s.settings())
    run.record(mag.write_velocity_csv(rows, run.out / "velocity_sweep.csv"))


def cmd_fit_mtj(run: Run) -> None:
    from importlib import resources

    with resources.as_file(resources.files("spinann.data") / "mtj_calibration.csv") as p:
        samples = read_calibration_table(p)
    model: MtjModel = fit_calibration(samples, c_order=2)
    d = run.cfg.devices
    syn, neu = _hardware_config(run.cfg).devices()
    run.write_json(
        "mtj_model.json",
        {
            "model": model.to_dict(),
            "samples": int(len(samples)),
            "synapse": {"R_min_ohm": 1 / syn.conductance(syn.L_free), "R_max_ohm": 1 / syn.conductance(0.0), "weight_range": weight_range(syn)},
            "neuron": {"R_min_ohm": 1 / neu.conductance(neu.L_free), "R_max_ohm": 1 / neu.conductance(0.0), "weight_range": weight_range(neu)},
            "synapse_size_m": [d.synapse_length, d.synapse_width],
            "neuron_size_m": [d.neuron_length, d.neuron_width],
        },
    )


def cmd_transfer_function(run: Run) -> None:
    hwc = _hardware_config(run.cfg)
    neu = hwc.devices()[1]
    curve = transfer_function(neu, _axon(run.cfg, hwc), i_max=2 * hwc.dmap.I_crit, samples=401, dmap=hwc.dmap)
    run.record(curve.to_csv(run.out / "transfer_function.csv"))
    run.write_json("transfer_summary.json", {"central_r2": curve.central_r2(), "i_sat_A": curve.i_sat, "i_out_max_A": float(curve.i_out.max())})


def cmd_train(run: Run) -> None:
    cfg = run.cfg
    hwc = _hardware_config(cfg)
    tr, ev = _datasets(run)
    spec = cfg.network.spec(_activation(cfg, hwc))
    n_out = spec.sizes[-1]
    if tr.y.max() >= n_out:
        raise StageError(f"labels go up to {tr.y.max()} but the network has {n_out} outputs")
    history: list[float] = []
    net = train(tr.X, np.eye(n_out)[tr.y], spec, cfg.network.train_settings(run.seed), history)
    q = quantize(net)
    run.record(net.save(run.out / "model_float.json"))
    run.record(q.save(run.out / "model.json"))
    run.write_text("loss.csv", "epoch,loss\n" + "".join(f"{i},{v:.9e}\n" for i, v in enumerate(history)))
    fa, qa = accuracy(net, ev.X, ev.y), accuracy(q, ev.X, ev.y)
    run.write_json("train_summary.json", {"float_accuracy": fa, "quantized_accuracy": qa, "drop_points": 100 * (fa - qa), "eval_size": len(ev), "train_size": len(tr)})


def _deploy(run: Run) -> hw.Pipeline:
    return hw.deploy(_load_model(run), _hardware_config(run.cfg))


def _gamma_rows(p: hw.Pipeline) -> str:
    lines = ["layer,column,gamma_pos,gamma_neg"]
    for k, L in enumerate(p.layers):
        for j, (a, b) in enumerate(zip(L.xbar.gamma("pos"), L.xbar.gamma("neg"))):
            lines.append(f"{k},{j},{a:.9e},{b:.9e}")
    return "\n".join(lines) + "\n"


def cmd_deploy(run: Run) -> None:
    p = _deploy(run)
    for k, L in enumerate(p.layers):
        run.record(save_conductances(L.xbar.G_pos, run.out / f"layer{k}_G_pos.csv"))
        run.record(save_conductances(L.xbar.G_neg, run.out / f"layer{k}_G_neg.csv"))
        run.record(save_conductances(L.xbar.dummy[:, None], run.out / f"layer{k}_dummy.csv"))
    if run.dump_gamma:
        run.write_text("gamma.csv", _gamma_rows(p))
    run.write_json(
        "deploy_summary.json",
        {
            "max_gamma": p.max_gamma,
            "snap_error": p.snap_error,
            "layers": [{"w_scale": L.w_scale, "i_out_max_A": L.i_out_max, "t_write_s": L.t_write, "shape": list(L.xbar.shape)} for L in p.layers],
        },
    )


def cmd_infer(run: Run) -> None:
    p = _deploy(run)
    q = _load_model(run)
    _, ev = _datasets(run)
    log = EnergyLog()
    out = hw.run(p, ev.X, log)
    pred = np.argmax(out, axis=-1)
    sw = predict(q, ev.X)
    run.write_text("predictions.csv", "index,label,predicted,software\n" + "".join(f"{i},{a},{b},{c}\n" for i, (a, b, c) in enumerate(zip(ev.y, pred, sw))))
    run.write_json("energy_inference.json", inference_energy_report(log).to_dict())
    if run.dump_gamma:
        run.write_text("gamma.csv", _gamma_rows(p))
    run.write_json("infer_summary.json", {"hardware_accuracy": float(np.mean(pred == ev.y)), "software_agreement": float(np.mean(pred == sw)), "max_gamma": p.max_gamma})


def cmd_montecarlo(run: Run) -> None:
    p = _deploy(run)
    _, ev = _datasets(run)
    v = run.cfg.variation
    res = hw.monte_carlo(p, ev.X, ev.y, hw.VariationModel(v.sigma_3, v.trials, run.seed))
    run.write_json("montecarlo.json", res.to_dict())


def cmd_energy_report(run: Run) -> None:
    e = run.cfg.energy
    c = run.cfg.circuit
    log = nominal_cycle_log(e.read_time, e.write_current, e.write_time, e.read_voltage, e.read_current, c.I_reset, c.t_reset, c.R_path)
    report = inference_energy_report(log).to_dict()
    report["synapse_power_ratio"] = synapse_power_ratio(c.V_max, e.V_cmos)
    run.write_json("energy_report.json", report)


HANDLERS = {
    "dw-sweep": cmd_dw_sweep,
    "fit-mtj": cmd_fit_mtj,
    "transfer-function": cmd_transfer_function,
    "train": cmd_train,
    "deploy": cmd_deploy,
    "infer": cmd_infer,
    "montecarlo": cmd_montecarlo,
    "energy-report": cmd_energy_report,
    "gen-data": cmd_gen_data,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spinann", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON run configuration (defaults when omitted)")
    ap.add_argument("--seed", type=int, help="overrides the config seed")
    ap.add_argument("--out", help="output directory (overrides config out_dir)")
    ap.add_argument("--dump-gamma", action="store_true", help="write per-column loading factors")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            cfg = load_config(args.config)
            config_hash = file_digest(args.config)
        else:
            cfg = parse_config({})
            config_hash = cfg.digest()
    except ConfigError as exc:
        print(f"spinann: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = cfg.seed if args.seed is None else args.seed
    out = Path(args.out or cfg.out_dir)
    run = Run(args.command, cfg, out, config_hash, seed, args.dump_gamma)
    t0 = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        HANDLERS[args.command](run)
    except ConfigError as exc:
        print(f"spinann: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # every stage failure maps to one exit code
        module = type(exc).__module__.replace("spinann.", "")
        print(f"spinann: {args.command} failed [{module}]: {exc}", file=sys.stderr)
        return EXIT_STAGE
    run.timings[args.command] = time.perf_counter() - t0
    atomic_write_json(out / "manifest.json", run.manifest())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
