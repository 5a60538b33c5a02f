"""Command-line front end: scenario files, subcommands, CSV and manifest output.

Scenario files are YAML.  Every subcommand writes its CSVs plus one
``manifest.json`` into ``--out``.  Exit codes: 0 success, 2 configuration
or usage error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import platform
import re
import sys
import time
from dataclasses import dataclass, field
from importlib import metadata, resources
from pathlib import Path

import numpy as np
import yaml
from threadpoolctl import threadpool_limits

from ._validation import InvalidArgument
from .array import (ArrayGeometry, beam_grid_weight, beam_pattern, design_beamformer,
                    peak_sidelobe_db, write_geometry_csv, write_weights_csv)
from .scenario import Scenario, Target
from .waveform import FmcwCarrier, beta_from_bandwidth, make_envelope, write_envelope_csv

__all__ = [
    "ConfigError",
    "ScenarioFile",
    "RunManifest",
    "parse_scenario",
    "load_scenario_file",
    "scenario_to_dict",
    "dump_scenario",
    "bundled_scenario",
    "derive_seed",
    "dispatch",
    "main",
]

log = logging.getLogger("jrctoolkit")


class ConfigError(InvalidArgument):
    """Schema or value problem in a configuration file."""


# allowed keys per section and documented defaults
_SCHEMA = {
    "array": {"antennas": 12, "geometry": "ula", "spacing_m": 0.0078, "radius_m": None, "height_m": 0.0,
              "grazing_angle_deg": 0.0, "beamwidth_az_deg": [-45.0, 45.0], "beamwidth_el_deg": [-6.0, 6.0],
              "transmit_antennas": 1, "boresight_deg": 90.0},
    "radar": {"carrier_frequency_hz": 24.0e9, "sweep_bandwidth_hz": 100.0e6, "chirps": 512,
              "chirp_duration_s": 100.0e-6, "sample_rate_hz": 40.0e6, "tx_power": 1.0, "noise_variance": 1.0,
              "pathloss_eps": 1 / (4 * np.pi), "pathloss_exponent": 2.0},
    "envelope": {"family": "gaussian", "bandwidth_hz": 100.0e3, "beta_s": None, "duration_s": None},
    "code": {"n": 32, "rate": 8, "data_rate_bps": 2500},
}
_TARGET_KEYS = {"position_m", "velocity_mps", "range_m", "radial_velocity_mps", "azimuth_rad", "azimuth_deg",
                "elevation_rad", "rcs_m2", "kappa", "area_m2", "jammer_variance", "rx_noise_variance"}
_TOP = set(_SCHEMA) | {"targets", "seed"}


@dataclass
class ScenarioFile:
    """A parsed scenario plus the settings that are not part of the signal model."""

    scenario: Scenario
    code: dict = field(default_factory=dict)
    array: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    seed: int
    version: str
    outputs: list
    wall_clock_s: float

    def write(self, out_dir: Path) -> Path:
        p = Path(out_dir) / "manifest.json"
        p.write_text(json.dumps(self.__dict__, indent=2, sort_keys=True, default=_jsonable) + "\n")
        return p


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.1.0"


def derive_seed(seed: int, label: str) -> int:
    """Per-component seed: first 8 bytes of sha256("<seed>:<label>")."""
    h = hashlib.sha256(f"{int(seed)}:{label}".encode()).digest()
    return int.from_bytes(h[:8], "little") >> 1


# -- scenario files ----------------------------------------------------------

class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a sign or dot (1e9)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
    |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
    |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
    |[-+]?\.(?:inf|Inf|INF)
    |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


def _lines(text: str) -> dict:
    """Map key paths to 1-based line numbers using the YAML node tree."""
    out = {}
    try:
        root = yaml.compose(text, Loader=_Loader)
    except yaml.YAMLError:
        return out

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                p = path + (k.value,)
                out[p] = k.start_mark.line + 1
                walk(v, p)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                p = path + (i,)
                out[p] = v.start_mark.line + 1
                walk(v, p)

    if root is not None:
        walk(root, ())
    return out


def _where(lines, path):
    name = ".".join(str(p) for p in path)
    ln = lines.get(tuple(path))
    return f"{name} (line {ln})" if ln else name


def _num(d, key, path, lines, positive=False):
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{_where(lines, path + (key,))}: expected a number, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{_where(lines, path + (key,))}: must be positive")
    return float(v)


def _section(cfg, name, lines):
    got = cfg.get(name) or {}
    if not isinstance(got, dict):
        raise ConfigError(f"{_where(lines, (name,))}: expected a mapping")
    unknown = sorted(set(got) - set(_SCHEMA[name]))
    if unknown:
        raise ConfigError(f"{_where(lines, (name,))}: unknown keys {unknown}")
    return {**_SCHEMA[name], **got}


def _build(cfg: dict, lines: dict) -> ScenarioFile:
    if not isinstance(cfg, dict) or not cfg:
        raise ConfigError("scenario file is empty or not a mapping")
    unknown = sorted(set(cfg) - _TOP)
    if unknown:
        raise ConfigError(f"unknown top-level keys {unknown}")
    arr = _section(cfg, "array", lines)
    rad = _section(cfg, "radar", lines)
    envc = _section(cfg, "envelope", lines)
    code = _section(cfg, "code", lines)
    L = int(arr["antennas"])
    if L < 1:
        raise ConfigError(f"{_where(lines, ('array', 'antennas'))}: need at least one antenna")
    bore = np.deg2rad(_num(arr, "boresight_deg", ("array",), lines))
    if arr["geometry"] == "ula":
        geom = ArrayGeometry.ula(L, _num(arr, "spacing_m", ("array",), lines, True), boresight=bore)
    elif arr["geometry"] == "uca":
        if arr["radius_m"] is None:
            raise ConfigError(f"{_where(lines, ('array',))}: uca needs radius_m")
        geom = ArrayGeometry.uca(L, _num(arr, "radius_m", ("array",), lines, True), boresight=bore)
    else:
        raise ConfigError(f"{_where(lines, ('array', 'geometry'))}: expected 'ula' or 'uca'")
    fc = _num(rad, "carrier_frequency_hz", ("radar",), lines, True)
    B = _num(rad, "sweep_bandwidth_hz", ("radar",), lines, True)
    Ts = _num(rad, "chirp_duration_s", ("radar",), lines, True)
    fs = _num(rad, "sample_rate_hz", ("radar",), lines, True)
    if B >= 2 * fc:
        raise ConfigError(f"{_where(lines, ('radar', 'sweep_bandwidth_hz'))}: sweep wider than the carrier")
    car = FmcwCarrier(fc - B / 2, B, Ts)
    dur = Ts if envc["duration_s"] is None else _num(envc, "duration_s", ("envelope",), lines, True)
    if envc["beta_s"] is not None:
        beta = _num(envc, "beta_s", ("envelope",), lines, True)
    else:
        beta = beta_from_bandwidth(_num(envc, "bandwidth_hz", ("envelope",), lines, True))
    try:
        env = make_envelope(envc["family"], dur, fs, beta=beta)
    except InvalidArgument as e:
        raise ConfigError(f"{_where(lines, ('envelope',))}: {e}") from None
    h = _num(arr, "height_m", ("array",), lines)
    tl = cfg.get("targets") or []
    if not isinstance(tl, list):
        raise ConfigError(f"{_where(lines, ('targets',))}: expected a list")
    targets = []
    for i, t in enumerate(tl):
        p = ("targets", i)
        if not isinstance(t, dict):
            raise ConfigError(f"{_where(lines, p)}: expected a mapping")
        bad = sorted(set(t) - _TARGET_KEYS)
        if bad:
            raise ConfigError(f"{_where(lines, p)}: unknown keys {bad}")
        kw = dict(rcs=float(t.get("rcs_m2", 1.0)), kappa=float(t.get("kappa", 1.0)),
                  jammer_variance=float(t.get("jammer_variance", 0.0)),
                  rx_noise_variance=float(t.get("rx_noise_variance", rad["noise_variance"])))
        if "area_m2" in t:
            kw["area"] = float(t["area_m2"])
        try:
            if "position_m" in t:
                targets.append(Target.from_cartesian(t["position_m"], t.get("velocity_mps", (0.0, 0.0)), h, **kw))
            elif "range_m" in t:
                az = t["azimuth_rad"] if "azimuth_rad" in t else np.deg2rad(t.get("azimuth_deg", 90.0))
                targets.append(Target(range=float(t["range_m"]), velocity=float(t.get("radial_velocity_mps", 0.0)),
                                      azimuth=float(az), elevation=float(t.get("elevation_rad", 0.0)), **kw))
            else:
                raise ConfigError(f"{_where(lines, p)}: give position_m or range_m")
        except InvalidArgument as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"{_where(lines, p)}: {e}") from None
    try:
        from .scenario import Pathloss

        scn = Scenario(car, env, geom, tuple(targets), num_pulses=int(rad["chirps"]),
                       tx_power=_num(rad, "tx_power", ("radar",), lines),
                       noise_variance=_num(rad, "noise_variance", ("radar",), lines),
                       pathloss=Pathloss(_num(rad, "pathloss_eps", ("radar",), lines, True),
                                         _num(rad, "pathloss_exponent", ("radar",), lines, True)),
                       rng_seed=int(cfg.get("seed", 0)), antenna_height=h)
    except InvalidArgument as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from None
    return ScenarioFile(scn, code, arr, cfg)


def load_scenario_file(path) -> ScenarioFile:
    text = Path(path).read_text()
    try:
        cfg = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: {e}") from None
    return _build(cfg, _lines(text))


def parse_scenario(path) -> Scenario:
    """Scenario from a YAML file; unknown keys are rejected, missing keys take defaults."""
    return load_scenario_file(path).scenario


def bundled_scenario() -> Path:
    """Path of the two-target example scenario shipped with the package."""
    return Path(str(resources.files("jrctoolkit") / "data" / "two_target.scenario"))


def scenario_to_dict(sf: ScenarioFile | Scenario) -> dict:
    """Canonical mapping that parses back to the same scenario (targets in polar form)."""
    if isinstance(sf, Scenario):
        sf = ScenarioFile(sf)
    s = sf.scenario
    g = s.geometry
    arr = {**_SCHEMA["array"], **{k: v for k, v in sf.array.items()}}
    arr.update(antennas=g.L, geometry=g.kind, height_m=float(s.antenna_height),
               boresight_deg=float(np.rad2deg(g.boresight)))
    if g.kind == "ula":
        arr["spacing_m"] = float(g.spacing)
    else:
        arr["radius_m"] = float(np.linalg.norm(g.positions[0]))
    car = s.carrier
    env = s.envelope
    out = {
        "array": {k: v for k, v in arr.items() if v is not None},
        "radar": {"carrier_frequency_hz": float(car.f_c), "sweep_bandwidth_hz": float(car.sweep_bandwidth),
                  "chirps": int(s.num_pulses), "chirp_duration_s": float(car.chirp_duration),
                  "sample_rate_hz": float(env.sample_rate), "tx_power": float(s.tx_power),
                  "noise_variance": float(s.noise_variance), "pathloss_eps": float(s.pathloss.eps),
                  "pathloss_exponent": float(s.pathloss.exponent)},
        "envelope": {"family": env.family, "duration_s": float(env.duration)},
        "code": {**_SCHEMA["code"], **sf.code},
        "targets": [],
        "seed": int(s.rng_seed),
    }
    if env.beta is not None:
        out["envelope"]["beta_s"] = float(env.beta)
    for t in s.targets:
        d = {"range_m": float(t.range), "radial_velocity_mps": float(t.velocity),
             "azimuth_rad": float(t.azimuth), "elevation_rad": float(t.elevation), "rcs_m2": float(t.rcs),
             "kappa": float(t.kappa), "jammer_variance": float(t.jammer_variance),
             "rx_noise_variance": float(t.rx_noise_variance)}
        if t.area is not None:
            d["area_m2"] = float(t.area)
        out["targets"].append(d)
    if out["array"].get("beamwidth_az_deg") is not None:
        out["array"]["beamwidth_az_deg"] = [float(x) for x in out["array"]["beamwidth_az_deg"]]
        out["array"]["beamwidth_el_deg"] = [float(x) for x in out["array"]["beamwidth_el_deg"]]
    return out


def dump_scenario(sf, path) -> None:
    Path(path).write_text(yaml.safe_dump(scenario_to_dict(sf), sort_keys=True))


# -- subcommands ---------------------------------------------------------------

def _csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([format(v, ".17g") if isinstance(v, (float, np.floating)) else v for v in r])


def _cmd_optimize(a, out):
    from .optimizer import CovConfig, optimize, write_trace_csv

    beta = a.beta if a.beta is not None else (beta_from_bandwidth(a.bandwidth) if a.bandwidth else None)
    env = make_envelope(a.family, a.duration, a.sample_rate, beta=beta)
    files = []
    cfg_snap = {"family": a.family, "duration": a.duration, "sample_rate": a.sample_rate, "beta": env.beta,
                "caps": a.cap, "iters": a.iters}
    for cap in a.cap:
        cfg = CovConfig(max_iters=a.iters, bandwidth_cap=cap)
        e, tr = optimize(env, cfg)
        tag = f"{cap / 1e6:g}MHz"
        p1, p2 = out / f"waveform_{tag}.csv", out / f"trace_{tag}.csv"
        write_envelope_csv(e, p1)
        write_trace_csv(tr, p2)
        files += [p1, p2]
        log.info("cap %s: cost %.4g -> %.4g", tag, tr.cost[0], tr.cost[-1])
    return files, cfg_snap


def _cmd_beamformer(a, out):
    if a.geometry == "ula":
        geom = ArrayGeometry.ula(a.antennas, a.spacing)
    else:
        geom = ArrayGeometry.uca(a.antennas, a.radius)
    fov = tuple(np.deg2rad(a.fov))
    wl = 299_792_458.0 / a.frequency
    wfn = None
    if a.weight == "beam_grid":
        wfn = beam_grid_weight(fov, a.beams, geom.L, (geom.spacing or wl / 2) / wl)
    bank = design_beamformer(geom, fov, a.beams, weight_fn=wfn, taper=a.taper, f=a.frequency)
    scan = np.deg2rad(np.linspace(-90, 90, 3601))
    pats = beam_pattern(bank.weights, geom, scan, a.frequency)
    p1, p2, p3 = out / "geometry.csv", out / "weights.csv", out / "sidelobes.csv"
    write_geometry_csv(geom, p1)
    write_weights_csv(bank, p2)
    _csv(p3, ["beam_index", "peak_sidelobe_db"], [(m, float(peak_sidelobe_db(pats[m]))) for m in range(bank.M)])
    snap = {"geometry": a.geometry, "antennas": a.antennas, "spacing": a.spacing, "radius": a.radius,
            "fov_deg": a.fov, "beams": a.beams, "weight": a.weight, "taper": a.taper, "frequency": a.frequency,
            "nodes": bank.nodes}
    return [p1, p2, p3], snap


def _cmd_codebook(a, out):
    from .codebook import awgn_ber_curve, design, write_ber_csv, write_codebook_csv

    seed = derive_seed(a.seed, "codebook")
    cb = design(a.n, a.rate, a.samples, a.max_iters, seed=seed)
    p = out / "codebook.csv"
    write_codebook_csv(cb, p)
    files = [p]
    if a.snr:
        rows = awgn_ber_curve(cb, a.snr, a.trials, derive_seed(a.seed, "ber"))
        pb = out / "ber.csv"
        write_ber_csv(rows, pb)
        files.append(pb)
    snap = {"n": a.n, "rate": a.rate, "samples": a.samples, "max_iters": a.max_iters, "snr_db": a.snr,
            "trials": a.trials, "derived_seed": seed, "iterations": cb.meta["iterations"]}
    return files, snap


def _scenario_arg(a):
    return load_scenario_file(a.scenario or bundled_scenario())


def _cmd_bounds(a, out):
    from .bounds import crb_report, write_crb_csv

    sf = _scenario_arg(a)
    scn = sf.scenario
    if a.chirps:
        scn = scn.replace(num_pulses=a.chirps)
    reps = crb_report(scn, cross_terms=not a.no_cross)
    p = out / "crb.csv"
    write_crb_csv(reps, p)
    return [p], scenario_to_dict(ScenarioFile(scn, sf.code, sf.array))


def _cmd_rates(a, out):
    from .linkbudget import SuppressionParams, forward_rate, rate_table, reverse_rate, write_rates_csv

    sf = _scenario_arg(a)
    scn = sf.scenario
    if a.single_antenna:
        scn = scn.replace(geometry=ArrayGeometry.ula(1, scn.geometry.spacing or 0.0078))
    files = []
    if a.separation:
        grid = np.arange(a.r_min, a.r_max + 0.5 * a.r_step, a.r_step)
        for d in a.separation:
            rows = rate_table(scn, grid, d, rho_T_db=a.rho_db)
            p = out / f"rates_sep{d:g}m.csv"
            write_rates_csv(rows, p)
            files.append(p)
    else:
        if a.rho_db is not None:
            scn = scn.replace(noise_variance=scn.tx_power / 10 ** (a.rho_db / 10))
        params = SuppressionParams.from_scenario(scn)
        rows = []
        for k, t in enumerate(scn.targets):
            fw, rv = forward_rate(scn, k), reverse_rate(scn, k, params)
            rows.append((t.range, k, fw.rate_bits, rv.rate_bits, 10 * np.log10(max(fw.sinr, 1e-300)),
                         10 * np.log10(max(rv.sinr, 1e-300))))
        p = out / "rates.csv"
        write_rates_csv(rows, p)
        files.append(p)
    snap = {"scenario": scenario_to_dict(ScenarioFile(scn, sf.code, sf.array)), "separation": a.separation,
            "r_min": a.r_min, "r_max": a.r_max, "r_step": a.r_step, "rho_db": a.rho_db}
    return files, snap


_MODES = {"radar": "radar_only", "jrc-fwd": "jrc_forward", "jrc-rev": "jrc_reverse", "tdm": "tdm"}


def _cmd_simulate(a, out):
    from .codebook import design
    from .simulator import Receiver, ReceiverConfig, run_frame, tdm_mode

    sf = _scenario_arg(a)
    scn = sf.scenario.replace(rng_seed=derive_seed(a.seed, "noise"))
    if a.chirps:
        scn = scn.replace(num_pulses=a.chirps)
    mode = _MODES[a.mode]
    cb = None
    if mode != "radar_only":
        cb = design(int(sf.code["n"]), int(sf.code["rate"]), a.code_samples, seed=derive_seed(a.seed, "codebook"))
    rx = Receiver(scn, ReceiverConfig(codebook=cb))
    det_rows, agg = [], {}
    for f in range(a.frames):
        m = tdm_mode(f) if mode == "tdm" else mode
        rep = run_frame(scn, rx.cfg, f, m, rx, keep_map=a.dump_rd)
        for d in rep.detections:
            e = d.errors or (float("nan"),) * 3
            det_rows.append((f, m, -1 if d.truth is None else d.truth, d.est_range, d.est_velocity,
                             d.est_azimuth, d.snr_db, e[0], e[1], e[2],
                             "" if d.bit_errors is None else d.bit_errors))
            if d.truth is not None:
                s = agg.setdefault(d.truth, {"n": 0, "se": np.zeros(3), "bits": 0, "errs": 0})
                s["n"] += 1
                s["se"] += np.square(e)
                if d.bit_errors is not None:
                    s["errs"] += d.bit_errors
                    s["bits"] += d.decoded_bits.size
        if a.dump_rd:
            p = out / f"rd_frame{f}.csv"
            np.savetxt(p, rep.rd_map[:, : rx.kmax], delimiter=",", fmt="%.17g",
                       header=",".join(f"range_bin_{k}" for k in range(rx.kmax)), comments="")
    p1, p2 = out / "detections.csv", out / "aggregate.csv"
    _csv(p1, ["frame", "mode", "target", "range_m", "velocity_mps", "azimuth_rad", "snr_db",
              "err_range_m", "err_velocity_mps", "err_azimuth_rad", "bit_errors"], det_rows)
    arows = []
    for k in range(scn.K):
        s = agg.get(k, {"n": 0, "se": np.full(3, np.nan), "bits": 0, "errs": 0})
        rm = np.sqrt(s["se"] / s["n"]) if s["n"] else np.full(3, np.nan)
        arows.append((k, a.frames, s["n"] / a.frames, float(rm[0]), float(rm[1]), float(rm[2]),
                      s["errs"] / s["bits"] if s["bits"] else float("nan")))
    _csv(p2, ["target", "frames", "detection_rate", "rmse_range_m", "rmse_velocity_mps", "rmse_azimuth_rad",
              "ber"], arows)
    snap = {"scenario": scenario_to_dict(ScenarioFile(scn, sf.code, sf.array)), "frames": a.frames,
            "mode": a.mode, "code_samples": a.code_samples}
    return [p1, p2], snap


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jrctoolkit", description="Joint radar-communication toolkit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=Path("out"))
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None, help="cap on BLAS/FFT worker threads")
    g = common.add_mutually_exclusive_group()
    g.add_argument("--quiet", action="store_true")
    g.add_argument("--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd")

    o = sub.add_parser("optimize-waveform", parents=[common])
    o.add_argument("--family", default="gaussian")
    o.add_argument("--duration", type=float, default=100e-6)
    o.add_argument("--sample-rate", type=float, default=40e6)
    o.add_argument("--beta", type=float, default=None)
    o.add_argument("--bandwidth", type=float, default=None, help="3 dB envelope bandwidth (Hz)")
    o.add_argument("--cap", type=float, nargs="+", default=[1e6, 10e6])
    o.add_argument("--iters", type=int, default=200)

    b = sub.add_parser("design-beamformer", parents=[common])
    b.add_argument("--geometry", choices=["ula", "uca"], default="ula")
    b.add_argument("--antennas", type=int, default=12)
    b.add_argument("--spacing", type=float, default=0.0078)
    b.add_argument("--radius", type=float, default=0.05)
    b.add_argument("--fov", type=float, nargs=2, default=[-50.0, 48.0], metavar=("LO_DEG", "HI_DEG"))
    b.add_argument("--beams", type=int, default=8)
    b.add_argument("--weight", choices=["uniform", "beam_grid"], default="uniform")
    b.add_argument("--taper", choices=["taylor", "none"], default="taylor")
    b.add_argument("--frequency", type=float, default=24e9)

    c = sub.add_parser("design-codebook", parents=[common])
    c.add_argument("--n", type=int, default=32)
    c.add_argument("--rate", type=int, default=8)
    c.add_argument("--samples", type=int, default=100_000)
    c.add_argument("--max-iters", type=int, default=200)
    c.add_argument("--snr", type=float, nargs="*", default=[], help="Eb/N0 grid (dB) for ber.csv")
    c.add_argument("--trials", type=int, default=100_000)

    for name in ("bounds", "rates", "simulate"):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--scenario", type=Path, default=None, help="YAML scenario (default: bundled example)")
        if name == "bounds":
            s.add_argument("--chirps", type=int, default=None)
            s.add_argument("--no-cross", action="store_true")
        if name == "rates":
            s.add_argument("--separation", type=float, nargs="*", default=[])
            s.add_argument("--r-min", type=float, default=5.0)
            s.add_argument("--r-max", type=float, default=100.0)
            s.add_argument("--r-step", type=float, default=1.0)
            s.add_argument("--rho-db", type=float, default=None)
            s.add_argument("--single-antenna", action="store_true")
        if name == "simulate":
            s.add_argument("--frames", type=int, default=10)
            s.add_argument("--mode", choices=sorted(_MODES), default="radar")
            s.add_argument("--chirps", type=int, default=None)
            s.add_argument("--code-samples", type=int, default=100_000)
            s.add_argument("--dump-rd", action="store_true")
    return p


_COMMANDS = {"optimize-waveform": _cmd_optimize, "design-beamformer": _cmd_beamformer,
             "design-codebook": _cmd_codebook, "bounds": _cmd_bounds, "rates": _cmd_rates,
             "simulate": _cmd_simulate}


def dispatch(argv=None) -> int:
    """Run one subcommand; returns the process exit code."""
    p = _parser()
    try:
        a = p.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    if a.cmd is None:
        p.print_usage(sys.stderr)
        return 2
    level = logging.WARNING if a.quiet else logging.DEBUG if a.verbose else logging.INFO
    logging.basicConfig(level=level, format="%(message)s")
    t0 = time.perf_counter()
    try:
        a.out.mkdir(parents=True, exist_ok=True)
        with threadpool_limits(limits=a.threads):
            files, snap = _COMMANDS[a.cmd](a, a.out)
    except (InvalidArgument, FileNotFoundError) as e:
        log.error("configuration error: %s", e)
        return 2
    except Exception as e:  # noqa: BLE001 - report and map to exit code 1
        log.error("runtime failure: %s", e)
        return 1
    man = RunManifest(a.cmd, snap, a.seed, _version(), [str(Path(f).name) for f in files],
                      time.perf_counter() - t0)
    man.write(a.out)
    if a.verbose:
        log.debug("python %s, numpy %s", platform.python_version(), np.__version__)
    return 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
