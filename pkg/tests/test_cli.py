import csv
import json

import numpy as np
import pytest

from jrctoolkit.cli import (
    ConfigError, bundled_scenario, derive_seed, dispatch, dump_scenario, load_scenario_file,
    parse_scenario,
)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_bundled_scenario_contents():
    scn = parse_scenario(bundled_scenario())
    assert scn.num_pulses == 512
    assert scn.pulse_period == 1e-4
    assert scn.f_c == 2.4e10
    assert scn.geometry.L == 12
    assert scn.K == 2
    sf = load_scenario_file(bundled_scenario())
    pos = [t["position_m"] for t in sf.raw["targets"]]
    vel = [t["velocity_mps"] for t in sf.raw["targets"]]
    assert pos == [[25, 25], [25, 35]]
    assert vel == [[0.5, 1], [5, -10]]


def test_roundtrip_identical(tmp_path):
    sf = load_scenario_file(bundled_scenario())
    dump_scenario(sf, tmp_path / "copy.scenario")
    a, b = sf.scenario, parse_scenario(tmp_path / "copy.scenario")
    assert a.num_pulses == b.num_pulses and a.carrier == b.carrier
    assert np.array_equal(a.geometry.positions, b.geometry.positions)
    assert np.array_equal(a.envelope.samples, b.envelope.samples)
    for ta, tb in zip(a.targets, b.targets):
        assert (ta.range, ta.velocity, ta.azimuth, ta.elevation, ta.rcs) == \
            (tb.range, tb.velocity, tb.azimuth, tb.elevation, tb.rcs)


def test_schema_errors(tmp_path):
    empty = tmp_path / "empty.scenario"
    empty.write_text("")
    with pytest.raises(ConfigError):
        load_scenario_file(empty)
    bad = tmp_path / "bad.scenario"
    bad.write_text(bundled_scenario().read_text().replace("radar:", "radar:\n  bogus_key: 1"))
    with pytest.raises(ConfigError, match="bogus_key"):
        load_scenario_file(bad)
    assert dispatch(["bounds", "--scenario", str(empty), "--out", str(tmp_path / "o"), "--quiet"]) == 2
    assert dispatch(["bounds", "--scenario", str(tmp_path / "missing"), "--out", str(tmp_path / "o"),
                     "--quiet"]) == 2
    assert dispatch(["bounds", "--bogus"]) == 2


def test_bounds_one_row_per_target_and_manifest(tmp_path):
    out = tmp_path / "out"
    assert dispatch(["bounds", "--scenario", str(bundled_scenario()), "--out", str(out), "--quiet"]) == 0
    rows = _rows(out / "crb.csv")
    assert rows[0] == ["target", "crb_range_m2", "crb_vel_m2s2", "crb_az_rad2", "with_cross_terms"]
    assert len(rows) == 3
    man = json.loads((out / "manifest.json").read_text())
    assert man["outputs"] == ["crb.csv"]
    assert len(list(out.glob("manifest*.json"))) == 1


def test_codebook_cli_and_byte_identical_reruns(tmp_path):
    args = ["design-codebook", "--n", "32", "--rate", "8", "--seed", "7", "--samples", "5000", "--quiet"]
    assert dispatch(args + ["--out", str(tmp_path / "a")]) == 0
    assert dispatch(args + ["--out", str(tmp_path / "b")]) == 0
    rows = _rows(tmp_path / "a" / "codebook.csv")
    assert len(rows) == 257 and all(len(r) == 32 for r in rows)
    assert (tmp_path / "a" / "codebook.csv").read_bytes() == (tmp_path / "b" / "codebook.csv").read_bytes()


def test_rates_and_beamformer_outputs(tmp_path):
    assert dispatch(["rates", "--out", str(tmp_path / "r"), "--separation", "1", "5", "--quiet"]) == 0
    assert sorted(p.name for p in (tmp_path / "r").glob("*.csv")) == ["rates_sep1m.csv", "rates_sep5m.csv"]
    assert dispatch(["design-beamformer", "--out", str(tmp_path / "b"), "--weight", "beam_grid",
                     "--spacing", "0.0062456762", "--quiet"]) == 0
    side = _rows(tmp_path / "b" / "sidelobes.csv")
    assert len(side) == 9


def test_optimize_and_simulate_smoke(tmp_path):
    assert dispatch(["optimize-waveform", "--out", str(tmp_path / "w"), "--iters", "2", "--cap", "10e6",
                     "--quiet"]) == 0
    assert (tmp_path / "w" / "trace_10MHz.csv").exists()
    out = tmp_path / "s"
    assert dispatch(["simulate", "--out", str(out), "--chirps", "32", "--frames", "1", "--mode", "radar",
                     "--quiet"]) == 0
    agg = _rows(out / "aggregate.csv")
    assert agg[0][:3] == ["target", "frames", "detection_rate"]
    assert len(agg) == 3


def test_seed_derivation():
    assert derive_seed(7, "codebook") == derive_seed(7, "codebook")
    assert derive_seed(7, "codebook") != derive_seed(7, "simulate")
    assert derive_seed(7, "codebook") != derive_seed(8, "codebook")
