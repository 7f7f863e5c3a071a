import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eventeraser import harness, oracle
from eventeraser.harness import (ConfigError, CurvePoint, SweepSpec, compare_report,
                                 estimate_visibility, oracle_visibility, run_mzi_sweep, run_sweep,
                                 spec_for_preset, write_outputs)
from eventeraser.messages import Mixed, PureLinear, SourceSpec
from eventeraser.network import WiringError


# visibility estimate -----------------------------------------------------------

@pytest.mark.parametrize("counts,want", [([50, 100, 50, 0], 1.0), ([70, 70, 70], 0.0),
                                         ([75, 100, 75, 50], 1 / 3)])
def test_estimate_visibility_examples(counts, want):
    assert estimate_visibility(counts).value == pytest.approx(want, abs=1e-15)
    pairs = [(10.0 * k, n) for k, n in enumerate(counts)]
    assert estimate_visibility(pairs).value == pytest.approx(want, abs=1e-15)


def test_estimate_visibility_edge_cases():
    with pytest.raises(ValueError):
        estimate_visibility([])
    assert estimate_visibility([0, 0, 0]) == (0.0, True)


@given(st.lists(st.integers(0, 10 ** 6), min_size=2, max_size=40), st.integers(1, 1000))
def test_estimate_visibility_scale_invariant(counts, k):
    a = estimate_visibility(counts)
    b = estimate_visibility([k * c for c in counts])
    assert a.degenerate == b.degenerate
    assert b.value == pytest.approx(a.value, abs=1e-12)
    assert 0.0 <= a.value <= 1.0


def test_split_events():
    parts = harness.split_events(1_000_000, 32)
    assert sum(parts) == 1_000_000 and max(parts) - min(parts) <= 1


# reports ---------------------------------------------------------------------

def _pt(t, dev):
    return CurvePoint(t, 0.5 + dev, 0.5, dev, [])


def test_compare_report_examples():
    assert compare_report([_pt(0, 0.0), _pt(5, 0.0)], 1e-12).passed
    rep = compare_report([_pt(0, 0.0), _pt(5, 0.05), _pt(10, 0.01)], 0.03)
    assert not rep.passed
    assert rep.offenders == [(5, 0.05)]
    assert rep.max_abs_dev == 0.05 and rep.mean_abs_dev == pytest.approx(0.02)
    assert "offender at 5" in rep.summary()
    with pytest.raises(ValueError):
        compare_report([], 0.0)


# configuration ---------------------------------------------------------------------

def test_presets_match_figures():
    p = harness.PRESETS
    assert p["fig3a-pureV-45"].theta_hwp0 == 45.0 and p["fig3a-pureV-10"].theta_hwp0 == 10.0
    assert p["fig3b-mixed"].source.kind == Mixed(0.5, 0.5)
    assert p["fig3c-partial"].source.kind.beta == pytest.approx(math.degrees(math.atan(math.sqrt(2))))
    assert p["fig3c-partial"].theta_hwp0 == 22.5
    assert p["fig4a-qwp"].theta_qwp == 0.0
    assert p["fig4b-qwp-xi45"].source.kind == PureLinear(45.0) and p["fig4b-qwp-xi45"].theta_hwp0 == 22.5


def test_default_grids():
    spec = SweepSpec()
    assert spec.two_theta1_grid == [5.0 * k for k in range(19)]
    assert len(spec.phi_grid) == 32 and spec.phi_grid[1] == 11.25
    assert spec.gamma == 0.99 and spec.tolerance == 0.03


def test_preset_refuses_inconsistent_source():
    with pytest.raises(ConfigError):
        spec_for_preset("fig3a-pureV-45", source=SourceSpec(Mixed(0.5, 0.5)))
    with pytest.raises(ConfigError):
        spec_for_preset("fig3b-mixed", theta_qwp=0.0)
    spec_for_preset("custom", source=SourceSpec(Mixed(0.5, 0.5)), theta_qwp=10.0)


@pytest.mark.parametrize("bad", [dict(preset="nope"), dict(phi_grid=[]), dict(gamma=1.0),
                                 dict(policy="coin"), dict(analyzed_port=3), dict(tolerance=0.0),
                                 dict(events_per_point=5), dict(two_theta1_grid=[])])
def test_spec_validation(bad):
    d = {"preset": "custom", **bad}
    with pytest.raises(ConfigError):
        harness.spec_from_dict(d)


def test_spec_dict_roundtrip():
    spec = spec_for_preset("fig3c-partial", events_per_point=3200, seed=5)
    again = harness.spec_from_dict(json.loads(json.dumps(harness.spec_to_dict(spec))))
    assert again == spec


def test_unknown_config_key():
    with pytest.raises(ConfigError, match="unknown"):
        harness.spec_from_dict({"preset": "custom", "events": 10})


def test_load_config_yaml(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("preset: fig3b-mixed\nevents_per_point: 640\nseed: 3\ntwo_theta1_grid: [0, 45]\n")
    spec = harness.spec_from_dict(harness.load_config(p))
    assert spec.preset == "fig3b-mixed" and spec.two_theta1_grid == [0, 45]
    p.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        harness.load_config(p)
    with pytest.raises(ConfigError):
        harness.load_config(tmp_path / "missing.yaml")


# oracle dispatch and wiring ---------------------------------------------------------

def test_oracle_visibility_dispatch():
    v = SourceSpec(PureLinear(90.0))
    assert oracle_visibility(v, 10.0, 0.0, None) == oracle.visibility_pure_no_qwp(90.0, 10.0, 0.0)
    assert oracle_visibility(v, 45.0, 11.0, 0.0) == oracle.visibility_pure_qwp0(90.0, 45.0, 11.0)
    m = SourceSpec(Mixed(2 / 3, 1 / 3))
    assert oracle_visibility(m, 22.5, 5.0, None) == oracle.visibility_mixed(m.kind.beta, 22.5, 5.0)
    assert oracle_visibility(SourceSpec(Mixed(1.0, 0.0)), 45.0, 5.0, None) == \
        oracle.visibility_pure_no_qwp(90.0, 45.0, 5.0)
    # no closed form: mixed source behind a QWP
    got = oracle_visibility(m, 22.5, 5.0, 15.0)
    assert got == oracle.sweep_visibility(oracle.mixture_from_source(m), 22.5, 5.0, 15.0).value


@pytest.mark.parametrize("port", [0, 1])
@pytest.mark.parametrize("qwp", [None, 0.0])
def test_verify_wiring_accepts_both_ports(port, qwp):
    harness.verify_wiring(port, qwp)


def test_verify_wiring_detects_mismatch(monkeypatch):
    monkeypatch.setattr(oracle, "detector_probs", lambda state, port=1: (abs(state[0]) ** 2, 0.0, 0.0))
    with pytest.raises(WiringError):
        harness.verify_wiring(1, None)


# sweeps ------------------------------------------------------------------------

# 10^6 events per phase, as in the figure runs (see test_split_budget_noise_floor)
PAPER_BUDGET = 32 * 1_000_000


@pytest.mark.slow
def test_sweep_pure_v_45_spot_points():
    spec = spec_for_preset("fig3a-pureV-45", two_theta1_grid=[0.0, 45.0, 90.0], events_per_point=PAPER_BUDGET)
    points = run_sweep(spec)
    assert [p.v_oracle for p in points] == pytest.approx([0.0, 1.0, 0.0], abs=1e-12)
    for p in points:
        assert p.abs_dev <= 0.03
        assert sum(n0 + n1 + nd for _, n0, n1, nd in p.counts_per_phi) == spec.events_per_point


@pytest.mark.slow
def test_sweep_mixed_at_45():
    points = run_sweep(spec_for_preset("fig3b-mixed", two_theta1_grid=[45.0], events_per_point=PAPER_BUDGET))
    assert points[0].v_sim == pytest.approx(1.0, abs=0.03)


def test_sweep_independent_of_workers():
    spec = spec_for_preset("fig4b-qwp-xi45", two_theta1_grid=[10.0, 40.0], events_per_point=32_000)
    a = run_sweep(spec)
    b = run_sweep(spec, workers=2)
    assert [p.counts_per_phi for p in a] == [p.counts_per_phi for p in b]


def test_sweep_rejects_bare_mzi():
    with pytest.raises(ConfigError):
        run_sweep(spec_for_preset("bare-mzi"))


def test_mzi_sweep_small():
    spec = spec_for_preset("bare-mzi", phi_grid=[0.0, 90.0, 180.0, 270.0], events_per_point=200_000)
    pts = run_mzi_sweep(spec)
    assert [p.p0_oracle for p in pts] == pytest.approx([0.0, 0.5, 1.0, 0.5], abs=1e-12)
    assert max(p.abs_dev for p in pts) <= 0.01


def test_split_budget_noise_floor():
    """At 10^6 events spread over 32 phases even an exact sampler misses 0.03 here.

    pure V, theta0 = 10, 2*theta1 = 90: D0 sees ~2.9% of the events, about 900
    counts per phase, and raw-extreme visibility of a flat fringe is biased up by
    ~2/sqrt(900).
    """
    grid = oracle.default_phi_grid()
    p = oracle.p_d0_curve([(90.0, 1.0)], grid, 10.0, 45.0)
    want = oracle.visibility_pure_no_qwp(90.0, 10.0, 45.0)
    rng = np.random.default_rng(0)
    for per_cell, bad in ((1_000_000 // 32, True), (1_000_000, False)):
        n = rng.binomial(per_cell, p, size=(500, 32))
        dev = np.abs((n.max(1) - n.min(1)) / (n.max(1) + n.min(1)) - want)
        assert (np.median(dev) > 0.03) == bad


# output files ------------------------------------------------------------------

def test_write_outputs_empty(tmp_path):
    paths = write_outputs([], tmp_path, SweepSpec())
    assert paths["curve"].read_text() == "two_theta1_deg,v_sim,v_oracle,abs_dev\n"


def _small_spec(**kw):
    base = dict(phi_grid=[float(x) for x in oracle.default_phi_grid(8)], events_per_point=800)
    base.update(kw)
    return spec_for_preset("fig4a-qwp", **base)


def test_write_outputs_19_rows_and_manifest(tmp_path):
    spec = _small_spec()
    points = run_sweep(spec)
    paths = write_outputs(points, tmp_path, spec)
    rows = list(csv.reader(paths["curve"].open()))
    assert rows[0] == harness.CURVE_HEADER and len(rows) == 20
    # at least 9 significant digits survive
    assert float(rows[5][2]) == pytest.approx(points[4].v_oracle, rel=1e-11)
    counts = list(csv.reader(paths["counts"].open()))
    assert len(counts) == 1 + 19 * 8
    man = json.loads(paths["manifest"].read_text())
    assert man["spec"]["seed"] == spec.seed and man["spec"]["gamma"] == 0.99
    assert man["spec"]["preset"] == "fig4a-qwp" and man["code_version"]
    assert man["files"] == {"curve": paths["curve"].name, "counts": paths["counts"].name}


def test_rerun_is_byte_identical(tmp_path):
    spec = _small_spec(seed=77)
    a = write_outputs(run_sweep(spec, keep_events=True), tmp_path / "a", spec, gamma_format="binary")
    spec2 = harness.spec_from_dict(json.loads(a["manifest"].read_text())["spec"])
    b = write_outputs(run_sweep(spec2, keep_events=True), tmp_path / "b", spec2, gamma_format="binary")
    for key in ("curve", "counts", "gamma", "manifest"):
        assert a[key].read_bytes() == b[key].read_bytes()


def test_gamma_dataset_formats(tmp_path):
    spec = _small_spec(two_theta1_grid=[20.0], events_per_point=80)
    points = run_sweep(spec, keep_events=True)
    binp = harness.write_gamma_binary(points, tmp_path / "g.bin")
    raw = binp.read_bytes()
    assert raw[:16] == harness.GAMMA_MAGIC and len(raw) == 16 + 80 * harness.GAMMA_DTYPE.itemsize
    rec = harness.read_gamma_binary(binp)
    assert len(rec) == 80 and set(rec["x"]) <= {0, 1, 2}
    assert np.all(rec["theta_hwp1"] == 10.0) and np.all(rec["theta_qwp"] == 0.0)
    assert list(rec["l"][:10]) == list(range(1, 11))
    cells = points[0].datasets
    assert np.array_equal(rec["x"], np.concatenate([ds.outcomes for ds in cells]))
    rows = list(csv.reader(harness.write_gamma_csv(points, tmp_path / "g.csv").open()))
    assert rows[0] == harness.GAMMA_HEADER and len(rows) == 81
    assert int(rows[1][1]) == rec["x"][0]
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"x" * 40)
    with pytest.raises(ValueError):
        harness.read_gamma_binary(bad)


def test_gamma_csv_marks_absent_qwp(tmp_path):
    spec = spec_for_preset("fig3a-pureV-45", two_theta1_grid=[0.0], events_per_point=64)
    rows = list(csv.reader(harness.write_gamma_csv(run_sweep(spec, keep_events=True), tmp_path / "g.csv").open()))
    assert rows[1][5] == ""


def test_gamma_needs_events(tmp_path):
    spec = _small_spec(two_theta1_grid=[0.0])
    with pytest.raises(ValueError):
        write_outputs(run_sweep(spec), tmp_path, spec, gamma_format="csv")


def test_write_outputs_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        write_outputs([], blocker / "sub", SweepSpec())
