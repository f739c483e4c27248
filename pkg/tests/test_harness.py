"""Scenario config, sweep outputs and the command-line interface."""

import pytest

from manetsim.cli import load_config_file, main
from manetsim.metrics import read_trace_csv
from manetsim.mobility import STATIC
from manetsim.scenario import ConfigInvalid, ScenarioConfig, run_scenario
from manetsim.sweep import (SweepSpec, cell_mean, emit_plot_data,
                            read_raw_csv, run_sweep)

FAST = dict(node_count=12, n_flows=3, sim_time=12.0, warmup=4.0, seed=7,
            mac_mode="ideal", pause_time=STATIC)


# -- configuration ------------------------------------------------------

def test_default_config_is_valid():
    assert ScenarioConfig().validate() == []


def test_validation_collects_all_errors():
    cfg = ScenarioConfig(protocol="OSPF", node_count=1, max_speed=0,
                         n_flows=99, mac_mode="half-duplex")
    errors = cfg.validate()
    assert len(errors) >= 5
    with pytest.raises(ConfigInvalid):
        cfg.check()


def test_warmup_must_precede_sim_end():
    assert ScenarioConfig(sim_time=10, warmup=10).validate()
    assert ScenarioConfig(sim_time=10, warmup=20).validate()


def test_static_pause_is_accepted():
    assert ScenarioConfig(pause_time=STATIC).validate() == []
    assert ScenarioConfig(pause_time=-1.0).validate()


def test_config_file_parsing(tmp_path):
    path = tmp_path / "scenario.cfg"
    path.write_text(
        "protocol = DSR   # trailing comment\n"
        "\n"
        "node_count = 30\n"
        "pause_time = static\n"
        "max_speed = 12.5\n")
    values = load_config_file(path)
    assert values == {"protocol": "DSR", "node_count": 30,
                      "pause_time": STATIC, "max_speed": 12.5}


def test_config_file_rejects_unknown_keys(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("wibble = 3\n")
    with pytest.raises(ConfigInvalid):
        load_config_file(path)


# -- single scenarios ---------------------------------------------------

def test_run_scenario_is_deterministic():
    a, _ = run_scenario(ScenarioConfig(**FAST))
    b, _ = run_scenario(ScenarioConfig(**FAST))
    assert a == b


def test_different_seeds_differ():
    a, _ = run_scenario(ScenarioConfig(**FAST))
    b, _ = run_scenario(ScenarioConfig(**{**FAST, "seed": 8}))
    assert not (a == b)


def test_run_scenario_writes_traces(tmp_path):
    trace_path = tmp_path / "trace.csv"
    move_path = tmp_path / "moves.csv"
    record, trace = run_scenario(ScenarioConfig(**FAST),
                                 trace_path=str(trace_path),
                                 move_trace_path=str(move_path))
    back = read_trace_csv(trace_path)
    assert back.packets_sent == trace.packets_sent
    assert move_path.read_text().startswith("time,node,x,y\n")


# -- sweeps -------------------------------------------------------------

@pytest.fixture(scope="module")
def small_sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    spec = SweepSpec(protocols=["AODV", "DSDV"], node_counts=[12],
                     pause_times=[STATIC, 5.0], seeds_per_cell=2)
    base = ScenarioConfig(**FAST)
    rows, failures = run_sweep(spec, base, str(out))
    return spec, rows, failures, out


def test_sweep_runs_every_cell(small_sweep):
    spec, rows, failures, _ = small_sweep
    assert failures == []
    assert len(rows) == 2 * 1 * 2 * 2


def test_sweep_writes_tables(small_sweep):
    spec, rows, _, out = small_sweep
    for name in ("raw.csv", "throughput.csv", "pdr.csv", "delay.csv"):
        assert (out / name).exists()
    pdr = (out / "pdr.csv").read_text().splitlines()
    assert pdr[0] == "pause,AODV_12,DSDV_12"
    assert pdr[1].startswith("static,")
    assert pdr[2].startswith("5,")


def test_raw_csv_round_trip(small_sweep):
    spec, rows, _, out = small_sweep
    back = read_raw_csv(out / "raw.csv")
    assert len(back) == len(rows)
    for got, want in zip(back, rows):
        assert got["protocol"] == want["protocol"]
        assert got["pause"] == want["pause"]
        assert got["packets_sent"] == want["packets_sent"]
        assert got["pdr"] == pytest.approx(want["pdr"], abs=1e-6)


def test_cell_mean_averages_over_seeds(small_sweep):
    spec, rows, _, _ = small_sweep
    vals = [r["pdr"] for r in rows
            if r["protocol"] == "AODV" and r["pause"] == STATIC]
    assert len(vals) == 2
    assert cell_mean(rows, "AODV", 12, STATIC, "pdr") == sum(vals) / 2


def test_plot_data_files(small_sweep):
    spec, rows, _, out = small_sweep
    paths = emit_plot_data(rows, spec, str(out))
    assert len(paths) == 3 * 1  # 3 metrics x 1 node count
    lines = (out / "fig_pdr_12.dat").read_text().splitlines()
    assert lines[0] == "# pause AODV DSDV"
    assert lines[1].split()[0] == "static"
    assert len(lines) == 3


def test_sweep_records_per_cell_failures(tmp_path):
    spec = SweepSpec(protocols=["AODV"], node_counts=[4], pause_times=[STATIC],
                     seeds_per_cell=1)
    base = ScenarioConfig(**FAST)   # n_flows=3 impossible with 4 nodes
    rows, failures = run_sweep(spec, base, str(tmp_path))
    assert rows == [] and len(failures) == 1


# -- CLI ----------------------------------------------------------------

def test_cli_validate_ok(capsys):
    assert main(["validate", "--protocol", "AODV", "--nodes", "30"]) == 0
    assert "config ok" in capsys.readouterr().out


def test_cli_validate_bad_config(capsys):
    assert main(["validate", "--nodes", "1"]) == 1
    assert "config error" in capsys.readouterr().err


def test_cli_run_prints_metrics(tmp_path, capsys):
    code = main(["run", "--protocol", "DSDV", "--nodes", "12", "--seed", "3",
                 "--sim-time", "12", "--mac", "ideal", "--pause", "static",
                 "--config", _fast_cfg(tmp_path),
                 "--out", str(tmp_path), "--trace"])
    assert code == 0
    out = capsys.readouterr().out
    assert "protocol=DSDV" in out and "pdr=" in out
    assert (tmp_path / "trace.csv").exists()


def test_cli_sweep_and_plotdata(tmp_path, capsys):
    code = main(["sweep", "--protocols", "AODV", "--node-counts", "12",
                 "--pauses", "static", "--seeds-per-cell", "1",
                 "--config", _fast_cfg(tmp_path), "--mac", "ideal",
                 "--quiet", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "raw.csv").exists()
    assert (tmp_path / "fig_delay_12.dat").exists()
    code = main(["plotdata", "--protocols", "AODV", "--node-counts", "12",
                 "--pauses", "static", "--out", str(tmp_path)])
    assert code == 0


def test_cli_sweep_failed_cell_exit_code(tmp_path, capsys):
    code = main(["sweep", "--protocols", "AODV", "--node-counts", "4",
                 "--pauses", "static", "--seeds-per-cell", "1",
                 "--config", _fast_cfg(tmp_path), "--quiet",
                 "--out", str(tmp_path)])
    assert code == 2


def _fast_cfg(tmp_path):
    path = tmp_path / "fast.cfg"
    path.write_text("n_flows = 3\nsim_time = 12\nwarmup = 4\n")
    return str(path)
