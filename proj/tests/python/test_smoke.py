import os

import pytest

import xtalk

FIXTURES = os.environ.get("XTALK_FIXTURE_DIR", os.path.join(os.path.dirname(__file__), "..", "fixtures"))


def fixture(name):
    return os.path.join(FIXTURES, name)


@pytest.fixture
def chain6():
    return xtalk.Device.load(fixture("chain6.json"))


@pytest.fixture
def three_cx():
    return xtalk.Circuit.load(fixture("three_cx.qc"))


def test_cost_arithmetic():
    executions, _ = xtalk.estimate_cost(221, 100, 1024)
    assert executions == 22_630_400


def test_xtalk_beats_baselines_on_three_cx(chain6, three_cx):
    sched = xtalk.schedule(chain6, three_cx, omega=0.5)
    assert sched.optimal
    assert sched.barrier_enforced
    assert xtalk.verify(chain6, three_cx, sched) == []
    err = xtalk.analytic_success(chain6, three_cx, sched)["analytic_error"]
    for name in ("serial", "parallel"):
        base = xtalk.schedule(chain6, three_cx, scheduler=name)
        assert xtalk.verify(chain6, three_cx, base) == []
        assert err < xtalk.analytic_success(chain6, three_cx, base)["analytic_error"]


def test_schedule_json_round_trip(chain6, three_cx):
    sched = xtalk.schedule(chain6, three_cx, scheduler="parallel")
    back = xtalk.Schedule.from_json(sched.to_json())
    assert back.start_ns == sched.start_ns
    assert back.makespan_ns == 1450


def test_monte_carlo_report(chain6, three_cx):
    sched = xtalk.schedule(chain6, three_cx, scheduler="serial")
    r = xtalk.monte_carlo_success(chain6, three_cx, sched, trials=20000, seed=3)
    assert r["mc_trials"] == 20000
    assert r["mc_ci_low"] <= r["mc_success"] <= r["mc_ci_high"]


def test_noiseless_fit():
    lengths = [1, 5, 10, 15, 20, 25, 30, 35, 40]
    survival = [0.75 * 0.98**m + 0.25 for m in lengths]
    assert xtalk.fit_rb(lengths, survival)["alpha"] == pytest.approx(0.98, abs=1e-9)


def test_generators():
    grid = xtalk.Device.load(fixture("grid20.json"))
    circuit, path = xtalk.gen_swap_path(grid, 0, 13)
    assert path == [0, 5, 10, 11, 12, 13]
    assert len(circuit.cx_instructions()) == 13
    a = xtalk.gen_random_circuit(grid, 6, 4, 9)
    assert a.to_text() == xtalk.gen_random_circuit(grid, 6, 4, 9).to_text()


def test_errors_map_to_exceptions(chain6, three_cx):
    with pytest.raises(xtalk.ParseError):
        xtalk.Circuit.parse("cx 0\n")
    with pytest.raises(xtalk.ArgumentError):
        xtalk.schedule(chain6, three_cx, scheduler="bogus")
    assert issubclass(xtalk.SolverError, xtalk.Error)


def test_cli_entry_point():
    code, out, _ = xtalk.run_cli(["characterize-plan", "--experiments", "221"])
    assert code == 0
    assert "22,630,400" in out
