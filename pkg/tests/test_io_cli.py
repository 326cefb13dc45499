import csv
import json
import struct
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from feas.cli import main
from feas.diagnostics import DiagnosticsRecorder
from feas.io import (
    ConfigError,
    SnapshotError,
    parse_config,
    read_snapshot,
    read_timeseries,
    timeseries_header,
    write_snapshot,
    write_timeseries,
)
from feas.model import DensityModes, NullEntropy, State, TrigPolynomial, make_initial_data
from feas.spectral import Field, Grid

MINIMAL = """\
alpha = 1
[grid]
sizes = 128
[ic]
kind = trig_polynomial
"""

RUN = """\
alpha = 1.0
seed = 3
[grid]
sizes = 64
[scheme]
t_end = {t_end}
record_every = 4
[ic]
kind = null_entropy
rho_modes = 1:0.3:0.0; 2:0.0:0.1
entropy_amplitude = 0.01
[diagnostics]
p_list = 2, 4
q_list = 1
[output]
snapshot_every = 1
"""


class TestConfig:
    def test_minimal_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.alpha == 1.0 and cfg.grid.sizes == (128,)
        assert cfg.ic == TrigPolynomial()
        assert cfg.scheme.method == "ssprk3" and cfg.scheme.cfl_safety == 0.5
        assert cfg.p_list == (2.0, 4.0) and cfg.q_list == (1, 2) and cfg.Q_list == (1, 2, 3)

    def test_alpha_range(self):
        with pytest.raises(ConfigError, match=r"line 1: alpha in \(0,2\]"):
            parse_config(MINIMAL.replace("alpha = 1", "alpha = 2.5"))

    def test_duplicate_key_names_both_lines(self):
        with pytest.raises(ConfigError) as exc:
            parse_config(MINIMAL + "kind = density_modes\n")
        assert "line 5" in str(exc.value) and "line 6" in str(exc.value)

    @pytest.mark.parametrize("extra, line", [("[bogus]\n", 6), ("frobnicate = 1\n", 6),
                                             ("seed = x\n", 6), ("rho_floor\n", 6)])
    def test_errors_carry_line(self, extra, line):
        with pytest.raises(ConfigError) as exc:
            parse_config(MINIMAL + extra)
        assert exc.value.line == line

    def test_scheme_validation(self):
        with pytest.raises(ConfigError, match="cfl_safety"):
            parse_config(MINIMAL + "[scheme]\ncfl_safety = 2\n")

    def test_null_entropy_modes(self):
        cfg = parse_config(RUN.format(t_end=1))
        assert isinstance(cfg.ic, NullEntropy)
        assert cfg.ic.rho == DensityModes(1.0, (((1,), 0.3, 0.0), ((2,), 0.0, 0.1)))

    def test_missing_alpha(self):
        with pytest.raises(ConfigError, match="alpha"):
            parse_config("[grid]\nsizes = 16\n")


class TestSnapshot:
    @given(st.integers(0, 2**20), st.sampled_from([(16,), (8, 16)]), st.floats(0, 100))
    def test_round_trip_bit_identical(self, tmp_path_factory, seed, sizes, t):
        g = Grid(sizes)
        rng = np.random.default_rng(seed)
        s = State(Field(g, 1 + rng.random(g.shape)), Field(g, rng.standard_normal(g.shape)), t)
        p = tmp_path_factory.mktemp("snap") / "s.bin"
        write_snapshot(s, p, 1.25)
        back, alpha = read_snapshot(p)
        assert alpha == 1.25 and back.time == t
        assert back.rho.values.tobytes() == s.rho.values.tobytes()
        assert back.u.values.tobytes() == s.u.values.tobytes()

    def test_layout(self, tmp_path):
        g = Grid.of(8)
        s = State(Field(g, np.arange(1.0, 9.0)), Field(g, np.arange(9.0, 17.0)), 0.5)
        p = tmp_path / "s.bin"
        write_snapshot(s, p, 1.0)
        raw = p.read_bytes()
        assert raw[:4] == b"FEAS" and raw[4] == 1 and raw[5] == 1
        assert struct.unpack_from("<Qdd", raw, 6) == (8, 0.5, 1.0)
        assert np.array_equal(np.frombuffer(raw[30:], "<f8"), np.arange(1.0, 17.0))
        assert len(raw) == 30 + 2 * 8 * 8

    def test_truncated(self, tmp_path):
        p = tmp_path / "s.bin"
        write_snapshot(make_initial_data(TrigPolynomial(), Grid.of(16)), p, 1.0)
        p.write_bytes(p.read_bytes()[:-8])
        with pytest.raises(SnapshotError, match="expected 286 bytes, got 278"):
            read_snapshot(p)

    def test_version_two(self, tmp_path):
        p = tmp_path / "s.bin"
        write_snapshot(make_initial_data(TrigPolynomial(), Grid.of(16)), p, 1.0)
        raw = bytearray(p.read_bytes())
        raw[4] = 2
        p.write_bytes(bytes(raw))
        with pytest.raises(SnapshotError, match="version 2"):
            read_snapshot(p)

    def test_bad_grid(self, tmp_path):
        p = tmp_path / "s.bin"
        p.write_bytes(b"FEAS" + struct.pack("<BBQdd", 1, 1, 6, 0.0, 1.0) + bytes(96))
        with pytest.raises(SnapshotError, match="grid"):
            read_snapshot(p)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "s.bin"
        p.write_bytes(b"NOPE" + bytes(40))
        with pytest.raises(SnapshotError, match="magic"):
            read_snapshot(p)


class TestTimeseries:
    def test_header(self):
        assert timeseries_header((2.0, 4.0), (1, 2))[-4:] == ["lp_dev_p2", "lp_dev_p4", "gronwall_q1", "gronwall_q2"]

    def test_empty(self, tmp_path):
        p = tmp_path / "ts.csv"
        write_timeseries([], p)
        assert p.read_text().count("\n") == 1

    def test_one_record_round_trip(self, tmp_path):
        s = make_initial_data(TrigPolynomial(seed=4), Grid.of(32))
        rec = DiagnosticsRecorder(1.0)(s)
        p = tmp_path / "ts.csv"
        write_timeseries([rec], p)
        raw = p.read_bytes()
        assert raw.count(b"\n") == 2 and b"\r" not in raw
        header, data = read_timeseries(p)
        row = rec.row((2.0, 4.0), (1, 2))
        assert header == timeseries_header((2.0, 4.0), (1, 2))
        assert all(a == b or (np.isnan(a) and np.isnan(b)) for a, b in zip(data[0], row))


def _write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestCli:
    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_missing_argument(self):
        assert main(["simulate", "--config", "x.ini"]) == 1

    def test_validation_exit(self, tmp_path, capsys):
        cfg = _write(tmp_path, MINIMAL.replace("alpha = 1", "alpha = 2.5"))
        assert main(["gen-ic", "--config", cfg, "--out", str(tmp_path / "s.bin")]) == 2
        assert "alpha in (0,2]" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["gen-ic", "--config", str(tmp_path / "nope.ini"), "--out", "x"]) == 2

    def test_simulate_zero_time(self, tmp_path):
        cfg = _write(tmp_path, RUN.format(t_end=0))
        out = tmp_path / "run"
        assert main(["simulate", "--config", cfg, "--out-dir", str(out)]) == 0
        assert [p.name for p in (out / "snapshots").iterdir()] == ["snap_000000.bin"]
        _, data = read_timeseries(out / "timeseries.csv")
        assert data.shape[0] == 1

    def test_pipeline(self, tmp_path):
        cfg = _write(tmp_path, RUN.format(t_end=1.0))
        snap = tmp_path / "ic.bin"
        out = tmp_path / "run"
        assert main(["gen-ic", "--config", cfg, "--out", str(snap)]) == 0
        assert main(["simulate", "--config", cfg, "--ic", str(snap), "--out-dir", str(out)]) == 0
        status = json.loads((out / "status.json").read_text())
        assert status["status"] == "completed" and status["t"] == 1.0
        assert main(["analyze", "--run", str(out), "--report", str(tmp_path / "rep.csv")]) == 0
        rows = {r["metric"]: r for r in csv.DictReader(open(tmp_path / "rep.csv"))}
        assert rows["envelope_containment"]["status"] == "pass"
        assert rows["entropy_uniform_bound"]["status"] == "pass"
        assert main(["flux", "--run", str(out), "--q-list", "1,2"]) == 0
        budget = list(csv.DictReader(open(out / "budget.csv")))
        assert {r["Q"] for r in budget} == {"1", "2"}

    def test_deterministic_outputs(self, tmp_path):
        cfg = _write(tmp_path, RUN.format(t_end=0.2))
        for d in ("a", "b"):
            assert main(["simulate", "--config", cfg, "--out-dir", str(tmp_path / d)]) == 0
        for rel in ("timeseries.csv", "snapshots/snap_000001.bin"):
            assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()

    def test_blowup_exit_keeps_partial_output(self, tmp_path):
        g = Grid.of(64)
        rho = DensityModes(0.01, (((1,), 0.008, 0.0),)).field(g)
        snap = tmp_path / "thin.bin"
        write_snapshot(State(rho, Field.from_function(g, lambda x: -2 * np.sin(x))), snap, 1.0)
        cfg = _write(tmp_path, "alpha = 1\n[grid]\nsizes = 64\n[scheme]\nt_end = 5\nrecord_every = 1\n")
        out = tmp_path / "run"
        assert main(["simulate", "--config", cfg, "--ic", str(snap), "--out-dir", str(out)]) == 3
        status = json.loads((out / "status.json").read_text())
        assert status["status"] == "blowup" and 0 < status["t"] < 5
        _, data = read_timeseries(out / "timeseries.csv")
        assert data.shape[0] == status["records"] > 1

    def test_ineq(self, tmp_path, capsys):
        out = tmp_path / "ineq.csv"
        args = ["ineq", "--q-max", "2", "--rho-min", "0.5", "--rho-max", "2", "--m", "1",
                "--resolution", "501", "--out", str(out)]
        assert main(args) == 0
        rows = list(csv.DictReader(open(out)))
        assert rows[0]["q"] == "1" and float(rows[0]["C_q"]) == 1.0
        assert all(r["status"] == "certified" for r in rows)
        assert "certified" in capsys.readouterr().out

    def test_ineq_invalid_box(self):
        args = ["ineq", "--q-max", "1", "--rho-min", "0.5", "--rho-max", "2", "--m", "3"]
        assert main(args) == 2  # m outside [rho-, rho+] is a validation error

    def test_module_entry(self):
        proc = subprocess.run([sys.executable, "-m", "feas.cli", "--help"], capture_output=True, text=True)
        assert proc.returncode == 0 and "simulate" in proc.stdout
