"""Run configuration, binary snapshots and CSV writers.

Config format: ``key = value`` lines, ``#`` comments, top-level keys ``alpha`` and
``seed`` followed by sections ``[grid] [scheme] [ic] [diagnostics] [output]``.
"""
from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import DensityModes, NullEntropy, Snapshot, State, TrigPolynomial
from .spectral import Field, Grid
from .timestepper import SchemeSpec

MAGIC = b"FEAS"
VERSION = 1
SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class SnapshotError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    alpha: float
    grid: Grid
    ic: object
    scheme: SchemeSpec
    seed: int = 0
    p_list: tuple = (2.0, 4.0)
    q_list: tuple = (1, 2)
    Q_list: tuple = (1, 2, 3)
    out_dir: str = "run"
    snapshot_every: int = 1


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _ints(s: str) -> tuple:
    return tuple(int(x) for x in s.replace(",", " ").split())


def _floats(s: str) -> tuple:
    return tuple(float(x) for x in s.replace(",", " ").split())


def _modes(s: str) -> tuple:
    """``k1[,k2]:a:b; ...`` -> ((k, a, b), ...)."""
    out = []
    for chunk in s.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 3:
            raise ValueError(f"mode {chunk!r} must look like k1[,k2]:a:b")
        out.append((_ints(parts[0]), float(parts[1]), float(parts[2])))
    return tuple(out)


_SCHEMA = {
    "": {"alpha": float, "seed": int},
    "grid": {"sizes": _ints},
    "scheme": {"method": str, "cfl_safety": float, "dt_max": float, "t_end": float,
               "record_every": int},
    "ic": {"kind": str, "seed": int, "n_modes": int, "rho_floor": float, "amplitude": float,
           "u_amplitude": float, "ubar": float, "x1_modes_only": _bool, "rho_kind": str,
           "rho_mean": float, "rho_modes": _modes, "entropy_amplitude": float, "path": str},
    "diagnostics": {"p_list": _floats, "q_list": _ints, "Q_list": _ints},
    "output": {"directory": str, "snapshot_every": int},
}


def _tokenize(text: str) -> dict:
    """{section: {key: (value, line)}} with duplicate detection."""
    data: dict = {"": {}}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno)
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno)
            if section in data:
                raise ConfigError(f"duplicate section [{section}]", lineno)
            data[section] = {}
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {raw.strip()!r}", lineno)
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in _SCHEMA[section]:
            where = f"[{section}]" if section else "top level"
            raise ConfigError(f"unknown key {key!r} in {where}", lineno)
        if key in data[section]:
            first = data[section][key][1]
            raise ConfigError(f"duplicate key {key!r} (first on line {first}, again on line {lineno})",
                              lineno)
        try:
            data[section][key] = (_SCHEMA[section][key](val), lineno)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
    return data


def parse_config(text: str) -> SimConfig:
    data = _tokenize(text)

    def get(section, key, default=None):
        entry = data.get(section, {}).get(key)
        return (entry[0], entry[1]) if entry else (default, None)

    def check(cond, msg, line):
        if not cond:
            raise ConfigError(msg, line)

    alpha, ln = get("", "alpha")
    check(alpha is not None, "missing required key 'alpha'", None)
    check(0 < alpha <= 2, "alpha in (0,2]", ln)
    seed, _ = get("", "seed", 0)

    sizes, ln = get("grid", "sizes")
    check(sizes is not None, "missing [grid] sizes", None)
    try:
        grid = Grid(tuple(sizes))
    except ValueError as exc:
        raise ConfigError(str(exc), ln) from None

    kw = {}
    for key in _SCHEMA["scheme"]:
        val, _ = get("scheme", key)
        if val is not None:
            kw[key] = val
    try:
        scheme = SchemeSpec(**kw)
    except ValueError as exc:
        lines = [v[1] for v in data.get("scheme", {}).values()]
        raise ConfigError(str(exc), min(lines) if lines else None) from None

    ic = _parse_ic(data.get("ic", {}), seed)

    p_list, ln = get("diagnostics", "p_list", (2.0, 4.0))
    check(all(p >= 1 for p in p_list), "p_list entries must be >= 1", ln)
    q_list, ln = get("diagnostics", "q_list", (1, 2))
    check(all(q >= 1 for q in q_list), "q_list entries must be >= 1", ln)
    Q_list, ln = get("diagnostics", "Q_list", (1, 2, 3))
    check(all(Q >= -1 for Q in Q_list), "Q_list entries must be >= -1", ln)
    out_dir, _ = get("output", "directory", "run")
    every, ln = get("output", "snapshot_every", 1)
    check(every >= 1, "snapshot_every must be >= 1", ln)
    return SimConfig(alpha, grid, ic, scheme, seed, tuple(p_list), tuple(q_list), tuple(Q_list),
                     out_dir, every)


def _parse_ic(sec: dict, top_seed: int):
    def val(key, default):
        return sec[key][0] if key in sec else default

    kind_entry = sec.get("kind")
    kind = kind_entry[0] if kind_entry else "trig_polynomial"
    line = kind_entry[1] if kind_entry else None
    seed = val("seed", top_seed)

    def trig():
        floor = val("rho_floor", 0.5)
        if floor <= 0:
            raise ConfigError("rho_floor must be positive", sec.get("rho_floor", (0, None))[1])
        return TrigPolynomial(seed=seed, n_modes=val("n_modes", 4), rho_floor=floor,
                              amplitude=val("amplitude", 0.3), u_amplitude=val("u_amplitude", 0.3),
                              ubar=val("ubar", 0.0), x1_modes_only=val("x1_modes_only", False))

    def modes():
        return DensityModes(mean=val("rho_mean", 1.0), terms=val("rho_modes", ()))

    if kind == "trig_polynomial":
        return trig()
    if kind == "density_modes":
        return modes()
    if kind == "null_entropy":
        rk = val("rho_kind", "modes")
        if rk not in ("modes", "trig"):
            raise ConfigError("rho_kind must be 'modes' or 'trig'", sec.get("rho_kind", (0, None))[1])
        rho = modes() if rk == "modes" else TrigPolynomial(
            seed=seed, n_modes=val("n_modes", 4), rho_floor=val("rho_floor", 0.5),
            amplitude=val("amplitude", 0.3), x1_modes_only=True)
        return NullEntropy(rho=rho, ubar=val("ubar", 0.0), entropy_amplitude=val("entropy_amplitude", 0.0))
    if kind == "snapshot":
        if "path" not in sec:
            raise ConfigError("snapshot initial data needs 'path'", line)
        return Snapshot(sec["path"][0])
    raise ConfigError(f"unknown ic kind {kind!r}", line)


def load_config(path) -> SimConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------

def write_snapshot(s: State, path, alpha: float) -> None:
    g = s.grid
    head = MAGIC + struct.pack("<BB", VERSION, g.ndims)
    head += struct.pack(f"<{g.ndims}Q", *g.sizes) + struct.pack("<dd", s.time, float(alpha))
    body = np.ascontiguousarray(s.rho.values, dtype="<f8").tobytes()
    body += np.ascontiguousarray(s.u.values, dtype="<f8").tobytes()
    Path(path).write_bytes(head + body)


def read_snapshot(path) -> tuple[State, float]:
    raw = Path(path).read_bytes()
    if len(raw) < 6 or raw[:4] != MAGIC:
        raise SnapshotError(f"{path}: not a snapshot file (bad magic)")
    version, ndims = struct.unpack_from("<BB", raw, 4)
    if version != VERSION:
        raise SnapshotError(f"{path}: unsupported snapshot version {version}")
    if ndims not in (1, 2):
        raise SnapshotError(f"{path}: bad ndims {ndims}")
    off = 6
    need_head = off + 8 * ndims + 16
    if len(raw) < need_head:
        raise SnapshotError(f"{path}: truncated header ({len(raw)} < {need_head} bytes)")
    sizes = struct.unpack_from(f"<{ndims}Q", raw, off)
    off += 8 * ndims
    t, alpha = struct.unpack_from("<dd", raw, off)
    off += 16
    npts = math.prod(sizes)
    expected = off + 2 * npts * 8
    if len(raw) != expected:
        raise SnapshotError(f"{path}: truncated or oversized payload: expected {expected} bytes, got {len(raw)}")
    try:
        grid = Grid(tuple(int(n) for n in sizes))
    except ValueError as exc:
        raise SnapshotError(f"{path}: bad grid: {exc}") from None
    data = np.frombuffer(raw, dtype="<f8", offset=off).reshape(2, *grid.shape)
    return State(Field(grid, data[0]), Field(grid, data[1]), t), alpha


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

BASE_COLUMNS = ["t", "rho_min", "rho_max", "amplitude", "q_inf", "e_inf", "grad_u_inf",
                "grad_rho_inf", "energy_rho", "energy_kin", "diss_rho", "diss_u",
                "env_lower", "env_upper"]


def timeseries_header(p_list, q_list) -> list[str]:
    return (BASE_COLUMNS + [f"lp_dev_p{p:g}" for p in p_list]
            + [f"gronwall_q{int(q)}" for q in q_list])


def _fmt(x) -> str:
    return "%.17g" % x


def write_timeseries(records, path, p_list=(2.0, 4.0), q_list=(1, 2)) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(timeseries_header(p_list, q_list)) + "\n")
        for r in records:
            fh.write(",".join(_fmt(v) for v in r.row(p_list, q_list)) + "\n")


def read_timeseries(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        rows = [[float(v) for v in line.rstrip("\n").split(",")] for line in fh if line.strip()]
    return header, np.array(rows, dtype=float).reshape(-1, len(header))


def write_budget(series_list, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "Q", "E_Q", "flux_int", "eps_Q", "residual", "flags"])
        for b in series_list:
            for i, t in enumerate(b.t):
                w.writerow([_fmt(t), b.Q, _fmt(b.E_Q[i]), _fmt(b.flux_int[i]), _fmt(b.eps_Q[i]),
                            _fmt(b.residual[i]), ""])
            for t, msg in b.flags:
                w.writerow([_fmt(t), b.Q, "", "", "", "", "filtered_vacuum"])


def write_inequality_report(rows, path_or_file) -> None:
    """rows: iterable of FqCertificate."""
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["q", "box", "resolution", "min", "argmin", "C_q", "status"])
        for c in rows:
            box = f"[{_fmt(c.box[0])};{_fmt(c.box[1])}]"
            arg = f"({_fmt(c.argmin[0])};{_fmt(c.argmin[1])})"
            w.writerow([c.q, box, c.resolution, _fmt(c.min_value), arg, _fmt(c.C_q), c.status])
    finally:
        if own:
            fh.close()


def write_key_values(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "value", "status"])
        for name, value, status in rows:
            w.writerow([name, _fmt(value) if isinstance(value, (float, int, np.floating)) else value, status])
