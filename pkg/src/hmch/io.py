"""CSV/JSON emission and the key=value run-config format."""

from __future__ import annotations

import csv
import math
import re
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dynamics import ConfigError, DiagnosticsRecord, SimConfig
from .spectral import PeriodicField, Spectrum, grid_points


def fmt(x) -> str:
    """17 significant digits: enough for an exact double round trip."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], trailer: str | None = None) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
        if trailer:
            fh.write(trailer.rstrip("\n") + "\n")
    return path


def read_csv(path) -> tuple[list, np.ndarray]:
    """Header and float rows; lines starting with '#' are skipped."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    header, body = rows[0], rows[1:]
    try:
        data = np.array([[float(v) for v in r] for r in body], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry ({exc})") from None
    return header, data.reshape(len(body), len(header))


def write_field(path, f: PeriodicField) -> Path:
    return write_csv(path, ("x", "u"), zip(f.x, f.samples))


def read_field(path, N: int | None = None) -> PeriodicField:
    header, data = read_csv(path)
    if [h.strip() for h in header] != ["x", "u"]:
        raise ValueError(f"{path}: expected header 'x,u', got {','.join(header)!r}")
    rows = data.shape[0]
    if N is not None and rows != N:
        raise ValueError(f"{path}: expected {N} rows for N={N}, found {rows}")
    if not np.allclose(data[:, 0], grid_points(rows), rtol=0, atol=1e-12):
        raise ValueError(f"{path}: x column is not the uniform grid i/{rows}")
    return PeriodicField(data[:, 1])


def write_spectrum(path, v: Spectrum) -> Path:
    return write_csv(path, ("k", "re", "im"), zip(v.wavenumbers, v.coeffs.real, v.coeffs.imag))


def snapshot_name(t: float) -> str:
    return f"u_t{t:.6f}.csv"


def diagnostics_header(cfg: SimConfig) -> list:
    head = ["t", "mu", "E1", "sup_u", "sup_ux"]
    head += [f"H{s:g}" for s in cfg.hs_orders]
    head.append("dissipation")
    head += [f"uxx_L{p:g}" for p in cfg.lp_orders]
    return head


def diagnostics_row(rec: DiagnosticsRecord) -> list:
    row = [rec.t, rec.mu, rec.E1, rec.sup_u, rec.sup_ux]
    row += [v for _, v in rec.hs_norms]
    row.append(rec.dissipation_accum)
    row += [v for _, v in rec.lp_q]
    return row


# --- run configuration -----------------------------------------------------

REQUIRED_KEYS = ("N", "dt", "T", "initial")
KNOWN_KEYS = REQUIRED_KEYS + ("scheme", "epsilon", "dealias", "output_every",
                              "hs_norms", "lp_norms", "cfl_override")
_TERM = re.compile(r"\s*([A-Za-z_]+)\s*\(([^()]*)\)\s*")


def _to_bool(key, v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {v!r}")


def _to_num(key, v: str, kind=float):
    try:
        x = kind(v) if kind is float else int(v)
    except ValueError:
        try:
            f = float(v)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {v!r}") from None
        if kind is int and f.is_integer():
            return int(f)
        raise ConfigError(f"{key}: expected an integer, got {v!r}") from None
    if kind is float and not math.isfinite(x):
        raise ConfigError(f"{key}: value must be finite, got {v!r}")
    return x


def _num_list(key, v: str) -> tuple:
    parts = [p for p in re.split(r"[,\s]+", v.strip()) if p]
    return tuple(_to_num(key, p) for p in parts)


def _args(name, raw: str, count: int) -> list:
    parts = [p.strip() for p in raw.split(",")] if raw.strip() else []
    if len(parts) != count:
        raise ConfigError(f"initial: {name}() takes {count} argument(s), got {len(parts)}")
    return [_to_num(f"initial.{name}", p) for p in parts]


def build_initial(spec: str, N: int, base_dir: Path = Path(".")) -> PeriodicField:
    """Evaluate an initial-data expression: builtin terms joined by '+'.

    constant(c), sine(a, k, offset), cosine(a, k, offset), peakon(c),
    approx(omega, n, s), csv(path).
    """
    from .experiments import ApproxSolutionSpec, PeakonSpec, approx_solution, peakon_profile

    text = spec.strip()
    pos = 0
    total = np.zeros(N)
    x = grid_points(N)
    nterms = 0
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m:
            raise ConfigError(f"initial: cannot parse {text[pos:]!r}")
        name, raw = m.group(1).lower(), m.group(2)
        try:
            if name == "constant":
                (c,) = _args(name, raw, 1)
                total += c
            elif name in ("sine", "cosine"):
                a, k, off = _args(name, raw, 3)
                fn = np.sin if name == "sine" else np.cos
                total += off + a * fn(2.0 * np.pi * k * x)
            elif name == "peakon":
                (c,) = _args(name, raw, 1)
                total += peakon_profile(PeakonSpec(c), 0.0, N).samples
            elif name == "approx":
                w, n, s = _args(name, raw, 3)
                total += approx_solution(ApproxSolutionSpec(w, n, s), 0.0, N).samples
            elif name == "csv":
                p = Path(raw.strip().strip("'\""))
                if not p.is_absolute():
                    p = base_dir / p
                total += read_field(p, N).samples
            else:
                raise ConfigError(f"initial: unknown builtin {name!r}")
        except ConfigError:
            raise
        except (ValueError, OSError) as exc:
            raise ConfigError(f"initial: {exc}") from None
        nterms += 1
        pos = m.end()
        if pos < len(text):
            if text[pos] != "+":
                raise ConfigError(f"initial: expected '+' at {text[pos:]!r}")
            pos += 1
    if nterms == 0:
        raise ConfigError("initial: empty expression")
    return PeriodicField(total)


def read_config_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{key}: unknown key (line {lineno})")
        if key in out:
            raise ConfigError(f"{key}: duplicate key (line {lineno})")
        out[key] = value
    return out


def parse_config(path) -> tuple[SimConfig, PeriodicField]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path} ({exc.strerror})") from None
    kv = read_config_text(text)
    for key in REQUIRED_KEYS:
        if key not in kv:
            raise ConfigError(f"{key}: required key missing")
    kw = {
        "N": _to_num("N", kv["N"], int),
        "dt": _to_num("dt", kv["dt"]),
        "T": _to_num("T", kv["T"]),
    }
    if "scheme" in kv:
        kw["scheme"] = kv["scheme"].upper()
    if "epsilon" in kv:
        kw["epsilon"] = _to_num("epsilon", kv["epsilon"])
    if "dealias" in kv:
        kw["dealias"] = _to_bool("dealias", kv["dealias"])
    if "output_every" in kv:
        kw["output_every"] = _to_num("output_every", kv["output_every"], int)
    if "hs_norms" in kv:
        kw["hs_orders"] = _num_list("hs_norms", kv["hs_norms"])
    if "lp_norms" in kv:
        kw["lp_orders"] = _num_list("lp_norms", kv["lp_norms"])
    if "cfl_override" in kv:
        kw["cfl_override"] = _to_bool("cfl_override", kv["cfl_override"])
    try:
        cfg = SimConfig(**kw)
    except ConfigError:
        raise
    u0 = build_initial(kv["initial"], cfg.N, path.parent)
    try:
        cfg = cfg.with_initial(u0)
    except ConfigError as exc:
        raise ConfigError(f"dt: {exc}") from None
    return cfg, u0
