"""Text formats: state files, JSON-lines records, summaries and run manifests."""

from __future__ import annotations

import configparser
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParameterError
from .experiments import ExperimentConfig, HistogramSummary, SampleRecord
from .fock import FockVector
from .measurement import HeterodyneModel

STATE_MAGIC = "# catcorrect state v1"


def _fmt(x: float) -> str:
    # repr is shortest round-trip and locale independent
    return repr(float(x))


def write_state(path, state: FockVector, kind: str = "custom", params: dict | None = None) -> None:
    lines = [STATE_MAGIC, f"# type {kind}"]
    for k, v in (params or {}).items():
        lines.append(f"# param {k} {v}")
    lines.append(f"# cutoff {state.cutoff}")
    for n, a in enumerate(state.amplitudes):
        lines.append(f"{n} {_fmt(a.real)} {_fmt(a.imag)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_state(path) -> tuple:
    """Returns (FockVector, metadata dict)."""
    meta: dict = {"params": {}}
    rows = []
    for lineno, line in enumerate(Path(path).read_text(encoding="ascii").splitlines(), 1):
        if not line.strip():
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) >= 2 and parts[0] == "type":
                meta["type"] = parts[1]
            elif len(parts) >= 3 and parts[0] == "param":
                meta["params"][parts[1]] = " ".join(parts[2:])
            elif len(parts) == 2 and parts[0] == "cutoff":
                meta["cutoff"] = int(parts[1])
            continue
        fields = line.split()
        if len(fields) != 3:
            raise ConfigError(f"{path}:{lineno}: expected 'n re im'")
        n, re, im = int(fields[0]), float(fields[1]), float(fields[2])
        if n != len(rows):
            raise ConfigError(f"{path}:{lineno}: rows must be consecutive from n=0")
        rows.append(complex(re, im))
    if "cutoff" in meta and meta["cutoff"] != len(rows):
        raise ConfigError(f"{path}: header cutoff {meta['cutoff']} but {len(rows)} rows")
    return FockVector(np.array(rows, dtype=complex)), meta


def record_line(record: SampleRecord) -> str:
    return json.dumps(record.to_dict(), sort_keys=True)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["model"] = asdict(cfg.model)
    d["alphas"] = list(cfg.alphas)
    d["thresholds"] = list(cfg.thresholds)
    d["logical"] = [_complex_str(c) for c in cfg.logical]
    d["ys_sigma"] = None if cfg.ys_sigma is None else _complex_str(cfg.ys_sigma)
    d["anomalies"] = [list(a) for a in cfg.anomalies]
    return d


def _complex_str(c) -> str:
    c = complex(c)
    return f"{_fmt(c.real)}{'+' if c.imag >= 0 else '-'}{_fmt(abs(c.imag))}j"


def config_from_dict(d: dict) -> ExperimentConfig:
    """Inverse of config_to_dict (used to replay a manifest)."""
    try:
        kw = dict(d)
        kw["model"] = HeterodyneModel(**kw["model"])
        kw["alphas"] = tuple(kw["alphas"])
        kw["thresholds"] = tuple(kw["thresholds"])
        kw["logical"] = tuple(complex(c) for c in kw["logical"])
        kw["ys_sigma"] = None if kw["ys_sigma"] is None else complex(kw["ys_sigma"])
        kw["anomalies"] = tuple((float(t), int(m)) for t, m in kw["anomalies"])
        return ExperimentConfig(**kw)
    except (KeyError, TypeError, ValueError, ParameterError) as exc:
        raise ConfigError(f"bad config echo: {exc}") from None


def summary_document(cfg: ExperimentConfig, summary: HistogramSummary, extra: dict | None = None) -> dict:
    doc = {"config": config_to_dict(cfg), "seed": cfg.seed}
    doc.update(summary.to_dict())
    if extra:
        doc.update(extra)
    return doc


def write_json(path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# INI experiment configs


def _section(cp, name):
    return cp[name] if cp.has_section(name) else {}


def _get(section, key, conv, default, where):
    if key not in section:
        return default
    raw = section[key]
    try:
        return conv(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: bad value for {key!r}: {raw!r} ({exc})") from None


def _floats(s):
    return tuple(float(x) for x in s.replace(",", " ").split())


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _sigma(s):
    return None if s.strip().lower() in ("auto", "none") else complex(s.replace(" ", ""))


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse an INI experiment description.

    Sections: [experiment] (circuit, K, M, N, samples, seed, thresholds,
    chunk_size), [model] (mode, beta, grid_radius), [rail1]/[rail2]/[rail3]
    (alpha, theta, loss, and kind/c0/c1/sigma/objective where relevant) and
    [options] (correct_ys_phases, track_frames, ys_rail).
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if not cp.has_section("experiment"):
        raise ConfigError(f"{source}: missing [experiment] section")
    ex = cp["experiment"]
    where = f"{source} [experiment]"
    circuit = _get(ex, "circuit", str, None, where)
    if circuit is None:
        raise ConfigError(f"{where}: 'circuit' is required")
    kw = dict(
        circuit=circuit.strip(),
        K=_get(ex, "K", int, 2, where),
        M=_get(ex, "M", int, 0, where),
        N=_get(ex, "N", int, 2, where),
        samples=_get(ex, "samples", int, 1000, where),
        seed=_get(ex, "seed", int, 0, where),
        thresholds=_get(ex, "thresholds", _floats, (0.9, 0.95, 0.99), where),
        chunk_size=_get(ex, "chunk_size", int, 250, where),
    )
    mo = _section(cp, "model")
    where = f"{source} [model]"
    mode = _get(mo, "mode", str, "ideal", where)
    try:
        kw["model"] = HeterodyneModel(
            mode.strip(), _get(mo, "beta", float, None, where), _get(mo, "grid_radius", float, None, where)
        )
    except ParameterError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    n_rails = 2 if kw["circuit"] == "modmeas" else 3
    alphas, anomalies = [], []
    for i in range(1, n_rails + 1):
        name = f"rail{i}"
        if not cp.has_section(name):
            raise ConfigError(f"{source}: missing [{name}] section")
        r = cp[name]
        where = f"{source} [{name}]"
        a = _get(r, "alpha", float, None, where)
        if a is None:
            raise ConfigError(f"{where}: 'alpha' is required")
        alphas.append(a)
        if i > 1:
            anomalies.append((_get(r, "theta", float, 0.0, where), _get(r, "loss", int, 0, where)))
        if i == 1 and kw["circuit"] == "telecorrect":
            kw["logical"] = (_get(r, "c0", complex, 1.0, where), _get(r, "c1", complex, 0.0, where))
            kw["ys_sigma"] = _get(r, "sigma", _sigma, 0.0, where)
            kw["ys_objective"] = _get(r, "objective", str, "plus_vs_minus", where).strip()
        if i == 2 and kw["circuit"] == "modmeas":
            kw["probe"] = _get(r, "kind", str, "cat", where).strip()
    while len(anomalies) < 2:
        anomalies.append((0.0, 0))
    kw["alphas"] = tuple(alphas)
    kw["anomalies"] = tuple(anomalies)
    op = _section(cp, "options")
    where = f"{source} [options]"
    kw["correct_ys_phases"] = _get(op, "correct_ys_phases", _bool, False, where)
    kw["track_frames"] = _get(op, "track_frames", _bool, True, where)
    kw["ys_rail"] = _get(op, "ys_rail", str, "none", where).strip()
    try:
        return ExperimentConfig(**kw)
    except ParameterError as exc:
        raise ConfigError(f"{source}: {exc}") from None
