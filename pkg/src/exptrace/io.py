"""CSV observation tables, JSON matrices/configs and run reports."""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from .errors import ConfigError, DomainError
from .model import Dataset, TraceModel, as_dataset, build_model

try:
    from importlib.metadata import version as _pkg_version
    VERSION = _pkg_version("exptrace")
except Exception:  # pragma: no cover - running from a source tree
    VERSION = "0.1.0"


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def parse_csv(text: str, model: TraceModel) -> Dataset:
    """Parse CSV text (optional header) into a validated dataset.

    Row and column numbers in error messages are 1-based and count data rows.
    """
    rows = [r for r in csv.reader(_io.StringIO(text)) if r and any(c.strip() for c in r)]
    if rows and not all(_is_number(c.strip()) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise DomainError("no observations in CSV input")
    kinds = model.raw_kinds
    sizes = model.domain.sizes if model.family != "multinomial_ising" else \
        (model.options["m"],) * model.options["l"]
    out = np.zeros((len(rows), len(kinds)))
    for r, row in enumerate(rows, start=1):
        if len(row) != len(kinds):
            raise DomainError(f"row {r}: expected {len(kinds)} columns, found {len(row)}", row=r)
        for c, (tok, kind) in enumerate(zip(row, kinds), start=1):
            tok = tok.strip()
            try:
                v = float(tok)
            except ValueError:
                raise DomainError(f"row {r}, column {c}: cannot parse {tok!r} as a number",
                                  row=r, column=c) from None
            if not math.isfinite(v):
                raise DomainError(f"row {r}, column {c}: non-finite value", row=r, column=c)
            if kind in ("binary", "finite", "count"):
                if v != int(v) or v < 0:
                    raise DomainError(f"row {r}, column {c}: non-integer value {tok!r} in {kind} "
                                      f"column {c}", row=r, column=c)
                if kind == "binary" and v > 1:
                    raise DomainError(f"row {r}, column {c}: {tok!r} is not binary", row=r, column=c)
                if kind == "finite" and v >= sizes[c - 1]:
                    raise DomainError(f"row {r}, column {c}: level {tok!r} out of range",
                                      row=r, column=c)
            out[r - 1, c - 1] = v
    try:
        return as_dataset(model, model.encode(out))
    except DomainError as exc:
        if exc.row is not None:
            raise DomainError(f"domain violation in data row {exc.row + 1}", row=exc.row + 1,
                              column=exc.column) from None
        raise


def load_csv(path, model: TraceModel) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_csv(fh.read(), model)


def format_csv(model: TraceModel, data) -> str:
    rows = model.decode(data.rows if isinstance(data, Dataset) else data)
    kinds = model.raw_kinds
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in rows:
        w.writerow([str(int(v)) if k in ("binary", "finite", "count") else repr(float(v))
                    for v, k in zip(row, kinds)])
    return buf.getvalue()


def write_csv(path, model: TraceModel, data) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_csv(model, data))


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def matrix_to_json(M) -> dict:
    M = np.asarray(M, dtype=float)
    return {"q": int(M.shape[0]), "entries": M.tolist()}


def matrix_from_json(d) -> np.ndarray:
    if isinstance(d, list):
        d = {"q": len(d), "entries": d}
    try:
        M = np.asarray(d["entries"], dtype=float)
        q = int(d["q"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed matrix JSON: {exc}") from None
    if M.shape != (q, q):
        raise ConfigError(f"matrix entries have shape {M.shape}, expected ({q}, {q})")
    return M


def read_json_arg(value: str):
    """A JSON document given inline or as a path to a file."""
    if os.path.exists(value):
        with open(value, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = value
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"neither a readable file nor valid JSON: {value!r} ({exc.msg})") from None


def model_from_config(cfg: dict) -> TraceModel:
    """Build a model from a user-facing config; ``active_set`` pairs are 1-based."""
    if not isinstance(cfg, dict):
        raise ConfigError("model config must be a JSON object")
    cfg = dict(cfg)
    cfg.pop("strategy", None)
    if "active_set" in cfg:
        try:
            cfg["active_set"] = [[int(i) - 1, int(j) - 1] for i, j in cfg["active_set"]]
        except (TypeError, ValueError):
            raise ConfigError("active_set must be a list of [i, j] pairs") from None
    return build_model(cfg)


def model_to_config(model: TraceModel) -> dict:
    cfg = model.to_config()
    if "active_set" in cfg:
        cfg["active_set"] = [[i + 1, j + 1] for i, j in cfg["active_set"]]
    return cfg


# ---------------------------------------------------------------------------
# Run configuration and reports
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    model: dict
    strategy: Optional[dict] = None
    fit: dict = field(default_factory=dict)
    alpha: float = 0.05
    restrictions: list = field(default_factory=list)
    data: Optional[str] = None
    out: Optional[str] = None
    seed: int = 0

    def semantic(self) -> dict:
        """Fields that change results (paths excluded)."""
        d = asdict(self)
        d.pop("out")
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.semantic(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def file_sha256(path) -> Optional[str]:
    if path is None:
        return None
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def provenance(run: RunConfig) -> dict:
    return {
        "config_hash": run.config_hash(),
        "version": VERSION,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "seed": run.seed,
        "data_sha256": file_sha256(run.data) if run.data and os.path.exists(run.data) else None,
    }


@dataclass
class Report:
    fit: dict
    tests: list = field(default_factory=list)
    subgraph: Optional[dict] = None
    provenance: dict = field(default_factory=dict)

    @classmethod
    def from_fit(cls, fit, run: RunConfig, tests=(), subgraph=None) -> "Report":
        summary = {
            "m_hat": matrix_to_json(fit.m_hat),
            "objective": fit.objective,
            "log_norm": fit.log_norm_hat,
            "iterations": fit.iterations,
            "final_grad_norm": fit.final_grad_norm,
            "converged": fit.converged,
            "stationarity_gap": fit.stationarity_gap,
            "n": fit.n,
        }
        return cls(summary, [t.to_dict() for t in tests],
                   subgraph.to_dict() if subgraph is not None else None, provenance(run))

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Report":
        d = json.loads(text)
        return cls(d["fit"], d.get("tests", []), d.get("subgraph"), d.get("provenance", {}))
