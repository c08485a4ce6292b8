"""Channel interchange files and CSV emission.

Channels travel as JSON with explicit [re, im] pairs (no complex literals),
in one of three forms:

* ``{"builtin": name, "params": {...}}``
* ``{"name": ..., "dim": d, "kraus": [op, ...]}`` with each operator a
  d x d nested list of [re, im] pairs
* ``{"name": ..., "d_a": ..., "d_b": ..., "choi": rows}`` — the form emitted
  by ``broadq choi --json``, re-ingestible losslessly

Schema problems raise :class:`ChannelFormatError` (CLI exit 2) and name the
offending operator/row/column; files that parse but violate channel
invariants raise ``ValueError`` (CLI exit 3).  CSV output is written to a
temporary file and atomically renamed, so invariant violations never leave a
partial file behind.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .channels import ChoiState, KrausChannel, builtin
from .states import DensityMatrix, HilbertSpec

CURVE_CSV_HEADER = "r,p,avg_fidelity,std_error,avg_trace_distance"


class ChannelFormatError(ValueError):
    """The document does not match the channel-file schema."""


def fmt(x: float) -> str:
    """Decimal with 12 significant digits, the package-wide output format."""
    return format(float(x), ".12g")


def _entry_to_complex(entry, where: str) -> complex:
    if (
        not isinstance(entry, (list, tuple))
        or len(entry) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in entry)
    ):
        raise ChannelFormatError(f"{where}: expected an [re, im] pair, got {entry!r}")
    return complex(entry[0], entry[1])


def _parse_matrix(rows, n_rows: int, n_cols: int, where: str) -> np.ndarray:
    if not isinstance(rows, list) or len(rows) != n_rows:
        raise ChannelFormatError(
            f"{where}: expected {n_rows} rows, got "
            f"{len(rows) if isinstance(rows, list) else type(rows).__name__}"
        )
    out = np.empty((n_rows, n_cols), dtype=complex)
    for r, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n_cols:
            raise ChannelFormatError(f"{where}, row {r}: expected {n_cols} entries")
        for c, entry in enumerate(row):
            out[r, c] = _entry_to_complex(entry, f"{where}, row {r}, col {c}")
    return out


def matrix_to_pairs(m: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(m, dtype=complex)]


def parse_channel(doc) -> tuple[object, str]:
    """Parse a channel document into a channel object plus a display name."""
    if not isinstance(doc, dict):
        raise ChannelFormatError(f"channel document must be a JSON object, got {type(doc).__name__}")
    if "builtin" in doc:
        name = doc["builtin"]
        if not isinstance(name, str):
            raise ChannelFormatError("'builtin' must be a string")
        params = doc.get("params", {})
        if not isinstance(params, dict):
            raise ChannelFormatError("'params' must be an object")
        return builtin(name, **params), name
    if "kraus" in doc:
        dim = doc.get("dim")
        if not isinstance(dim, int) or dim < 1:
            raise ChannelFormatError("'dim' must be a positive integer")
        ops_doc = doc["kraus"]
        if not isinstance(ops_doc, list) or not ops_doc:
            raise ChannelFormatError("'kraus' must be a non-empty list of operators")
        ops = tuple(
            _parse_matrix(op, dim, dim, f"kraus operator {k}") for k, op in enumerate(ops_doc)
        )
        return KrausChannel(dim, dim, ops), str(doc.get("name", "channel"))
    if "choi" in doc:
        d_a, d_b = doc.get("d_a"), doc.get("d_b")
        if not (isinstance(d_a, int) and isinstance(d_b, int) and d_a >= 1 and d_b >= 1):
            raise ChannelFormatError("'d_a' and 'd_b' must be positive integers")
        m = _parse_matrix(doc["choi"], d_a * d_b, d_a * d_b, "choi matrix")
        dm = DensityMatrix(HilbertSpec((d_a, d_b)), m)
        return ChoiState(dm, d_a, d_b), str(doc.get("name", "channel"))
    raise ChannelFormatError("channel document needs one of 'builtin', 'kraus', or 'choi'")


def load_channel_file(path) -> tuple[object, str]:
    """Load a channel from a JSON file; parse errors carry position info."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ChannelFormatError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChannelFormatError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return parse_channel(doc)


def choi_json_doc(name: str, choi: ChoiState, *, eigenvalues, ppt, min_pt_eigenvalue, eb, eb_exact) -> dict:
    return {
        "name": name,
        "d_a": choi.d_a,
        "d_b": choi.d_b,
        "choi": matrix_to_pairs(choi.matrix),
        "eigenvalues": [float(v) for v in eigenvalues],
        "ppt": bool(ppt),
        "min_pt_eigenvalue": float(min_pt_eigenvalue),
        "entanglement_breaking": bool(eb),
        "eb_test_exact": bool(eb_exact),
    }


def write_text_atomic(path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see a torn file."""
    target = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=str(target.parent or "."), prefix=target.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_name, target)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def curve_csv_text(rows) -> str:
    """CSV body for (r, p, avg_fidelity, std_error, avg_trace_distance) rows."""
    lines = [CURVE_CSV_HEADER]
    for r, p, fa, err, da in rows:
        for label, value in (("r", r), ("p", p)):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{label} must lie in [0, 1], got {value}")
        for label, value in (("avg_fidelity", fa), ("avg_trace_distance", da)):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{label} must lie in [0, 1], got {value}")
        lines.append(",".join(fmt(v) for v in (r, p, fa, err, da)))
    return "\n".join(lines) + "\n"
