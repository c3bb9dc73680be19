"""File formats: roll-call CSV, metadata sidecars, fit documents, configs.

Matrices travel as delimited text (header row of bill ids, first column of
legislator ids, cells 1/0/NA with the empty string meaning NA).  Structured
documents are JSON with a ``schema_version`` field; readers reject unknown
major versions.  Floats survive the round trip bit-exactly: they are written
with Python's shortest-repr serialization, which is lossless for doubles.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .model import (
    BillMeta,
    FitResult,
    Hyperparams,
    LegislatorMeta,
    ModelState,
    Party,
    Penalty,
    Vote,
    VoteMatrix,
)
from .preprocess import PreprocessConfig, PreprocessReport
from .simulate import SimulationSpec, synthetic_truth

__all__ = [
    "DataError",
    "SCHEMA_VERSION",
    "read_rollcall_csv",
    "write_rollcall_csv",
    "read_legislator_meta",
    "write_fit_json",
    "read_fit_json",
    "write_report_json",
    "read_simulation_config",
    "read_preprocess_config",
    "write_manifest",
]

SCHEMA_VERSION = "1"

_CELL_TO_VOTE = {"1": Vote.YEA, "0": Vote.NAY, "NA": Vote.MISSING, "": Vote.MISSING}
_VOTE_TO_CELL = {Vote.YEA: "1", Vote.NAY: "0", Vote.MISSING: "NA"}

_PARTY_TOKENS = {
    "d": Party.DEM, "dem": Party.DEM, "democrat": Party.DEM,
    "r": Party.REP, "rep": Party.REP, "republican": Party.REP,
    "o": Party.OTHER, "other": Party.OTHER, "i": Party.OTHER,
    "independent": Party.OTHER,
}


class DataError(RuntimeError):
    """Malformed or missing input data."""


def _check_version(doc: dict, path: Path) -> None:
    version = str(doc.get("schema_version", ""))
    if version.split(".")[0] != SCHEMA_VERSION:
        raise DataError(f"{path}: unsupported schema version {version!r}")


def read_rollcall_csv(path: str | Path, meta_path: str | Path | None = None) -> VoteMatrix:
    """Parse a roll-call CSV, optionally attaching a legislator metadata sidecar."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        bill_ids = header[1:]
        if not bill_ids:
            raise DataError(f"{path}: header contains no bill ids")
        if len(set(bill_ids)) != len(bill_ids):
            raise DataError(f"{path}: duplicate bill id in header")
        width = len(header)
        leg_ids: list[str] = []
        rows: list[list[int]] = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != width:
                raise DataError(
                    f"{path}:{line_no}: ragged row ({len(row)} fields, expected {width})"
                )
            leg_id = row[0]
            if not leg_id:
                raise DataError(f"{path}:{line_no}: empty legislator id")
            if leg_id in leg_ids:
                raise DataError(f"{path}:{line_no}: duplicate legislator id {leg_id!r}")
            leg_ids.append(leg_id)
            coded = []
            for col, cell in enumerate(row[1:], start=2):
                token = cell.strip()
                if token not in _CELL_TO_VOTE:
                    raise DataError(
                        f"{path}:{line_no}: unknown cell token {cell!r} in column {col}"
                    )
                coded.append(int(_CELL_TO_VOTE[token]))
            rows.append(coded)
    if not rows:
        raise DataError(f"{path}: no data rows")

    meta_by_id = read_legislator_meta(meta_path) if meta_path else {}
    legislators = [
        meta_by_id.get(leg_id, LegislatorMeta(id=leg_id)) for leg_id in leg_ids
    ]
    bills = [BillMeta(id=b) for b in bill_ids]
    try:
        return VoteMatrix(np.array(rows, dtype=np.int8), legislators, bills)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_rollcall_csv(data: VoteMatrix, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["legislator"] + [b.id for b in data.bills])
        for i, meta in enumerate(data.legislators):
            writer.writerow(
                [meta.id] + [_VOTE_TO_CELL[Vote(int(v))] for v in data.votes[i]]
            )


def read_legislator_meta(path: str | Path) -> dict[str, LegislatorMeta]:
    """Sidecar CSV mapping legislator id to party (and optional name/district)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"metadata file not found: {path}")
    out: dict[str, LegislatorMeta] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "id" not in reader.fieldnames:
            raise DataError(f"{path}: metadata file needs an 'id' column")
        for line_no, row in enumerate(reader, start=2):
            leg_id = (row.get("id") or "").strip()
            if not leg_id:
                raise DataError(f"{path}:{line_no}: empty legislator id")
            if leg_id in out:
                raise DataError(f"{path}:{line_no}: duplicate legislator id {leg_id!r}")
            party = None
            token = (row.get("party") or "").strip().lower()
            if token:
                if token not in _PARTY_TOKENS:
                    raise DataError(f"{path}:{line_no}: unknown party {row['party']!r}")
                party = _PARTY_TOKENS[token]
            out[leg_id] = LegislatorMeta(
                id=leg_id,
                name=(row.get("name") or "").strip(),
                party=party,
                district=(row.get("district") or "").strip() or None,
            )
    return out


def _state_to_doc(state: ModelState) -> dict:
    return {
        "theta": state.theta.tolist(),
        "alpha": state.alpha.tolist(),
        "beta": state.beta.tolist(),
        "gamma": [[i, j, g] for (i, j), g in sorted(state.gamma.items())],
    }


def _state_from_doc(doc: dict) -> ModelState:
    gamma = {(int(i), int(j)): float(g) for i, j, g in doc.get("gamma", [])}
    return ModelState(
        np.array(doc["theta"], dtype=float),
        np.array(doc["alpha"], dtype=float),
        np.array(doc["beta"], dtype=float),
        gamma,
    )


def write_fit_json(
    fit: FitResult,
    path: str | Path,
    legislators: list[LegislatorMeta] | None = None,
    bills: list[BillMeta] | None = None,
    hyperparams: Hyperparams | None = None,
    protest_report: list | None = None,
) -> None:
    """Write the fit document: dims, parameters, shift triplets, diagnostics."""
    path = Path(path)
    i_count, j_count = fit.state.shape
    doc = {
        "schema_version": SCHEMA_VERSION,
        "dims": {"I": i_count, "J": j_count, "K": fit.state.dimension},
        **_state_to_doc(fit.state),
        "objective_trace": list(fit.objective_trace),
        "iterations": fit.iterations,
        "converged": fit.converged,
    }
    if legislators is not None:
        doc["legislators"] = [
            {"id": m.id, "name": m.name,
             "party": m.party.value if m.party else None,
             "district": m.district}
            for m in legislators
        ]
    if bills is not None:
        doc["bills"] = [{"id": b.id, "label": b.label} for b in bills]
    if hyperparams is not None:
        doc["hyperparams"] = {
            "lambda": hyperparams.lam,
            "penalty": hyperparams.penalty.value,
            "dimension": hyperparams.dimension,
            "epsilon": hyperparams.epsilon,
            "max_iter": hyperparams.max_iter,
        }
    if protest_report is not None:
        doc["protest_report"] = [
            {**asdict(r), "observed": int(r.observed)} for r in protest_report
        ]
    try:
        with path.open("w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


def read_fit_json(path: str | Path) -> tuple[FitResult, dict]:
    """Read a fit document back; returns the fit and the raw document."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"fit file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc
    _check_version(doc, path)
    state = _state_from_doc(doc)
    fit = FitResult(
        state=state,
        objective_trace=[float(x) for x in doc.get("objective_trace", [])],
        iterations=int(doc.get("iterations", 0)),
        converged=bool(doc.get("converged", False)),
        protest_cells=sorted((i, j, g) for (i, j), g in state.gamma.items()),
    )
    return fit, doc


def legislators_from_doc(doc: dict) -> list[LegislatorMeta]:
    return [
        LegislatorMeta(
            id=m["id"],
            name=m.get("name", ""),
            party=Party(m["party"]) if m.get("party") else None,
            district=m.get("district"),
        )
        for m in doc.get("legislators", [])
    ]


def bills_from_doc(doc: dict) -> list[BillMeta]:
    return [BillMeta(id=b["id"], label=b.get("label")) for b in doc.get("bills", [])]


def write_report_json(report: PreprocessReport, path: str | Path) -> None:
    doc = {"schema_version": SCHEMA_VERSION, **asdict(report)}
    doc["input_dims"] = list(report.input_dims)
    doc["output_dims"] = list(report.output_dims)
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_simulation_config(path: str | Path) -> SimulationSpec:
    """Build a SimulationSpec from its JSON form.

    ``truth`` is either {"synthetic": {...}} with generator settings or
    {"file": <fit document>} whose parameters become the ground truth.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc
    _check_version(doc, path)
    truth_doc = doc.get("truth")
    if not isinstance(truth_doc, dict):
        raise DataError(f"{path}: missing 'truth' section")
    if "file" in truth_doc:
        fit, _ = read_fit_json(Path(path).parent / truth_doc["file"])
        truth = ModelState(fit.state.theta, fit.state.alpha, fit.state.beta, {})
    elif "synthetic" in truth_doc:
        syn = truth_doc["synthetic"]
        try:
            truth = synthetic_truth(
                i_count=int(syn["n_legislators"]),
                j_count=int(syn["n_bills"]),
                k=int(syn.get("dimension", 1)),
                seed=int(syn.get("seed", 0)),
                party_offset=float(syn.get("party_offset", 0.8)),
                theta_scale=float(syn.get("theta_scale", 0.3)),
                partyline_share=float(syn.get("partyline_share", 0.25)),
                inparty_share=float(syn.get("inparty_share", 0.75)),
                partyline_beta=tuple(syn.get("partyline_beta", (7.0, 9.0))),
                inparty_beta=tuple(syn.get("inparty_beta", (0.5, 0.65))),
                filler_beta=tuple(syn.get("filler_beta", (0.3, 0.45))),
            )
        except KeyError as exc:
            raise DataError(f"{path}: synthetic truth needs {exc}") from exc
    else:
        raise DataError(f"{path}: truth must specify 'file' or 'synthetic'")
    try:
        return SimulationSpec(
            truth=truth,
            n_protesters=int(doc.get("n_protesters", 0)),
            protest_votes_per_protester=int(doc.get("protest_votes_per_protester", 0)),
            protester_party=Party(doc.get("protester_party", "Dem")),
            seed=int(doc.get("seed", 0)),
            missing_rate=float(doc.get("missing_rate", 0.0)),
        )
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_simulation_config(spec_doc: dict, path: str | Path) -> None:
    doc = {"schema_version": SCHEMA_VERSION, **spec_doc}
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_preprocess_config(path: str | Path) -> PreprocessConfig:
    path = Path(path)
    if not path.exists():
        raise DataError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc
    _check_version(doc, path)
    try:
        return PreprocessConfig(
            lopsided_threshold=float(doc.get("lopsided_threshold", 0.01)),
            min_participation=float(doc.get("min_participation", 0.10)),
            drop_unanimous=bool(doc.get("drop_unanimous", True)),
            exclude_legislators=list(doc.get("exclude_legislators", [])),
        )
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_manifest(path: str | Path, command: str, argv: list[str],
                   config: dict, seed: int | None, threads: int | None) -> None:
    """Record everything needed to reproduce a run byte-identically."""
    from . import __version__

    doc = {
        "schema_version": SCHEMA_VERSION,
        "tool": "robustirt",
        "version": __version__,
        "command": command,
        "argv": argv,
        "config": config,
        "seed": seed,
        "threads": threads,
    }
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
