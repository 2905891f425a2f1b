"""Command-line surface: eigen, run, batch, energy-from-counts, similarity.

Exit codes: 0 success, 1 runtime failure, 2 usage or config error. Batch
runs fan out to a process pool; every run gets a seed derived from
(base_seed, run_index), and records are sorted by run index before any
file is written, so outputs are byte-identical for any worker count (and
across reruns, once the timestamp header is suppressed).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import sys
from dataclasses import dataclass, replace
from datetime import datetime, timezone

import numpy as np

from . import fixtures
from .pauli import eigenvalues, group_terms, to_dense
from .sim import CountsVector, counts_to_dict, load_counts, save_counts
from .similarity import (
    EnergyBands,
    batch_average_similarity,
    classify_energy,
)
from .vqe import (
    BitOrder,
    RESOLVED_BIT_ORDER,
    VqeConfig,
    energy_from_counts,
    get_hamiltonian,
    run_vqe,
)


class UsageError(Exception):
    """Bad arguments or configuration; maps to exit code 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    vqe: VqeConfig
    n_runs: int = 50
    base_seed: int = 0
    emit_svg: bool = False

    def __post_init__(self) -> None:
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {"vqe", "n_runs", "base_seed", "emit_svg"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown experiment fields: {sorted(unknown)}")
        return cls(
            vqe=VqeConfig.from_dict(doc.get("vqe", {})),
            n_runs=int(doc.get("n_runs", 50)),
            base_seed=int(doc.get("base_seed", 0)),
            emit_svg=bool(doc.get("emit_svg", False)),
        )


@dataclass
class RunRecord:
    run_index: int
    seed: int
    energy_ha: float
    band: str
    evaluations: int
    optimizer: str
    ansatz: str
    noise: str
    status: str = "ok"

    FIELDS = (
        "run_index", "seed", "energy_ha", "band", "evaluations",
        "optimizer", "ansatz", "noise", "status",
    )

    def to_row(self) -> list[str]:
        return [
            str(self.run_index), str(self.seed), repr(self.energy_ha),
            self.band, str(self.evaluations), self.optimizer, self.ansatz,
            self.noise, self.status,
        ]

    @classmethod
    def from_row(cls, row: list[str]) -> "RunRecord":
        return cls(
            run_index=int(row[0]), seed=int(row[1]), energy_ha=float(row[2]),
            band=row[3], evaluations=int(row[4]), optimizer=row[5],
            ansatz=row[6], noise=row[7], status=row[8],
        )


def derive_run_seed(base_seed: int, run_index: int) -> int:
    """Deterministic, well-mixed 64-bit seed for run k of a batch."""
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=(run_index,))
    return int(ss.generate_state(1, np.uint64)[0])


def _run_single(cfg_template: VqeConfig, run_index: int, base_seed: int):
    """One batch run; returns (RunRecord, counts-file documents)."""
    seed = derive_run_seed(base_seed, run_index)
    cfg = replace(cfg_template, seed=seed)
    result = run_vqe(cfg)
    record = RunRecord(
        run_index=run_index,
        seed=seed,
        energy_ha=result.energy,
        band=result.band,
        evaluations=result.evaluations,
        optimizer=cfg.optimizer.method,
        ansatz=cfg.ansatz.describe(),
        noise=cfg.noise.describe(),
        status="ok" if result.complete else "incomplete",
    )
    groups, _ = group_terms(get_hamiltonian(cfg.hamiltonian))
    docs = [
        counts_to_dict(
            cv,
            groups[g].basis,
            bit_order=RESOLVED_BIT_ORDER.value,
            energy_ha=result.energy,
            group_id=g,
            run_index=run_index,
        )
        for g, cv in enumerate(result.final_counts)
    ]
    return record, docs


def _run_single_safe(args):
    cfg_template, run_index, base_seed = args
    try:
        return _run_single(cfg_template, run_index, base_seed)
    except Exception as exc:  # per-run failures recorded, batch continues
        record = RunRecord(
            run_index=run_index,
            seed=derive_run_seed(base_seed, run_index),
            energy_ha=math.nan,
            band="",
            evaluations=0,
            optimizer=cfg_template.optimizer.method,
            ansatz=cfg_template.ansatz.describe(),
            noise=cfg_template.noise.describe(),
            status=f"failed: {exc}",
        )
        return record, []


def execute_batch(experiment: ExperimentConfig, workers: int = 1):
    """All runs of one experiment, sorted by run index."""
    tasks = [
        (experiment.vqe, k, experiment.base_seed) for k in range(experiment.n_runs)
    ]
    if workers <= 1:
        results = [_run_single_safe(t) for t in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_single_safe, tasks))
    results.sort(key=lambda rc: rc[0].run_index)
    return results


# ---------------------------------------------------------------- output --


def _csv_header_lines(no_timestamp: bool) -> list[str]:
    if no_timestamp:
        return []
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return [f"# generated {stamp}"]


def _write_csv(path: str, header: list[str], rows, no_timestamp: bool) -> None:
    lines = _csv_header_lines(no_timestamp)
    lines.append(",".join(header))
    lines.extend(",".join(row) for row in rows)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv_rows(path: str) -> tuple[list[str], list[list[str]]]:
    """Header and rows of a CSV written by this module, comments skipped."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    lines = [ln for ln in lines if not ln.startswith("#")]
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


def write_svg_scatter(
    path: str,
    points,
    xlabel: str,
    ylabel: str,
    title: str,
    hline: float | None = None,
) -> None:
    """Minimal hand-emitted SVG scatter plot; axes are non-normative."""
    width, height = 640, 440
    ml, mr, mt, mb = 70, 20, 40, 50
    xs = [p[0] for p in points] or [0.0]
    ys = [p[1] for p in points] or [0.0]
    if hline is not None:
        ys = ys + [hline]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    xpad = (x1 - x0) * 0.05 or 0.5
    ypad = (y1 - y0) * 0.05 or 0.5
    x0, x1 = x0 - xpad, x1 + xpad
    y0, y1 = y0 - ypad, y1 + ypad

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * (width - ml - mr)

    def sy(y):
        return height - mb - (y - y0) / (y1 - y0) * (height - mt - mb)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" '
        f'font-size="14">{title}</text>',
        f'<line x1="{ml}" y1="{height - mb}" x2="{width - mr}" '
        f'y2="{height - mb}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{height - mb}" '
        f'stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" '
        f'font-size="12">{xlabel}</text>',
        f'<text x="16" y="{height / 2:.1f}" text-anchor="middle" '
        f'font-size="12" transform="rotate(-90 16 {height / 2:.1f})">'
        f"{ylabel}</text>",
    ]
    for i in range(5):
        xv = x0 + (x1 - x0) * i / 4
        yv = y0 + (y1 - y0) * i / 4
        parts.append(
            f'<text x="{sx(xv):.1f}" y="{height - mb + 16}" '
            f'text-anchor="middle" font-size="10">{xv:.3g}</text>'
        )
        parts.append(
            f'<text x="{ml - 6}" y="{sy(yv) + 3:.1f}" text-anchor="end" '
            f'font-size="10">{yv:.4g}</text>'
        )
    if hline is not None:
        parts.append(
            f'<line x1="{ml}" y1="{sy(hline):.1f}" x2="{width - mr}" '
            f'y2="{sy(hline):.1f}" stroke="red" stroke-dasharray="4 3"/>'
        )
    for x, y in points:
        parts.append(
            f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" '
            f'fill="steelblue" fill-opacity="0.7"/>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


# ------------------------------------------------------------ subcommands --


def cmd_eigen(args) -> int:
    try:
        h = get_hamiltonian(args.ham)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot load Hamiltonian {args.ham!r}: {exc}") from exc
    values = eigenvalues(to_dense(h))
    for v in values:
        print(f"{v:.4f}")
    out = os.path.join(args.out_dir, "eigenvalues.json")
    with open(out, "w") as fh:
        json.dump(
            {
                "hamiltonian": args.ham,
                "n_qubits": h.n_qubits,
                "eigenvalues": [float(v) for v in values],
            },
            fh,
            indent=1,
        )
    return 0


def _load_vqe_config(path: str, seed_override: int | None) -> VqeConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path!r} is not valid JSON: {exc}") from exc
    try:
        cfg = VqeConfig.from_dict(doc)
    except (ValueError, TypeError, KeyError) as exc:
        raise UsageError(f"invalid config: {exc}") from exc
    if seed_override is not None:
        cfg = replace(cfg, seed=seed_override)
    return cfg


def cmd_run(args) -> int:
    cfg = _load_vqe_config(args.config, args.seed)
    result = run_vqe(cfg)
    trace_path = os.path.join(args.out_dir, "trace.csv")
    result.trace.to_csv(trace_path)
    groups, _ = group_terms(get_hamiltonian(cfg.hamiltonian))
    doc = {
        "config": cfg.to_dict(),
        "bit_order": RESOLVED_BIT_ORDER.value,
        "energy_ha": result.energy,
        "band": result.band,
        "complete": result.complete,
        "evaluations": result.evaluations,
        "params": [float(p) for p in result.params],
        "trace_csv": "trace.csv",
        "final_counts": [
            counts_to_dict(
                cv,
                groups[g].basis,
                bit_order=RESOLVED_BIT_ORDER.value,
                group_id=g,
            )
            for g, cv in enumerate(result.final_counts)
        ],
    }
    with open(os.path.join(args.out_dir, "result.json"), "w") as fh:
        json.dump(doc, fh, indent=1)
    print(f"energy {result.energy:.4f} Ha  band {result.band}  "
          f"evaluations {result.evaluations}")
    return 0 if result.complete else 1


def cmd_batch(args) -> int:
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
        experiment = ExperimentConfig.from_dict(doc)
    except OSError as exc:
        raise UsageError(f"cannot read config {args.config!r}: {exc}") from exc
    except (ValueError, TypeError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"invalid experiment config: {exc}") from exc
    results = execute_batch(experiment, workers=args.workers)
    records = [r for r, _ in results]

    _write_csv(
        os.path.join(args.out_dir, "runs.csv"),
        list(RunRecord.FIELDS),
        (r.to_row() for r in records),
        args.no_timestamp,
    )

    counts_dir = os.path.join(args.out_dir, "counts")
    os.makedirs(counts_dir, exist_ok=True)
    by_group: dict[int, list[tuple[RunRecord, dict, CountsVector]]] = {}
    for record, docs in results:
        for doc in docs:
            path = os.path.join(
                counts_dir, f"run{record.run_index:04d}_g{doc['group_id']}.json"
            )
            save_counts(path, doc)
            cv = CountsVector(
                tuple(_internal_order(doc)), doc["shots"]
            )
            by_group.setdefault(doc["group_id"], []).append((record, doc, cv))

    sim_rows = []
    for gid in sorted(by_group):
        entries = by_group[gid]
        vectors = [cv.probabilities() for _, _, cv in entries]
        avg_jt = batch_average_similarity(vectors, "jt")
        avg_sd = batch_average_similarity(vectors, "sqrtdot")
        for (record, _, _), jt, sd in zip(entries, avg_jt, avg_sd):
            sim_rows.append(
                [repr(record.energy_ha), repr(float(jt)), repr(float(sd)),
                 record.band, str(gid)]
            )
    _write_csv(
        os.path.join(args.out_dir, "similarity.csv"),
        ["energy_ha", "avg_jt", "avg_sqrt_dot", "band", "group_id"],
        sim_rows,
        args.no_timestamp,
    )

    if experiment.emit_svg:
        ok = [r for r in records if r.status == "ok" and math.isfinite(r.energy_ha)]
        write_svg_scatter(
            os.path.join(args.out_dir, "energies.svg"),
            [(r.run_index, r.energy_ha) for r in ok],
            "run index",
            "energy (Ha)",
            "final energies",
            hline=-1.8670,
        )
        write_svg_scatter(
            os.path.join(args.out_dir, "similarity.svg"),
            [(float(row[0]), float(row[1])) for row in sim_rows],
            "energy (Ha)",
            "avg J-T similarity",
            "batch-averaged similarity",
        )
    n_failed = sum(1 for r in records if r.status.startswith("failed"))
    print(f"{len(records)} runs ({n_failed} failed) -> {args.out_dir}")
    return 0


def _internal_order(doc: dict) -> list[int]:
    """Counts of a just-written document back in internal index order."""
    from .sim import bit_reversal_permutation

    raw = doc["counts"]
    if doc["bit_order"] == "q0_rightmost":
        return list(raw)
    n = doc["n_qubits"]
    perm = bit_reversal_permutation(n)
    return [raw[perm[i]] for i in range(len(raw))]


def _counts_inputs(args) -> list[tuple[str, CountsVector, tuple[str, ...], dict]]:
    """(name, counts, per-qubit basis, metadata) for every input source."""
    entries = []
    if args.fixtures:
        for name in args.fixtures:
            set_members = (
                [f"{name[-1].upper()}0", f"{name[-1].upper()}1"]
                if name.lower().startswith("set")
                else [name]
            )
            for member in set_members:
                try:
                    cv = fixtures.fixture_counts(member)
                except KeyError as exc:
                    raise UsageError(str(exc)) from exc
                entries.append(
                    (member, cv, fixtures.fixture_basis(member), {})
                )
    for path in args.files or []:
        try:
            cv, basis, meta = load_counts(path)
        except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read counts file {path!r}: {exc}") from exc
        entries.append((os.path.basename(path), cv, tuple(basis), meta))
    if not entries:
        raise UsageError("no counts supplied (pass files or --fixtures)")
    return entries


def cmd_energy_from_counts(args) -> int:
    try:
        h = get_hamiltonian(args.ham)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot load Hamiltonian {args.ham!r}: {exc}") from exc
    groups, _ = group_terms(h)
    entries = _counts_inputs(args)
    shots = {cv.shots for _, cv, _, _ in entries}
    if len(shots) > 1:
        print(f"warning: shot counts differ across inputs: {sorted(shots)}",
              file=sys.stderr)
    counts_by_group: dict[int, CountsVector] = {}
    for name, cv, basis, _ in entries:
        if cv.n_qubits != h.n_qubits:
            raise UsageError(
                f"{name}: {cv.n_qubits}-qubit counts for a "
                f"{h.n_qubits}-qubit Hamiltonian"
            )
        matches = [g.group_id for g in groups if g.basis == tuple(basis)]
        if not matches:
            raise UsageError(
                f"{name}: basis {''.join(basis)} matches no measurement group"
            )
        gid = matches[0]
        if gid in counts_by_group:
            raise UsageError(
                f"{name}: duplicate counts for measurement group {gid}"
            )
        counts_by_group[gid] = cv
    missing = [g.group_id for g in groups if g.group_id not in counts_by_group]
    if missing:
        raise UsageError(f"missing counts for measurement groups {missing}")
    est = energy_from_counts(
        h,
        groups,
        [counts_by_group[g.group_id] for g in groups],
        BitOrder.Q0_RIGHTMOST,
    )
    print(f"{est.energy:.4f}")
    return 0


def cmd_similarity(args) -> int:
    if args.batch_dir:
        counts_dir = os.path.join(args.batch_dir, "counts")
        root = counts_dir if os.path.isdir(counts_dir) else args.batch_dir
        files = sorted(
            os.path.join(root, f) for f in os.listdir(root) if f.endswith(".json")
        )
        if not files:
            raise UsageError(f"no counts files under {root!r}")
        args.files = (args.files or []) + files
    entries = _counts_inputs(args)
    dims = {cv.n_qubits for _, cv, _, _ in entries}
    if len(dims) > 1:
        raise UsageError(f"mixed qubit counts across inputs: {sorted(dims)}")

    by_basis: dict[tuple[str, ...], list[int]] = {}
    for i, (_, _, basis, _) in enumerate(entries):
        by_basis.setdefault(basis, []).append(i)
    group_ids = {}
    for gid, basis in enumerate(sorted(by_basis)):
        for i in by_basis[basis]:
            meta = entries[i][3]
            group_ids[i] = int(meta.get("group_id", gid))

    avg_jt = [math.nan] * len(entries)
    avg_sd = [math.nan] * len(entries)
    for basis, idxs in by_basis.items():
        vectors = [entries[i][1].probabilities() for i in idxs]
        if args.measure in ("jt", "both"):
            for i, v in zip(idxs, batch_average_similarity(vectors, "jt")):
                avg_jt[i] = float(v)
        if args.measure in ("sqrtdot", "both"):
            for i, v in zip(idxs, batch_average_similarity(vectors, "sqrtdot")):
                avg_sd[i] = float(v)

    bands = EnergyBands()
    rows = []
    for i, (name, cv, basis, meta) in enumerate(entries):
        energy = meta.get("energy_ha")
        band = classify_energy(float(energy), bands) if energy is not None else ""
        rows.append(
            [
                repr(float(energy)) if energy is not None else "",
                repr(avg_jt[i]) if not math.isnan(avg_jt[i]) else "",
                repr(avg_sd[i]) if not math.isnan(avg_sd[i]) else "",
                band,
                str(group_ids[i]),
            ]
        )
    out = os.path.join(args.out_dir, "similarity.csv")
    _write_csv(
        out,
        ["energy_ha", "avg_jt", "avg_sqrt_dot", "band", "group_id"],
        rows,
        args.no_timestamp,
    )
    print(out)
    return 0


# ----------------------------------------------------------------- parser --


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    common.add_argument("--out-dir", default=".", help="output directory")
    common.add_argument("--no-timestamp", action="store_true",
                        help="suppress the CSV timestamp header line")

    parser = argparse.ArgumentParser(
        prog="h2vqe",
        description="VQE simulation benchmark for the H2 molecule",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eigen", parents=[common],
                       help="exact eigenvalues of a Hamiltonian")
    p.add_argument("--ham", required=True,
                   help="'4q', '2q', or a Hamiltonian JSON path")
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("run", parents=[common], help="one VQE run")
    p.add_argument("--config", required=True, help="VQE config JSON")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("batch", parents=[common],
                       help="seeded batch of VQE runs")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--workers", type=int, default=1,
                   help="process-pool size")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("energy-from-counts", parents=[common],
                       help="energy from per-group counts files")
    p.add_argument("--ham", default="4q")
    p.add_argument("--fixtures", nargs="*", default=[],
                   help="bundled sets, e.g. setA or A0 A1")
    p.add_argument("files", nargs="*", help="counts JSON files")
    p.set_defaults(func=cmd_energy_from_counts)

    p = sub.add_parser("similarity", parents=[common],
                       help="batch-averaged similarity CSV")
    p.add_argument("--measure", choices=("jt", "sqrtdot", "both"),
                   default="both")
    p.add_argument("--batch-dir", default=None,
                   help="directory with counts JSON files (or a batch out-dir)")
    p.add_argument("--fixtures", nargs="*", default=[],
                   help="bundled count sets, e.g. A0 B0 C0")
    p.add_argument("files", nargs="*", help="counts JSON files")
    p.set_defaults(func=cmd_similarity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "out_dir", None):
        os.makedirs(args.out_dir, exist_ok=True)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
