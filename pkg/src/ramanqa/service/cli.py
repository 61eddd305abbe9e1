"""Command-line entry points: ingest, index, ask, eval, serve, synth-scan."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from ..corpus import chunk_document, extract_text, read_chunk_records, read_manifest, write_chunk_records
from ..errors import (
    ConfigError,
    CorpusError,
    EmbeddingError,
    EvalError,
    IndexLoadError,
    PlanError,
    ProviderError,
    QAError,
    RamanQAError,
    SpectrumError,
    SqlExecutionError,
    SqlValidationError,
    StoreError,
)
from ..evalsuite import load_benchmark_questions, run_benchmark
from ..index import build_index
from ..planner import ContextFilters, plan
from ..qa import execute_plan, format_evidence, synthesize
from ..spectra import PlantedPeak, SyntheticScanTruth, generate_synthetic_scan
from ..spectra.io import read_spectra, write_spectra
from ..spectra.pipeline import process_spectrum
from ..store import PeakRow, SampleRow
from .config import load_config
from .wiring import wire_system

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_INGEST = 3
EXIT_INDEX = 4
EXIT_ASK = 5
EXIT_EVAL = 6
EXIT_SERVE = 7

_ERROR_EXITS: list[tuple[type, int]] = [
    (ConfigError, EXIT_CONFIG),
    (SpectrumError, EXIT_INGEST),
    (StoreError, EXIT_INGEST),
    (CorpusError, EXIT_INDEX),
    (EmbeddingError, EXIT_INDEX),
    (IndexLoadError, EXIT_INDEX),
    (PlanError, EXIT_ASK),
    (SqlValidationError, EXIT_ASK),
    (SqlExecutionError, EXIT_ASK),
    (QAError, EXIT_ASK),
    (ProviderError, EXIT_ASK),
    (EvalError, EXIT_EVAL),
    (RamanQAError, 1),
]


def _exit_code(exc: Exception) -> int:
    for etype, code in _ERROR_EXITS:
        if isinstance(exc, etype):
            return code
    return 1


def cmd_ingest_spectra(args) -> int:
    config = load_config(args.config)
    system = wire_system(config, require_index=False)
    spectra = read_spectra(args.input, fmt=config.spectra_format)
    samples: list[SampleRow] = []
    peaks: list[PeakRow] = []
    next_sample = next_peak = 1
    existing = system.store.counts()
    if existing != (0, 0):
        conn_max = _max_ids(system.store)
        next_sample, next_peak = conn_max[0] + 1, conn_max[1] + 1
    for spec in spectra:
        fitted = process_spectrum(
            spec,
            sg_window=config.sg_window,
            sg_polyorder=config.sg_polyorder,
            als_lam=config.als_lam,
            als_p=config.als_p,
            als_iters=config.als_iters,
            confidence_threshold=config.confidence_threshold,
        )
        samples.append(SampleRow(next_sample, spec.ts, spec.x, spec.y))
        for peak, family in fitted:
            peaks.append(
                PeakRow(
                    id=next_peak,
                    sample_id=next_sample,
                    family=family,
                    center=peak.center,
                    height=peak.height,
                    width=peak.width,
                )
            )
            next_peak += 1
        next_sample += 1
    ns, npk = system.store.insert_scan(samples, peaks)
    print(f"ingested {ns} samples, {npk} peaks into {config.store_file}")
    return 0


def _max_ids(store) -> tuple[int, int]:
    conn = store._connect(readonly=True)
    try:
        ms = conn.execute("SELECT COALESCE(MAX(id), 0) FROM samples").fetchone()[0]
        mp = conn.execute("SELECT COALESCE(MAX(id), 0) FROM peaks").fetchone()[0]
        return ms, mp
    finally:
        conn.close()


def cmd_ingest_docs(args) -> int:
    config = load_config(args.config)
    entries = read_manifest(args.manifest)
    pairs = []
    for entry in entries:
        data = config.resolve(entry.path).read_bytes()
        doc = extract_text(data, entry.title, entry.doc_id, origin=entry.path)
        for chunk in chunk_document(doc, size=config.chunk_size, overlap=config.chunk_overlap):
            pairs.append((chunk, entry.title))
    count = write_chunk_records(config.chunks_file, pairs)
    print(f"wrote {count} chunks from {len(entries)} documents to {config.chunks_file}")
    return 0


def cmd_build_index(args) -> int:
    config = load_config(args.config)
    from .wiring import build_embedder

    records = read_chunk_records(config.chunks_file)
    if not records:
        raise CorpusError(f"no chunk records in {config.chunks_file}")
    embedder = build_embedder(config)
    index = build_index(records, embedder)
    index.save(config.index_file)
    print(f"indexed {len(index)} chunks (dim {index.dim}) into {config.index_file}")
    return 0


def cmd_ask(args) -> int:
    config = load_config(args.config)
    system = wire_system(config)
    filters = ContextFilters.from_json(json.loads(args.filters)) if args.filters else None
    k = args.k or config.k
    qplan = plan(args.question, filters, system.planner_provider, config.row_limit)
    evidence = execute_plan(
        qplan,
        system.store,
        system.index,
        system.embedder,
        k=k,
        leg_timeout=config.leg_timeout_s,
    )
    answer = synthesize(args.question, evidence, system.synth_provider)
    print(answer.text)
    print()
    print(format_evidence(evidence))
    if answer.warnings:
        print()
        for w in answer.warnings:
            print(f"warning: {w}")
    return 0


def cmd_eval(args) -> int:
    config = load_config(args.config)
    system = wire_system(config)
    questions = load_benchmark_questions(args.benchmark)
    if args.qids:
        wanted = {int(q) for q in args.qids.split(",")}
        questions = [q for q in questions if q.qid in wanted]
    k_values = tuple(int(k) for k in args.k_values.split(","))
    report = run_benchmark(
        questions, system.handle(), runs=args.runs, k_values=k_values
    )
    text = report.to_text()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"report written to {args.out}")
    else:
        print(text)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    config = load_config(args.config)
    system = wire_system(config)
    host, _, port = args.addr.rpartition(":")
    app = create_app(system)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


def cmd_synth_scan(args) -> int:
    config = load_config(args.config)
    truth = SyntheticScanTruth(
        seed=args.seed,
        nx=args.nx,
        ny=args.ny,
        timesteps=args.timesteps,
        peaks=(
            PlantedPeak("a1g_c", 595.5, 120.0, 12.0),
            PlantedPeak("d", 1330.5, 200.0, 25.0),
            PlantedPeak("g", 1596.8, 150.0, 18.0),
        ),
        noise_level=args.noise,
        baseline_coeffs=(20.0, 10.0),
        center_jitter=2.0,
        height_jitter=0.2,
    )
    spectra, record = generate_synthetic_scan(truth)
    count = write_spectra(args.out, spectra, fmt=config.spectra_format)
    truth_path = str(args.out) + ".truth.json"
    with open(truth_path, "w", encoding="utf-8") as fh:
        json.dump(
            [
                {
                    "ts": r.ts, "x": r.x, "y": r.y, "family": r.family,
                    "center": r.center, "height": r.height, "width": r.width,
                }
                for r in record.planted
            ],
            fh,
        )
    print(f"wrote {count} spectra to {args.out} (truth: {truth_path})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ramanqa",
        description="Hybrid QA over a Raman peak database and literature corpus",
    )
    parser.add_argument("--config", default=None, help="path to config JSON")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-spectra", help="run the peak pipeline over a spectra file")
    p.add_argument("input")
    p.set_defaults(func=cmd_ingest_spectra)

    p = sub.add_parser("ingest-docs", help="extract and chunk corpus documents")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_ingest_docs)

    p = sub.add_parser("build-index", help="embed chunks into the vector index")
    p.set_defaults(func=cmd_build_index)

    p = sub.add_parser("ask", help="answer one question")
    p.add_argument("question")
    p.add_argument("--filters", default=None, help="filters as JSON")
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(func=cmd_ask)

    p = sub.add_parser("eval", help="run the benchmark")
    p.add_argument("benchmark", nargs="?", default=None, help="questions JSONL (default: shipped fixture)")
    p.add_argument("--runs", type=int, default=3)
    p.add_argument("--k-values", default="10")
    p.add_argument("--qids", default=None, help="comma-separated subset")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--addr", default="127.0.0.1:8000")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("synth-scan", help="generate a synthetic demo scan")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nx", type=int, default=4)
    p.add_argument("--ny", type=int, default=4)
    p.add_argument("--timesteps", type=int, default=5)
    p.add_argument("--noise", type=float, default=0.0)
    p.set_defaults(func=cmd_synth_scan)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except RamanQAError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
