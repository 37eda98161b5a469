"""Command-line entry points: the report pipeline and the synthetic generator."""

from __future__ import annotations

import argparse
import csv
import sys

from .assignment import AssignmentConfig, write_validation_report
from .corpus import InclusionConfig
from .errors import BiblioRankError, PipelineError
from .figures import render_report_figures
from .indicators import CountingScheme
from .normalization import write_cell_table
from .ranking import RankingConfig, export_csv, generate_report, write_summary
from .synthkit import SynthParams, generate, write_bundle


def _years(value: str) -> tuple[int, int]:
    try:
        lo, hi = value.split(":")
        return int(lo), int(hi)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"expected YEAR_MIN:YEAR_MAX (e.g. 2005:2009), got {value!r}"
        ) from exc


def _language_mix(value: str) -> tuple[tuple[str, float], ...]:
    try:
        parts = []
        for chunk in value.split(","):
            code, prob = chunk.split(":")
            parts.append((code.strip(), float(prob)))
        return tuple(parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"expected CODE:PROB[,CODE:PROB...], got {value!r}"
        ) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bibliorank",
        description=(
            "Compute per-institution publication, citation-impact, and "
            "collaboration indicators with bootstrap stability intervals."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    report = sub.add_parser("report", help="run the full indicator pipeline")
    report.add_argument("--publications", required=True, help="publication records (JSONL)")
    report.add_argument("--citations", required=True, help="citing_id,cited_id CSV")
    report.add_argument("--thesaurus", required=True, help="name-variant CSV")
    report.add_argument("--institutions", help="institution register CSV")
    report.add_argument("--geo", help="address_key,lat,lon CSV")
    report.add_argument(
        "--counting",
        choices=[s.value for s in CountingScheme],
        default=CountingScheme.FRACTIONAL.value,
    )
    report.add_argument(
        "--english-only",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="restrict indicators to English-language publications",
    )
    report.add_argument(
        "--self-citations",
        action=argparse.BooleanOptionalAction,
        default=False,
        help="count author self-citations (default: excluded)",
    )
    report.add_argument("--years", type=_years, default=(2005, 2009), metavar="MIN:MAX")
    report.add_argument("--citation-window-end", type=int, default=2010)
    report.add_argument("--letter-weight", type=float, default=0.25)
    report.add_argument("--top-n", type=int, default=500)
    report.add_argument("--min-per-year", type=int, default=500)
    report.add_argument("--min-occurrences", type=int, default=5)
    report.add_argument("--round2-threshold", type=float, default=0.5)
    report.add_argument("--bootstrap-samples", type=int, default=1000)
    report.add_argument("--level", type=float, default=95.0)
    report.add_argument("--seed", type=int, required=True)
    report.add_argument("--out", required=True, help="report CSV path")
    report.add_argument("--figures", help="directory for scatter figures")
    report.add_argument("--cells-out", help="normalization cell audit CSV")
    report.add_argument("--summary-out", help="summary text file")
    report.add_argument("--validation-out", help="assignment validation CSV")
    report.add_argument("--rejects-out", help="rejected-record CSV")

    synth = sub.add_parser("synth", help="generate a synthetic corpus bundle")
    synth.add_argument("--seed", type=int, required=True)
    synth.add_argument("--out-dir", required=True)
    synth.add_argument("--publications", type=int, default=1000)
    synth.add_argument("--institutions", type=int, default=10)
    synth.add_argument("--years", type=_years, default=(2005, 2009), metavar="MIN:MAX")
    synth.add_argument("--collab-rate", type=float, default=0.3)
    synth.add_argument("--intl-rate", type=float, default=0.5)
    synth.add_argument("--citation-mean", type=float, default=4.0)
    synth.add_argument("--dispersion", type=float, default=2.0)
    synth.add_argument("--collab-citation-boost", type=float, default=1.0)
    synth.add_argument("--letter-share", type=float, default=0.1)
    synth.add_argument("--review-share", type=float, default=0.1)
    synth.add_argument("--multi-field-rate", type=float, default=0.2)
    synth.add_argument("--languages", type=_language_mix, default=(("en", 1.0),))
    synth.add_argument("--unmatchable-rate", type=float, default=0.0)
    synth.add_argument("--outliers", type=int, default=0)
    synth.add_argument("--outlier-citations", type=int, default=0)
    return parser


def _run_report(args: argparse.Namespace) -> int:
    cfg = RankingConfig(
        inclusion=InclusionConfig(
            year_min=args.years[0],
            year_max=args.years[1],
            citation_window_end=args.citation_window_end,
            english_only=args.english_only,
            exclude_self_citations=not args.self_citations,
            letter_weight=args.letter_weight,
        ),
        scheme=CountingScheme(args.counting),
        assignment=AssignmentConfig(
            min_occurrences=args.min_occurrences,
            round2_threshold=args.round2_threshold,
        ),
        top_n=args.top_n,
        min_pubs_per_year=args.min_per_year,
        bootstrap_samples=args.bootstrap_samples,
        bootstrap_level=args.level,
        seed=args.seed,
        publications_path=args.publications,
        citations_path=args.citations,
        thesaurus_path=args.thesaurus,
        institutions_path=args.institutions,
        geo_path=args.geo,
        out_path=args.out,
        figures_dir=args.figures,
    )
    result = generate_report(cfg)
    try:
        export_csv(result.rows, args.out)
    except OSError as exc:
        raise PipelineError("export", str(exc)) from exc
    if args.figures:
        try:
            render_report_figures(result.rows, args.figures, result.counterpart_pp_top10)
        except OSError as exc:
            raise PipelineError("figures", str(exc)) from exc
    if args.cells_out:
        write_cell_table(result.cells, args.cells_out)
    if args.summary_out:
        write_summary(result.summary, args.summary_out)
    if args.validation_out:
        write_validation_report(result.validation, args.validation_out)
    if args.rejects_out:
        with open(args.rejects_out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["line_number", "reason"])
            for rejection in result.parse_result.rejections:
                writer.writerow([rejection.line_number, rejection.reason])
    for line in result.summary.lines():
        print(line)
    print(f"report written to {args.out} ({len(result.rows)} institutions)")
    return 0


def _run_synth(args: argparse.Namespace) -> int:
    params = SynthParams(
        n_institutions=args.institutions,
        n_publications=args.publications,
        year_min=args.years[0],
        year_max=args.years[1],
        collaboration_rate=args.collab_rate,
        international_rate=args.intl_rate,
        citation_mean=args.citation_mean,
        citation_dispersion=args.dispersion,
        collab_citation_boost=args.collab_citation_boost,
        outlier_count=args.outliers,
        outlier_citations=args.outlier_citations,
        language_mix=args.languages,
        letter_share=args.letter_share,
        review_share=args.review_share,
        multi_field_rate=args.multi_field_rate,
        unmatchable_rate=args.unmatchable_rate,
        seed=args.seed,
    )
    paths = write_bundle(generate(params), args.out_dir)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            return _run_report(args)
        return _run_synth(args)
    except PipelineError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except BiblioRankError as exc:
        print(f"[stage:{args.command}] {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
