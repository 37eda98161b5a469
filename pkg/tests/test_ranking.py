"""Selection rules, report assembly, export format, and the CLI surface."""

import csv
import subprocess
import sys

import pytest

from bibliorank.assignment import AssignmentLink, AssignmentTable, Round
from bibliorank.corpus import Corpus, InclusionConfig
from bibliorank.errors import PipelineError
from bibliorank.indicators import CountingScheme, IndicatorReport
from bibliorank.ranking import (
    RankingConfig,
    export_columns,
    export_csv,
    generate_report,
    institution_seed,
    select_universities,
)
from bibliorank.synthkit import SynthParams, generate, write_bundle

from conftest import pub


def make_cfg(paths=None, **overrides) -> RankingConfig:
    defaults = dict(
        inclusion=InclusionConfig(english_only=False),
        scheme=CountingScheme.FRACTIONAL,
        top_n=100,
        min_pubs_per_year=0,
        bootstrap_samples=0,
        seed=12345,
    )
    defaults.update(overrides)
    cfg = RankingConfig(**defaults)
    if paths:
        cfg.publications_path = paths["publications"]
        cfg.citations_path = paths["citations"]
        cfg.thesaurus_path = paths["thesaurus"]
        cfg.institutions_path = paths["institutions"]
        cfg.geo_path = paths["geo"]
    return cfg


@pytest.fixture(scope="module")
def bundle_paths(tmp_path_factory):
    bundle = generate(
        SynthParams(
            n_institutions=8,
            n_publications=600,
            collaboration_rate=0.35,
            international_rate=0.5,
            letter_share=0.1,
            multi_field_rate=0.2,
            seed=101,
        )
    )
    out = tmp_path_factory.mktemp("bundle")
    return write_bundle(bundle, out)


class TestSelection:
    def _corpus_two_institutions(self, counts_by_year: dict[str, dict[int, int]]):
        pubs = []
        links = []
        for inst, by_year in counts_by_year.items():
            for year, count in by_year.items():
                for i in range(count):
                    pid = f"{inst}-{year}-{i}"
                    pubs.append(pub(pid, year=year))
                    links.append(AssignmentLink(pid, inst, 1, Round.ONE))
        return Corpus(pubs), AssignmentTable(links)

    def test_per_year_minimum_excludes(self):
        years = {2005: 3, 2006: 3, 2007: 3, 2008: 3, 2009: 3}
        short = {**years, 2007: 2}  # one year below the minimum
        corpus, table = self._corpus_two_institutions({"full": years, "short": short})
        cfg = make_cfg(min_pubs_per_year=3, top_n=10)
        selection = select_universities(corpus, table, cfg)
        assert selection.institutions == ["full"]

    def test_order_by_output_then_id(self):
        years_small = {y: 2 for y in range(2005, 2010)}
        years_big = {y: 4 for y in range(2005, 2010)}
        corpus, table = self._corpus_two_institutions(
            {"bbb": years_small, "aaa": years_small, "zzz": years_big}
        )
        cfg = make_cfg(min_pubs_per_year=1, top_n=10)
        selection = select_universities(corpus, table, cfg)
        assert selection.institutions == ["zzz", "aaa", "bbb"]

    def test_undersupply_notice(self):
        corpus, table = self._corpus_two_institutions(
            {"a": {y: 1 for y in range(2005, 2010)}}
        )
        cfg = make_cfg(min_pubs_per_year=1, top_n=500)
        selection = select_universities(corpus, table, cfg)
        assert selection.institutions == ["a"]
        assert "1 institutions eligible" in selection.notice

    def test_top_n_truncates(self):
        corpus, table = self._corpus_two_institutions(
            {
                "a": {y: 5 for y in range(2005, 2010)},
                "b": {y: 4 for y in range(2005, 2010)},
                "c": {y: 3 for y in range(2005, 2010)},
            }
        )
        cfg = make_cfg(min_pubs_per_year=1, top_n=2)
        selection = select_universities(corpus, table, cfg)
        assert selection.institutions == ["a", "b"]
        assert selection.notice is None

    def test_eligibility_ignores_language_and_letters(self):
        pubs = []
        links = []
        for i, (doc, lang) in enumerate(
            [("letter", "en"), ("article", "de"), ("review", "fr")] * 5
        ):
            pid = f"p{i}"
            pubs.append(pub(pid, year=2005 + i % 5, doc=doc, lang=lang))
            links.append(AssignmentLink(pid, "inst", 1, Round.ONE))
        cfg = make_cfg(
            inclusion=InclusionConfig(english_only=True), min_pubs_per_year=3, top_n=5
        )
        selection = select_universities(Corpus(pubs), AssignmentTable(links), cfg)
        assert selection.institutions == ["inst"]


class TestGenerateReport:
    def test_row_count_and_columns(self, bundle_paths):
        cfg = make_cfg(bundle_paths)
        result = generate_report(cfg)
        assert len(result.rows) == result.selection.eligible_count == 8
        for row in result.rows:
            assert row.p > 0
            for name in ("mcs", "mncs", "pp_top10", "pp_collab", "mgcd_km"):
                assert getattr(row, name) is not None
            assert row.config_fingerprint == cfg.fingerprint()

    def test_rerun_byte_identical(self, bundle_paths, tmp_path):
        cfg = make_cfg(bundle_paths, bootstrap_samples=50)
        outs = []
        for run in (0, 1):
            result = generate_report(cfg)
            path = tmp_path / f"report{run}.csv"
            export_csv(result.rows, path)
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]

    def test_intervals_present_when_sampled(self, bundle_paths):
        cfg = make_cfg(bundle_paths, bootstrap_samples=50)
        result = generate_report(cfg)
        row = result.rows[0]
        assert set(row.intervals) == {
            "p", "mcs", "mncs", "pp_top5", "pp_top10", "pp_top20",
            "pp_collab", "pp_int_collab", "mgcd_km", "pp_gt1000km",
        }
        interval = row.intervals["mncs"]
        assert interval.samples == 50
        assert interval.lower <= interval.upper

    def test_full_and_fractional_same_rows(self, bundle_paths):
        rows_by_scheme = {}
        for scheme in (CountingScheme.FULL, CountingScheme.FRACTIONAL):
            cfg = make_cfg(bundle_paths, scheme=scheme)
            result = generate_report(cfg)
            rows_by_scheme[scheme] = [r.institution_id for r in result.rows]
        assert rows_by_scheme[CountingScheme.FULL] == rows_by_scheme[CountingScheme.FRACTIONAL]

    def test_summary_country_counts_sum(self, bundle_paths):
        result = generate_report(make_cfg(bundle_paths))
        summary = result.summary
        assert sum(summary.country_counts.values()) == summary.institutions_selected
        assert summary.records_read == summary.corpus_publications + summary.records_rejected

    def test_missing_input_aborts_with_stage(self, bundle_paths, tmp_path):
        cfg = make_cfg(bundle_paths)
        cfg.publications_path = tmp_path / "absent.jsonl"
        with pytest.raises(PipelineError) as err:
            generate_report(cfg)
        assert err.value.stage == "parse"

    def test_bad_citation_file_aborts_with_stage(self, bundle_paths, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("citing_id,cited_id\nghost,alsoghost\n")
        cfg = make_cfg(bundle_paths)
        cfg.citations_path = bad
        with pytest.raises(PipelineError) as err:
            generate_report(cfg)
        assert err.value.stage == "citations"

    def test_english_only_differential(self, tmp_path):
        # German publications sit in a dedicated field so the language filter
        # cannot move any shared normalization baseline
        pubs = []
        links = []
        for i in range(40):
            pid = f"en{i}"
            pubs.append(pub(pid, year=2005 + i % 5, addrs=("University Alpha",)))
            links.append(AssignmentLink(pid, "alpha", 1, Round.ONE))
        for i in range(40):
            pid = f"de{i}"
            pubs.append(
                pub(pid, year=2005 + i % 5, lang="de",
                    fields=(("germanistik", 1.0),), addrs=("University Beta",))
            )
            links.append(AssignmentLink(pid, "beta", 1, Round.ONE))
        # beta also has English output so it stays in the report both ways
        for i in range(10):
            pid = f"be{i}"
            pubs.append(pub(pid, year=2005 + i % 5, addrs=("University Beta",)))
            links.append(AssignmentLink(pid, "beta", 1, Round.ONE))

        from bibliorank.assignment import Institution, Thesaurus, write_thesaurus
        from bibliorank.corpus import write_corpus, write_citation_graph, CitationGraph

        corpus = Corpus(pubs)
        thesaurus = Thesaurus(
            [],
            [Institution("alpha", "Alpha", "US"), Institution("beta", "Beta", "DE")],
        )
        from conftest import variant

        thesaurus = Thesaurus(
            [variant("university alpha", "alpha"), variant("university beta", "beta")],
            [Institution("alpha", "Alpha", "US"), Institution("beta", "Beta", "DE")],
        )
        paths = {
            "publications": tmp_path / "pubs.jsonl",
            "citations": tmp_path / "cites.csv",
            "thesaurus": tmp_path / "thesaurus.csv",
            "institutions": tmp_path / "institutions.csv",
            "geo": None,
        }
        write_corpus(corpus, paths["publications"])
        write_citation_graph(CitationGraph([], corpus), paths["citations"])
        write_thesaurus(thesaurus, paths["thesaurus"], paths["institutions"])

        rows = {}
        for english_only in (False, True):
            cfg = make_cfg(
                inclusion=InclusionConfig(english_only=english_only),
            )
            cfg.publications_path = paths["publications"]
            cfg.citations_path = paths["citations"]
            cfg.thesaurus_path = paths["thesaurus"]
            cfg.institutions_path = paths["institutions"]
            result = generate_report(cfg)
            rows[english_only] = {r.institution_id: r for r in result.rows}

        # alpha has no language-affected publications: identical values
        for name in ("p", "mcs", "mncs", "pp_top10"):
            assert getattr(rows[False]["alpha"], name) == pytest.approx(
                getattr(rows[True]["alpha"], name)
            )
        # beta loses its German records: output changes
        assert rows[True]["beta"].p < rows[False]["beta"].p


class TestExport:
    def _rows(self):
        defined = IndicatorReport(
            institution_id="alpha",
            display_name="University Alpha",
            country="US",
            p=1234.25,
            mcs=7.2,
            mncs=1.23456,
            pp_top5=0.05,
            pp_top10=0.10125,
            pp_top20=0.2,
            pp_collab=0.5,
            pp_int_collab=0.25,
            mgcd_km=1553.27,
            pp_gt1000km=0.33333,
            config_fingerprint="abc123",
        )
        undefined = IndicatorReport(
            institution_id="empty", display_name="Empty U", country="DE",
            p=0.0, config_fingerprint="abc123",
        )
        return [defined, undefined]

    def test_header_only_when_empty(self, tmp_path):
        path = tmp_path / "report.csv"
        export_csv([], path)
        lines = path.read_text().splitlines()
        assert len(lines) == 1
        assert lines[0] == ",".join(export_columns())

    def test_na_for_undefined(self, tmp_path):
        path = tmp_path / "report.csv"
        export_csv(self._rows(), path)
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        empty = rows[1]
        assert empty["mcs"] == "NA"
        assert empty["mncs"] == "NA"
        assert empty["p"] == "0.0000"
        assert empty["mcs_lo"] == "NA"

    def test_formatting_rules(self, tmp_path):
        path = tmp_path / "report.csv"
        export_csv(self._rows(), path)
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        alpha = rows[0]
        assert alpha["pp_top10"] == "0.1013"  # proportions: 4 decimals
        assert alpha["mgcd_km"] == "1553.3"   # distances: 1 decimal
        assert alpha["mcs"] == "7.2000"
        assert "." in alpha["p"]

    def test_round_trip_within_precision(self, tmp_path):
        path = tmp_path / "report.csv"
        rows = self._rows()
        export_csv(rows, path)
        with open(path, newline="") as fh:
            parsed = list(csv.DictReader(fh))
        alpha = parsed[0]
        assert float(alpha["pp_top10"]) == pytest.approx(rows[0].pp_top10, abs=5e-5)
        assert float(alpha["mgcd_km"]) == pytest.approx(rows[0].mgcd_km, abs=0.05)
        assert float(alpha["mncs"]) == pytest.approx(rows[0].mncs, abs=5e-5)


class TestInstitutionSeed:
    def test_stable_and_distinct(self):
        a1 = institution_seed(7, "alpha")
        a2 = institution_seed(7, "alpha")
        b = institution_seed(7, "beta")
        other_master = institution_seed(8, "alpha")
        assert a1 == a2
        assert a1 != b
        assert a1 != other_master


class TestCli:
    def _run(self, *args):
        return subprocess.run(
            [sys.executable, "-m", "bibliorank.cli", *map(str, args)],
            capture_output=True,
            text=True,
        )

    def test_report_end_to_end(self, bundle_paths, tmp_path):
        out = tmp_path / "report.csv"
        figures = tmp_path / "figures"
        proc = self._run(
            "report",
            "--publications", bundle_paths["publications"],
            "--citations", bundle_paths["citations"],
            "--thesaurus", bundle_paths["thesaurus"],
            "--institutions", bundle_paths["institutions"],
            "--geo", bundle_paths["geo"],
            "--seed", 7,
            "--out", out,
            "--figures", figures,
            "--top-n", 10,
            "--min-per-year", 0,
            "--bootstrap-samples", 25,
            "--no-english-only",
            "--summary-out", tmp_path / "summary.txt",
            "--cells-out", tmp_path / "cells.csv",
            "--validation-out", tmp_path / "validation.csv",
            "--rejects-out", tmp_path / "rejects.csv",
        )
        assert proc.returncode == 0, proc.stderr
        assert out.exists()
        assert (figures / "mcs_vs_mncs.png").exists()
        assert (figures / "pp_top10_scheme_comparison.png").exists()
        assert (figures / "collab_correlations.csv").exists()
        assert (tmp_path / "summary.txt").exists()
        assert "institutions per country" in (tmp_path / "summary.txt").read_text()

    def test_report_missing_input_exits_nonzero_with_stage(self, tmp_path):
        proc = self._run(
            "report",
            "--publications", tmp_path / "absent.jsonl",
            "--citations", tmp_path / "absent.csv",
            "--thesaurus", tmp_path / "absent.csv",
            "--seed", 1,
            "--out", tmp_path / "out.csv",
        )
        assert proc.returncode == 1
        assert "[stage:parse]" in proc.stderr

    def test_seed_required(self, bundle_paths, tmp_path):
        proc = self._run(
            "report",
            "--publications", bundle_paths["publications"],
            "--citations", bundle_paths["citations"],
            "--thesaurus", bundle_paths["thesaurus"],
            "--out", tmp_path / "out.csv",
        )
        assert proc.returncode == 2
        assert "--seed" in proc.stderr

    def test_synth_subcommand_writes_bundle(self, tmp_path):
        out_dir = tmp_path / "bundle"
        proc = self._run(
            "synth", "--seed", 5, "--out-dir", out_dir,
            "--publications", 50, "--institutions", 3,
        )
        assert proc.returncode == 0, proc.stderr
        for name in ("publications.jsonl", "citations.csv", "thesaurus.csv",
                     "institutions.csv", "geo.csv", "ground_truth_links.csv"):
            assert (out_dir / name).exists()
