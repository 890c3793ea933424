import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest
from click.testing import CliRunner

from fieldscale.cli import cli
from fieldscale.corpus import export_table, read_table, write_table
from test_pipeline import small_corpus

DEMO_CSV = Path(__file__).parent.parent / "src" / "fieldscale" / "data" / "demo" / "corpus.csv"


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def corpus_csv(tmp_path):
    path = tmp_path / "corpus.csv"
    write_table(export_table(small_corpus()), path)
    return path


def invoke(runner, args):
    result = runner.invoke(cli, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


class TestTables:
    def test_ingest_writes_table_and_manifest(self, runner, tmp_path):
        notes = tmp_path / "notes"
        notes.mkdir()
        (notes / "P01_20240101_ab.txt").write_text("first paragraph\n\nsecond one\n")
        (notes / "P02_20240102_cd.txt").write_text("another note\n")
        out = tmp_path / "corpus.csv"
        result = invoke(runner, ["ingest", "--in", str(notes), "--out", str(out)])
        assert "3 units from 2 documents" in result.output
        assert out.exists()
        manifest = json.loads((tmp_path / "corpus.csv.manifest.json").read_text())
        assert manifest["command"] == "ingest"
        assert list(manifest["outputs"]) == ["corpus.csv"]

    def test_export_import_round_trip_through_separator(self, runner, corpus_csv, tmp_path):
        exported = tmp_path / "for_caqdas.csv"
        invoke(runner, [
            "export-table", "--in", str(corpus_csv),
            "--separator", "comma", "--out", str(exported),
        ])
        back = tmp_path / "back.csv"
        invoke(runner, [
            "import-table", "--in", str(exported),
            "--separator", "comma", "--out", str(back),
        ])
        assert back.read_bytes() == corpus_csv.read_bytes()

    def test_custom_column_headers(self, runner, corpus_csv, tmp_path):
        renamed = tmp_path / "renamed.csv"
        invoke(runner, [
            "export-table", "--in", str(corpus_csv), "--out", str(renamed),
            "--col-text", "Body", "--col-document", "File",
        ])
        header = read_table(renamed)[0]
        assert "Body" in header and "File" in header


class TestAnalysis:
    def test_topics_fit_then_show(self, runner, corpus_csv, tmp_path):
        out = tmp_path / "topics"
        invoke(runner, [
            "topics", "fit", "--in", str(corpus_csv),
            "--k", "2", "--iterations", "40", "--out", str(out),
        ])
        assert (out / "model.json").exists()
        assert (out / "manifest.json").exists()
        shown = invoke(runner, ["topics", "show", "--model", str(out / "model.json"), "--n", "3"])
        assert shown.output.startswith("topic 0:")

    def test_embed_train_project_neighbors(self, runner, tmp_path):
        out = tmp_path / "emb"
        invoke(runner, [
            "embed", "train", "--in", str(DEMO_CSV), "--dim", "12",
            "--window", "3", "--epochs", "2", "--min-count", "3", "--out", str(out),
        ])
        invoke(runner, [
            "embed", "project", "--vectors", str(out / "vectors.txt"),
            "--clusters", "2", "--out", str(tmp_path / "proj"),
        ])
        assert (tmp_path / "proj" / "projection.csv").exists()
        near = invoke(runner, [
            "embed", "neighbors", "--vectors", str(out / "vectors.txt"),
            "--word", "water", "--n", "2",
        ])
        assert len(near.output.strip().splitlines()) == 2

    def test_semnet_build_prune_communities(self, runner, corpus_csv, tmp_path):
        built = tmp_path / "sn"
        invoke(runner, [
            "semnet", "build", "--in", str(corpus_csv),
            "--scope", "sentence", "--out", str(built),
        ])
        pruned = tmp_path / "sp"
        invoke(runner, [
            "semnet", "prune", "--graph", str(built / "graph.graphml"),
            "--min-weight", "2", "--out", str(pruned),
        ])
        comm = tmp_path / "sc"
        invoke(runner, [
            "semnet", "communities", "--graph", str(pruned / "graph.graphml"),
            "--out", str(comm),
        ])
        rows = read_table(comm / "communities.csv")
        assert rows[0] == ["node", "community"]
        assert len(rows) > 1

    def test_heatmap_render(self, runner, corpus_csv, tmp_path):
        out = tmp_path / "hm"
        invoke(runner, ["heatmap", "render", "--in", str(corpus_csv), "--out", str(out)])
        svg = (out / "heatmap.svg").read_text()
        assert svg.startswith("<svg")


class TestCoder:
    def test_split_train_tune_eval(self, runner, tmp_path):
        out = tmp_path
        invoke(runner, [
            "code", "split", "--in", str(DEMO_CSV), "--code", "water access",
            "--eval-fraction", "0.3", "--out", str(out / "split"),
        ])
        invoke(runner, [
            "code", "train", "--in", str(DEMO_CSV),
            "--keys", str(out / "split" / "train_keys.csv"),
            "--code", "water access", "--epochs", "80", "--out", str(out / "model"),
        ])
        invoke(runner, [
            "code", "tune", "--in", str(DEMO_CSV),
            "--keys", str(out / "split" / "train_keys.csv"),
            "--model", str(out / "model" / "model.json"),
            "--target-recall", "0.98", "--out", str(out / "tuned"),
        ])
        result = invoke(runner, [
            "code", "eval", "--in", str(DEMO_CSV),
            "--keys", str(out / "split" / "eval_keys.csv"),
            "--model", str(out / "tuned" / "model.json"),
            "--out", str(out / "eval"),
        ])
        assert "precision" in result.output
        report = json.loads((out / "eval" / "report.json").read_text())
        assert report["recall"] >= 0.9

    def test_apply_builds_queue_and_review_project(self, runner, tmp_path):
        invoke(runner, [
            "code", "split", "--in", str(DEMO_CSV), "--code", "water access",
            "--out", str(tmp_path / "split"),
        ])
        invoke(runner, [
            "code", "train", "--in", str(DEMO_CSV),
            "--keys", str(tmp_path / "split" / "train_keys.csv"),
            "--code", "water access", "--epochs", "80", "--out", str(tmp_path / "model"),
        ])
        invoke(runner, [
            "code", "apply", "--in", str(DEMO_CSV),
            "--model", str(tmp_path / "model" / "model.json"),
            "--review-dir", str(tmp_path / "review"),
            "--out", str(tmp_path / "apply"),
        ])
        scores = read_table(tmp_path / "apply" / "scores.csv")
        assert scores[0] == ["document", "reference", "score", "predicted"]
        queue = json.loads(
            (tmp_path / "review" / "water access" / "queue.json").read_text()
        )
        assert queue["code"] == "water access"

    def test_alpha_matches_hand_value(self, runner, tmp_path):
        # raters agree on 3 of 4 units: alpha = 8/15 by the coincidence matrix
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        header = "document,reference,label\n"
        a.write_text(header + "d,0,yes\nd,1,yes\nd,2,no\nd,3,no\n")
        b.write_text(header + "d,0,yes\nd,1,yes\nd,2,no\nd,3,yes\n")
        result = invoke(runner, ["code", "alpha", "--a", str(a), "--b", str(b)])
        assert float(result.output) == pytest.approx(float(Fraction(8, 15)), abs=1e-12)

    def test_alpha_drops_units_missing_from_one_rater(self, runner, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        header = "document,reference,label\n"
        a.write_text(header + "d,0,yes\nd,1,yes\nd,2,no\nd,3,no\nd,9,yes\n")
        b.write_text(header + "d,0,yes\nd,1,yes\nd,2,no\nd,3,yes\nd,8,no\n")
        result = invoke(runner, ["code", "alpha", "--a", str(a), "--b", str(b)])
        assert float(result.output) == pytest.approx(float(Fraction(8, 15)), abs=1e-12)


class TestPipelineCommand:
    def test_run_with_config_path(self, runner, tmp_path):
        write_table(export_table(small_corpus()), tmp_path / "corpus.csv")
        (tmp_path / "run.toml").write_text(
            'seed = 3\n[corpus]\ninput = "corpus.csv"\n[heatmap]\nmode = "count"\n'
        )
        result = invoke(runner, [
            "pipeline", "run", str(tmp_path / "run.toml"), "--out", str(tmp_path / "out"),
        ])
        assert "stages corpus, heatmap" in result.output
        assert (tmp_path / "out" / "manifest.json").exists()

    def test_missing_config_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(cli, [
            "pipeline", "run", str(tmp_path / "nope.toml"), "--out", str(tmp_path / "o"),
        ])
        assert result.exit_code == 2


class TestExitCodes:
    """The installed entry point's error contract, via real subprocesses."""

    def run_cli(self, *args):
        return subprocess.run(
            [sys.executable, "-m", "fieldscale.cli", *args],
            capture_output=True, text=True,
        )

    def test_unknown_command_exits_2(self):
        proc = self.run_cli("frobnicate")
        assert proc.returncode == 2
        assert "Usage" in proc.stderr or "Usage" in proc.stdout

    def test_unknown_flag_exits_2(self):
        proc = self.run_cli("ingest", "--granularity", "paragraph", "--frob", "x")
        assert proc.returncode == 2

    def test_domain_error_exits_1_with_single_line_class(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("not,the,expected,header\n1,2,3,4\n")
        proc = self.run_cli(
            "topics", "fit", "--in", str(bad), "--k", "2", "--out", str(tmp_path / "o")
        )
        assert proc.returncode == 1
        lines = [l for l in proc.stderr.strip().splitlines() if l]
        assert len(lines) == 1
        assert lines[0].startswith("SchemaError: ")

    def test_demo_config_resolves_from_package_data(self, tmp_path):
        proc = self.run_cli("pipeline", "run", "demo.toml", "--out", str(tmp_path / "demo"))
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "demo" / "manifest.json").exists()
        assert (tmp_path / "demo" / "review" / "water access" / "queue.json").exists()
