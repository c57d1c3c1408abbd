import json

import pytest

from diurnal.cli import main


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--out-dir", str(d), "--users", "20", "--posts-per-user", "300", "320",
                 "--infrequent", "5", "--surge"]) == 0
    return d


def test_synth_writes_posts_and_labels(corpus):
    assert (corpus / "posts.tsv").read_text().startswith("ts\tuser\tkind")
    assert len((corpus / "labels.tsv").read_text().splitlines()) == 66


def test_ingest_command(corpus, tmp_path, capsys):
    out = tmp_path / "clean.tsv"
    assert main(["ingest", "--posts", str(corpus / "posts.tsv"), "--out", str(out)]) == 0
    counters = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert counters["rejected"] == 0 and out.exists()


def test_cluster_command(corpus, tmp_path):
    assert main(["cluster", "--posts", str(corpus / "posts.tsv"), "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "assignments.csv").read_text().startswith("# config_hash=")


def test_analyze_then_report(corpus, tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('[stats]\nbootstrap_n = 500\n[data]\nspan = ["2020-01-22", "2022-08-01"]\n')
    out = tmp_path / "rep"
    assert main(["analyze", "--config", str(cfg), "--posts", str(corpus / "posts.tsv"),
                 "--out-dir", str(out)]) == 0
    assert (out / "summary.json").exists() and not list(out.glob("*.svg"))
    assert main(["report", str(out)]) == 0
    assert (out / "clockface.svg").exists()


def test_exit_codes(tmp_path):
    assert main(["analyze", "--posts", str(tmp_path / "nope.tsv"), "--out-dir", str(tmp_path)]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("unknown_key = 1\n")
    assert main(["run", "--config", str(bad), "--synthetic"]) == 2
    posts = tmp_path / "few.tsv"
    posts.write_text("ts\tuser\tkind\n" + "".join(f"2020-02-0{d}T10:00:00Z\tu\ttweet\n" for d in range(1, 8)))
    assert main(["analyze", "--posts", str(posts), "--strict", "--out-dir", str(tmp_path / "s")]) == 3
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_run_with_config_keeps_synth_section_and_plots(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('span = ["2020-01-22", "2020-06-30"]\n[stats]\nbootstrap_n = 500\n'
                   '[synth]\nusers_per_population = 12\nposts_per_user = [300, 310]\n')
    out = tmp_path / "rep"
    assert main(["run", "--config", str(cfg), "--synthetic", "--out-dir", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["synth"]["users_per_population"] == 12
    assert list(out.glob("*.svg"))
