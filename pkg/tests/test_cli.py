import csv

import pytest

from hypa.cli import main


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_score_toy(toy_path, tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["score", "-k", "2", str(toy_path), "-o", str(out)]) == 0
    rows = _rows(out)
    assert len(rows) == 4
    assert {r["label"] for r in rows} == {"normal"}


def test_score_with_alpha_labels(toy_path, capsys):
    assert main(["score", "-k", "2", "--alpha", "0.1", str(toy_path)]) == 0
    text = capsys.readouterr().out
    assert "over" in text and "under" in text


def test_missing_file_is_usage_error(tmp_path, capsys):
    assert main(["score", "-k", "2", str(tmp_path / "nope.ngram")]) == 2
    assert "error" in capsys.readouterr().err


def test_bad_arguments_exit_2(toy_path, capsys):
    assert main(["score", str(toy_path)]) == 2
    assert main(["frobnicate"]) == 2


def test_parse_error_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.ngram"
    bad.write_text("A,B,0\n")
    assert main(["score", "-k", "1", str(bad)]) == 2
    assert "line 1" in capsys.readouterr().err


def test_computation_error_exit_1(toy_path, capsys):
    # the toy corpus has no paths of length 3
    assert main(["score", "-k", "3", str(toy_path)]) == 1


def test_detect_only_anomalies(toy_path, capsys):
    assert main(["detect", "-k", "2", "--alpha", "0.1", str(toy_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 5 and all(l.endswith(("over", "under")) for l in lines[1:])


def test_fbad(toy_path, capsys):
    assert main(["fbad", "-k", "2", str(toy_path)]) == 0
    assert capsys.readouterr().out.startswith("source,target,frequency,xi,zscore,label")


def test_export_under_dot(toy_path, capsys):
    assert main(["export", "-k", "2", "--alpha", "0.1", "--filter", "under", "--format", "dot", str(toy_path)]) == 0
    dot = capsys.readouterr().out
    assert dot.startswith("digraph")
    assert '"B|X" -> "X|C"' in dot and '"A|X" -> "X|D"' in dot
    assert '"A|X" -> "X|C"' not in dot and 'label="over"' not in dot


def test_export_csv(toy_path, capsys):
    assert main(["export", "-k", "2", "--alpha", "0.1", "--filter", "over", "--format", "csv", str(toy_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "source,target,frequency" and len(lines) == 3


def test_synth_is_deterministic(tmp_path):
    args = ["synth", "-n", "50", "-p", "0.05", "-f", "0.2", "-l", "3", "--walks", "500", "--len", "10",
            "--seed", "7"]
    a, b = tmp_path / "a.ngram", tmp_path / "b.ngram"
    assert main(args + ["-o", str(a)]) == 0
    assert main(args + ["-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.ngram.anomalous").read_bytes() == (tmp_path / "b.ngram.anomalous").read_bytes()
    assert main(args[:-1] + ["8", "-o", str(b)]) == 0
    assert a.read_bytes() != b.read_bytes()


def test_groundtruth(toy_path, tmp_path):
    out = tmp_path / "gt.csv"
    assert main(["groundtruth", "-k", "2", "--samples", "4", "--seed", "1", str(toy_path), "-o", str(out)]) == 0
    assert list(_rows(out)[0]) == ["source", "target", "frequency", "cdf", "label"]


def test_eval_writes_summary(tmp_path):
    out, runs = tmp_path / "sum.csv", tmp_path / "runs.csv"
    args = ["eval", "--protocol", "fig3", "--l-range", "2", "--k-range", "1-2", "--reps", "2", "--walks", "300",
            "-o", str(out), "--runs", str(runs)]
    assert main(args) == 0
    rows = _rows(out)
    assert list(rows[0]) == ["l", "k", "method", "mean_auc", "stderr"] and len(rows) == 4
    assert len(_rows(runs)) == 8
    first = out.read_bytes()
    assert main(args) == 0
    assert out.read_bytes() == first


def test_eval_unknown_protocol(capsys):
    assert main(["eval", "--protocol", "fig9"]) == 2


def test_bench_columns(toy_path, capsys):
    assert main(["bench", "-k", "1,2", "--fractions", "0.5,1", "--reps", "2", str(toy_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "k,n_paths,N,mean_seconds,std_seconds"
    assert len(lines) == 5


def test_config_file_supplies_options(toy_path, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nk = 2\nalpha = 0.1\n")
    assert main(["detect", "--config", str(cfg), str(toy_path)]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 5
    # explicit flags win over the file
    assert main(["detect", "--config", str(cfg), "--alpha", "0.001", str(toy_path)]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 2


def test_bad_config_value(toy_path, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("k = two\n")
    assert main(["score", "--config", str(cfg), str(toy_path)]) == 2


def test_threads_from_environment(monkeypatch):
    from hypa.cli import _threads, build_parser
    args = build_parser().parse_args(["eval"])
    monkeypatch.setenv("HYPA_THREADS", "3")
    assert _threads(args) == 3
    args.threads = 2
    assert _threads(args) == 2
    monkeypatch.setenv("HYPA_THREADS", "x")
    args.threads = None
    with pytest.raises(Exception):
        _threads(args)


def test_motifs(toy_path, capsys):
    assert main(["motifs", "-k", "2", "--alpha", "0.01", str(toy_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "motif,over,under" and lines[1].startswith("ABC,")
