import csv

import pytest
import yaml

from elicitsim.cli import RESULTS_HEADER, main, parse_config
from elicitsim.errors import ConfigError


@pytest.fixture(scope="module")
def corpus_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    spec = dict(n_users=20, n_target_items=60, n_aux_items=60, density=0.5, seed=2,
                target_out="target.csv", auxiliary_out="aux.csv")
    (d / "spec.yaml").write_text(yaml.safe_dump(spec))
    assert main(["synth", "--spec", str(d / "spec.yaml")]) == 0
    return d


def config(tmp_path, corpus_files, **kw):
    cfg = dict(target_csv=str(corpus_files / "target.csv"),
               auxiliary_csv=str(corpus_files / "aux.csv"),
               scenarios=["single"], strategies=["none"], factor_count=2,
               epochs_per_factor=5, learning_rate=0.01, output_dir=str(tmp_path / "out"))
    cfg.update(kw)
    cfg = {k: v for k, v in cfg.items() if v is not None}
    p = tmp_path / "exp.yaml"
    p.write_text(yaml.safe_dump(cfg))
    return p


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_baseline_only(tmp_path, corpus_files):
    assert main(["run", "--config", str(config(tmp_path, corpus_files))]) == 0
    out = rows(tmp_path / "out" / "results.csv")
    assert tuple(out[0]) == RESULTS_HEADER
    assert out[1:] == [[*out[1][:2], "0", *out[1][3:5], "", ""]]
    assert out[1][:2] == ["single", "none"]
    assert len(out[1][3].split(".")[1]) == 4


def test_row_count_and_table(tmp_path, corpus_files):
    p = config(tmp_path, corpus_files, strategies=["none", "popularity", "entropy0"],
               scenarios=["single", "cross"], max_elicited=2)
    assert main(["run", "--config", str(p)]) == 0
    out = rows(tmp_path / "out" / "results.csv")[1:]
    assert len(out) == 2 * (1 + 2 * 3)
    table = rows(tmp_path / "out" / "table1.csv")
    assert table[0][:4] == ["aggregate", "strategy", "single_mae", "single_mae_improve"]
    assert [r[:2] for r in table[1:4]] == [["final", "popularity"], ["final", "entropy0"],
                                          ["final", "none"]]
    assert table[3][3] == ""
    assert len(table) == 1 + 2 * 3


def test_popularity_rows(tmp_path, corpus_files):
    p = config(tmp_path, corpus_files, strategies=["none", "popularity"], max_elicited=5)
    assert main(["run", "--config", str(p)]) == 0
    assert len(rows(tmp_path / "out" / "results.csv")) == 1 + 1 + 6


def test_byte_identical_rerun(tmp_path, corpus_files):
    p = config(tmp_path, corpus_files, strategies=["lowest-predicted"], max_elicited=1)
    main(["run", "--config", str(p)])
    first = (tmp_path / "out" / "results.csv").read_bytes()
    main(["run", "--config", str(p)])
    assert (tmp_path / "out" / "results.csv").read_bytes() == first


def test_cross_without_auxiliary(tmp_path, corpus_files, capsys):
    p = config(tmp_path, corpus_files, scenarios=["cross"], auxiliary_csv=None)
    assert main(["run", "--config", str(p)]) == 1
    assert "auxiliary_csv" in capsys.readouterr().err


@pytest.mark.parametrize("kw", [dict(strategies=["bogus"]), dict(strategies=[]),
                                dict(learning_rate=-1), dict(nonsense=1), dict(folds=0)])
def test_config_errors(tmp_path, corpus_files, kw):
    assert main(["run", "--config", str(config(tmp_path, corpus_files, **kw))]) == 1


def test_data_error(tmp_path, corpus_files, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("user_id,item_id,rating,domain\nu1,i1,7,target\n")
    p = config(tmp_path, corpus_files, target_csv=str(bad))
    assert main(["run", "--config", str(p)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_relative_paths(tmp_path, corpus_files):
    (corpus_files / "rel.yaml").write_text(yaml.safe_dump(dict(
        target_csv="target.csv", strategies=["none"], seed=3)))
    cfg = parse_config(corpus_files / "rel.yaml")
    assert cfg.target_csv == corpus_files / "target.csv"
    assert cfg.hyperparams.seed == 3 and cfg.folds == 5 and cfg.top_n == 10


def test_parse_rejects_nested(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("target_csv: x.csv\nstrategies: [none]\nhp:\n  a: 1\n")
    with pytest.raises(ConfigError):
        parse_config(p)


def test_synth_deterministic(tmp_path):
    spec = dict(n_users=25, n_target_items=40, n_aux_items=40, density=0.6, seed=9,
                target_out="t.csv", auxiliary_out="a.csv")
    for sub in ("one", "two"):
        (tmp_path / sub).mkdir()
        (tmp_path / sub / "s.yaml").write_text(yaml.safe_dump(spec))
        assert main(["synth", "--spec", str(tmp_path / sub / "s.yaml")]) == 0
    for name in ("t.csv", "a.csv"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()


def test_synth_invalid(tmp_path):
    (tmp_path / "s.yaml").write_text(yaml.safe_dump(dict(
        density=0, target_out="t.csv", auxiliary_out="a.csv")))
    assert main(["synth", "--spec", str(tmp_path / "s.yaml")]) == 1


def test_convert_snap(tmp_path):
    src = tmp_path / "dump.txt"
    src.write_text("product/productId: B1\nreview/userId: A1\nreview/score: 4.0\n\n"
                   "product/productId: B2\nreview/userId: A1\nreview/score: 2.0\n")
    out = tmp_path / "out.csv"
    assert main(["convert-snap", "--in", str(src), "--domain", "auxiliary", "--out", str(out)]) == 0
    assert rows(out) == [["user_id", "item_id", "rating", "domain"],
                         ["A1", "B1", "4", "auxiliary"], ["A1", "B2", "2", "auxiliary"]]


def test_convert_snap_truncated(tmp_path):
    src = tmp_path / "dump.txt"
    src.write_text("product/productId: B1\nreview/score: 4.0\n\n")
    assert main(["convert-snap", "--in", str(src), "--domain", "target",
                 "--out", str(tmp_path / "o.csv")]) == 2
