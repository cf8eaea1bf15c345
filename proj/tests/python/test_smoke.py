import math

import numpy as np
import pytest

import promptforge as pf

TINY = """
[data]
num_users = 12
num_items = 20
min_len = 5
max_len = 7
[model]
embed_dim = 8
encoder_layers = 1
decoder_layers = 1
num_heads = 2
ff_dim = 16
[train]
epochs = 1
variants = 1
tasks = sequential
[prompt]
length_sweep = 2
[search]
k = 2
max_epochs = 2
[eval]
repeats = 1
"""


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = out / "run.ini"
    cfg.write_text(TINY)
    pf.synth(cfg, out=out)
    pf.train_backbone(cfg, out=out)
    return cfg, out


def test_pipeline_writes_artifacts(run):
    cfg, out = run
    pf.search(cfg, out=out)
    search_dir = pf.run_dir(cfg, "search", out=out)
    assert (search_dir / "checkpoint.txt").exists()
    first = (search_dir / "search_report.jsonl").read_text()
    assert first.splitlines()[0].startswith('{"record":"run"')
    pf.search(cfg, out=out)
    assert (search_dir / "search_report.jsonl").read_text() == first

    pf.evaluate(cfg, out=out)
    metrics = (pf.run_dir(cfg, "eval", out=out) / "metrics_test.tsv").read_text()
    assert metrics.startswith("prompt\tsplit\tbeam")
    assert "searched\ttest\t20\t1\tHR@5\t" in metrics


def test_model_bindings(run):
    _, out = run
    model = pf.Model.load(out / "backbone.pfw")
    table = model.embedding_table()
    assert table.shape == (model.vocab_size, model.embed_dim)
    ids = [5, 6, 7]
    target = [8, pf.EOS]
    loss = model.loss(ids, target)
    assert math.isfinite(loss) and loss > 0
    (grad,) = model.input_gradients(ids, target, [1])
    assert grad.shape == (model.embed_dim,)
    beams = model.beam_search(ids, beam=4, max_len=2, num_outputs=3)
    assert len(beams) == 3
    assert [lp for _, lp in beams] == sorted((lp for _, lp in beams), reverse=True)


def test_candidate_tokens_match_numpy():
    rng = np.random.default_rng(0)
    table = rng.normal(size=(50, 6))
    grad = rng.normal(size=6)
    got = pf.candidate_tokens(grad, table, 5, {7})
    scores = -(table @ grad)
    order = [t for t in np.argsort(-scores, kind="stable") if t >= 4 and t != 7][:5]
    assert [t for t, _ in got] == order
    assert np.allclose([s for _, s in got], scores[order])


def test_metrics():
    assert pf.ndcg([[1, 2, 3]], [3], 5) == pytest.approx(0.5)
    assert pf.hit_rate([[1, 2, 3], [4]], [3, 9], 3) == 0.5
    assert pf.bleu4([[1, 2, 3, 4, 5]], [[1, 2, 3, 4, 5]]) == pytest.approx(1.0)
    assert pf.rouge([[10, 12, 14]], [[10, 11, 12, 13, 14]], "L") == pytest.approx(0.75)


def test_errors_map_to_python(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[search]\nmax_epochs = 0\n")
    with pytest.raises(pf.ValidationError):
        pf.search(bad, out=tmp_path)
    bad.write_text("[search]\nbogus = 1\n")
    with pytest.raises(pf.ParseError):
        pf.synth(bad, out=tmp_path)
    with pytest.raises(pf.ArgumentError):
        pf.hit_rate([[1]], [1], 0)
