import json

import pytest
from click.testing import CliRunner

from skgrec.cli import main
from skgrec.embedding import load_vectors
from skgrec.graph import load_graph, save_graph
from skgrec.ranking import WeightProfile

from corpus_builders import topic_graph

DOC_DIM = 8
ENTITY_DIM = 16


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def workspace(tmp_path_factory, runner):
    """corpus.json + embedded vector stores + judgments + uniform profile."""
    root = tmp_path_factory.mktemp("ws")
    g, judgments = topic_graph(n_topics=3, per_topic=5)

    corpus = root / "corpus.json"
    save_graph(g, str(corpus))

    vec_dir = root / "vectors"
    res = runner.invoke(main, [
        "embed", "--corpus", str(corpus), "--doc-dim", str(DOC_DIM),
        "--entity-dim", str(ENTITY_DIM), "--seed", "0", "--out", str(vec_dir),
    ])
    assert res.exit_code == 0, res.output

    judg = root / "judgments.jsonl"
    with open(judg, "w") as fh:
        for qid in sorted(judgments):
            fh.write(json.dumps(
                {"query_id": qid, "relevant": sorted(judgments[qid])}) + "\n")

    profile = root / "profile.json"
    profile.write_text(json.dumps(WeightProfile.uniform().to_dict()))

    return {
        "root": root,
        "corpus": str(corpus),
        "doc": str(vec_dir / "doc.evec"),
        "entity": str(vec_dir / "entity.evec"),
        "judgments": str(judg),
        "profile": str(profile),
    }


def ws_args(ws):
    return [
        "--graph", ws["corpus"],
        "--doc-vectors", ws["doc"],
        "--entity-vectors", ws["entity"],
        "--entity-dim", str(ENTITY_DIM),
    ]


class TestBuild:
    def test_round_trip(self, runner, workspace, tmp_path):
        out = tmp_path / "graph.json"
        res = runner.invoke(main, [
            "build", "--corpus", workspace["corpus"], "--out", str(out),
        ])
        assert res.exit_code == 0, res.output
        stats = json.loads(res.output.strip().splitlines()[-1])
        assert stats["before"]["papers"] == 15
        g = load_graph(str(out))
        assert g.stats() == stats["after"]

    def test_sentence_induction_adds_edges(self, runner, tmp_path):
        corpus = tmp_path / "c.json"
        corpus.write_text(json.dumps({
            "papers": [{"paper_id": "p1", "title": "t", "abstract": "a"}],
            "entities": [
                {"entity_id": "e_t", "name": "segmentation", "top_type": "Task"},
                {"entity_id": "e_m", "name": "unet", "top_type": "Method"},
            ],
            "data": {"nodes": [], "links": [
                {"source": "p1", "target": "e_t", "relation": "mentions"},
                {"source": "p1", "target": "e_m", "relation": "mentions"},
            ], "categories": []},
        }))
        sentences = tmp_path / "s.jsonl"
        sentences.write_text(json.dumps({
            "tokens": [
                {"index": 0, "surface": "segmentation", "lemma": "segmentation"},
                {"index": 1, "surface": "uses", "lemma": "use"},
                {"index": 2, "surface": "unet", "lemma": "unet"},
            ],
            "arcs": [
                {"head_index": 1, "dependent_index": 0, "label": "nsubj"},
                {"head_index": -1, "dependent_index": 1, "label": "root"},
                {"head_index": 1, "dependent_index": 2, "label": "dobj"},
            ],
            "mentions": [
                {"entity_id": "e_t", "top_type": "Task", "token_span": [0, 1]},
                {"entity_id": "e_m", "top_type": "Method", "token_span": [2, 3]},
            ],
        }) + "\n")
        out = tmp_path / "g.json"
        res = runner.invoke(main, [
            "build", "--corpus", str(corpus), "--sentences", str(sentences),
            "--out", str(out),
        ])
        assert res.exit_code == 0, res.output
        stats = json.loads(res.output.strip().splitlines()[-1])
        assert stats["after"]["achievedBy"] == stats["before"]["achievedBy"] + 1

    def test_integrity_failure_exits_2(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({
            "papers": [{"paper_id": "p1", "title": "t"}],
            "entities": [],
            "data": {"nodes": [], "links": [
                {"source": "p1", "target": "ghost", "relation": "cites"}
            ], "categories": []},
        }))
        res = runner.invoke(main, [
            "build", "--corpus", str(bad), "--out", str(tmp_path / "o.json"),
        ])
        assert res.exit_code == 2

    def test_malformed_json_exits_2(self, runner, tmp_path):
        bad = tmp_path / "broken.json"
        bad.write_text("{not json")
        res = runner.invoke(main, [
            "build", "--corpus", str(bad), "--out", str(tmp_path / "o.json"),
        ])
        assert res.exit_code == 2


class TestEmbed:
    def test_stores_load_with_right_dims(self, workspace):
        docs = load_vectors(workspace["doc"])
        ents = load_vectors(workspace["entity"])
        assert len(docs) == 15
        assert all(v.shape == (DOC_DIM,) for v in docs.values())
        assert all(v.shape == (ENTITY_DIM,) for v in ents.values())

    def test_byte_identical_across_runs(self, runner, workspace, tmp_path):
        out2 = tmp_path / "v2"
        res = runner.invoke(main, [
            "embed", "--corpus", workspace["corpus"], "--doc-dim", str(DOC_DIM),
            "--entity-dim", str(ENTITY_DIM), "--seed", "0", "--out", str(out2),
        ])
        assert res.exit_code == 0
        with open(workspace["doc"], "rb") as fh:
            first = fh.read()
        assert (out2 / "doc.evec").read_bytes() == first

    def test_seed_changes_vectors(self, runner, workspace, tmp_path):
        out2 = tmp_path / "v3"
        res = runner.invoke(main, [
            "embed", "--corpus", workspace["corpus"], "--doc-dim", str(DOC_DIM),
            "--entity-dim", str(ENTITY_DIM), "--seed", "7", "--out", str(out2),
        ])
        assert res.exit_code == 0
        with open(workspace["doc"], "rb") as fh:
            first = fh.read()
        assert (out2 / "doc.evec").read_bytes() != first


class TestRecommend:
    def test_writes_ranked_list(self, runner, workspace, tmp_path):
        out = tmp_path / "rec.json"
        res = runner.invoke(main, ["recommend"] + ws_args(workspace) + [
            "--query", "t0_0", "-k", "10", "-n", "5",
            "--profile", workspace["profile"], "--out", str(out),
        ])
        assert res.exit_code == 0, res.output
        doc = json.loads(out.read_text())
        assert doc["query_id"] == "t0_0"
        assert len(doc["items"]) == 5
        scores = [it["coarse_score"] for it in doc["items"]]
        assert scores == sorted(scores, reverse=True)
        assert "t0_0" not in [it["paper_id"] for it in doc["items"]]

    def test_refined_mode(self, runner, workspace, tmp_path):
        out = tmp_path / "rec.json"
        res = runner.invoke(main, ["recommend"] + ws_args(workspace) + [
            "--query", "t1_0", "-k", "10", "-n", "5", "--mode", "refined",
            "--out", str(out),
        ])
        assert res.exit_code == 0, res.output
        doc = json.loads(out.read_text())
        assert doc["mode"] == "refined"
        assert any(it["refined_score"] is not None for it in doc["items"])

    def test_byte_identical_output(self, runner, workspace, tmp_path):
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            res = runner.invoke(main, ["recommend"] + ws_args(workspace) + [
                "--query", "t0_1", "-k", "12", "-n", "6", "--out", str(out),
            ])
            assert res.exit_code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_unknown_query_exits_2(self, runner, workspace, tmp_path):
        res = runner.invoke(main, ["recommend"] + ws_args(workspace) + [
            "--query", "nope", "--out", str(tmp_path / "x.json"),
        ])
        assert res.exit_code == 2

    def test_n_above_k_exits_1(self, runner, workspace, tmp_path):
        res = runner.invoke(main, ["recommend"] + ws_args(workspace) + [
            "--query", "t0_0", "-k", "5", "-n", "10",
            "--out", str(tmp_path / "x.json"),
        ])
        assert res.exit_code == 1


class TestLearn:
    def test_learn_writes_profile(self, runner, workspace, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "coarse_step": 0.5, "fine_step": 0.1, "patience": 1,
            "seeds": [0, 1], "eval_k": 5, "subsample_fraction": 1.0,
        }))
        out = tmp_path / "learned.json"
        res = runner.invoke(main, ["learn"] + ws_args(workspace) + [
            "--judgments", workspace["judgments"], "--config", str(cfg),
            "-k", "12", "--out", str(out),
        ])
        assert res.exit_code == 0, res.output
        doc = json.loads(out.read_text())
        assert len(doc["runs"]) == 2
        assert sum(doc["w"]) == pytest.approx(1.0, abs=1e-9)
        assert sum(doc["alpha"]) == pytest.approx(1.0, abs=1e-9)
        assert doc["config_hash"]
        # the planted corpus separates topics on the task view
        assert doc["w"][1] == max(doc["w"])

    def test_bad_config_exits_1(self, runner, workspace, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"objective": "nope"}))
        res = runner.invoke(main, ["learn"] + ws_args(workspace) + [
            "--judgments", workspace["judgments"], "--config", str(cfg),
            "--out", str(tmp_path / "o.json"),
        ])
        assert res.exit_code == 1


class TestEval:
    def test_writes_json_and_csv(self, runner, workspace, tmp_path):
        out = tmp_path / "report"
        res = runner.invoke(main, ["eval"] + ws_args(workspace) + [
            "--judgments", workspace["judgments"],
            "--profile", workspace["profile"],
            "-k", "12", "--eval-k", "5", "--out", str(out),
        ])
        assert res.exit_code == 0, res.output
        doc = json.loads((tmp_path / "report.json").read_text())
        metrics = {r["metric"] for r in doc["rows"]}
        assert {"map", "ndcg", "ild", "coverage"} <= metrics
        csv_text = (tmp_path / "report.csv").read_text()
        assert csv_text.startswith("metric,k,mode,seed,value")

    def test_deterministic(self, runner, workspace, tmp_path):
        blobs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            res = runner.invoke(main, ["eval"] + ws_args(workspace) + [
                "--judgments", workspace["judgments"],
                "--profile", workspace["profile"],
                "-k", "12", "--eval-k", "5", "--seed", "0", "--seed", "1",
                "--out", str(out),
            ])
            assert res.exit_code == 0, res.output
            blobs.append((tmp_path / f"{name}.json").read_bytes())
        assert blobs[0] == blobs[1]


class TestAblate:
    def test_modes_and_deltas(self, runner, workspace, tmp_path):
        out = tmp_path / "abl"
        res = runner.invoke(main, ["ablate"] + ws_args(workspace) + [
            "--judgments", workspace["judgments"],
            "--profile", workspace["profile"],
            "--mode", "drop-view:t", "--mode", "retain-fraction:0.5",
            "-k", "12", "--eval-k", "5", "--out", str(out),
        ])
        assert res.exit_code == 0, res.output
        doc = json.loads((tmp_path / "abl.json").read_text())
        modes = {r["mode"] for r in doc["rows"]}
        assert modes == {"full", "drop-view:t", "retain-fraction:0.5"}
        for r in doc["rows"]:
            if r["mode"] == "full":
                assert r["delta"] == 0.0

    def test_bad_mode_exits_1(self, runner, workspace, tmp_path):
        res = runner.invoke(main, ["ablate"] + ws_args(workspace) + [
            "--judgments", workspace["judgments"],
            "--profile", workspace["profile"],
            "--mode", "bogus", "--out", str(tmp_path / "x"),
        ])
        assert res.exit_code == 1


class TestSensitivity:
    def test_row_count_and_determinism(self, runner, workspace, tmp_path):
        blobs = []
        for name in ("s1.json", "s2.json"):
            out = tmp_path / name
            res = runner.invoke(main, ["sensitivity"] + ws_args(workspace) + [
                "--judgments", workspace["judgments"],
                "--profile", workspace["profile"],
                "--delta", "-0.1", "--delta", "0.1",
                "-k", "12", "--eval-k", "5", "--out", str(out),
            ])
            assert res.exit_code == 0, res.output
            blobs.append(out.read_bytes())
        doc = json.loads(blobs[0])
        assert len(doc["rows"]) == 2 * 4 * 2
        assert blobs[0] == blobs[1]


class TestHelp:
    def test_subcommands_listed(self, runner):
        res = runner.invoke(main, ["--help"])
        assert res.exit_code == 0
        for cmd in ("build", "embed", "recommend", "learn", "eval",
                    "ablate", "sensitivity", "serve"):
            assert cmd in res.output

    def test_version(self, runner):
        res = runner.invoke(main, ["--version"])
        assert res.exit_code == 0
