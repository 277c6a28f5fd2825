import json

import pytest

from tksample.cli import main
from tksample.io import read_clip, serialize_manifest, write_manifest
from tksample.synth import SynthSpec, write_corpus
from tksample.timeline import DECONSTRUCTION, NOMINAL, OPEN

from conftest import make_timeline


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    spec = SynthSpec(seed=2024, failure_probs={OPEN: 0.3, DECONSTRUCTION: 0.3})
    samples = write_corpus(spec, 8, out)
    return out, samples


def _read_jsonl(path):
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


class TestPlan:
    def test_action_subset_one_plan_per_sample(self, corpus, tmp_path, capsys):
        root, samples = corpus
        out = tmp_path / "plans.jsonl"
        rc = main([
            "plan", "--manifest", str(root / "manifest.jsonl"),
            "--strategy", "action-subset", "--frames", "32", "--out", str(out),
        ])
        assert rc == 0
        records = _read_jsonl(out)
        assert len(records) == len(samples)
        assert all(r["n"] == 32 for r in records)
        assert all(r["strategy"] == "action-subset" for r in records)

    def test_single_action_emits_adjusted_labels(self, corpus, tmp_path):
        root, samples = corpus
        out = tmp_path / "plans.jsonl"
        rc = main([
            "plan", "--manifest", str(root / "manifest.jsonl"),
            "--strategy", "single-action",
            "--subset", "MoveDestination,Wait,Place", "--out", str(out),
        ])
        assert rc == 0
        records = _read_jsonl(out)
        assert len(records) == 3 * len(samples)
        assert all("label" in r and "action" in r for r in records)
        by_sample = {}
        for r in records:
            by_sample.setdefault(r["sample_id"], []).append(r)
        for s in samples:
            if s.timeline.label == NOMINAL:
                assert all(
                    r["label"] == NOMINAL for r in by_sample[s.timeline.sample_id]
                )

    def test_invalid_subset_exits_2(self, corpus, tmp_path, capsys):
        root, _ = corpus
        rc = main([
            "plan", "--manifest", str(root / "manifest.jsonl"),
            "--subset", "Grasp,Wait", "--out", str(tmp_path / "x.jsonl"),
        ])
        assert rc == 2
        assert "Grasp" in capsys.readouterr().err

    def test_tta_emits_plan_set(self, corpus, tmp_path):
        root, samples = corpus
        out = tmp_path / "plans.jsonl"
        rc = main([
            "plan", "--manifest", str(root / "manifest.jsonl"),
            "--tta", "--out", str(out),
        ])
        assert rc == 0
        assert len(_read_jsonl(out)) == 4 * len(samples)

    def test_jitter_is_seed_deterministic(self, corpus, tmp_path):
        root, _ = corpus
        a, b, c = (tmp_path / n for n in ("a.jsonl", "b.jsonl", "c.jsonl"))
        base = ["plan", "--manifest", str(root / "manifest.jsonl"), "--jitter"]
        assert main(base + ["--seed", "5", "--out", str(a)]) == 0
        assert main(base + ["--seed", "5", "--out", str(b)]) == 0
        assert main(base + ["--seed", "6", "--out", str(c)]) == 0
        assert a.read_text() == b.read_text()
        assert a.read_text() != c.read_text()

    def test_augment_action(self, corpus, tmp_path):
        root, samples = corpus
        out = tmp_path / "plans.jsonl"
        rc = main([
            "plan", "--manifest", str(root / "manifest.jsonl"),
            "--augment", "action", "--seed", "3", "--out", str(out),
        ])
        assert rc == 0
        records = _read_jsonl(out)
        assert all(r["strategy"] == "variable-rate" for r in records)
        assert all(r["seed"] == 3 for r in records)

    def test_augment_rejected_for_single_action(self, corpus, tmp_path, capsys):
        root, _ = corpus
        rc = main([
            "plan", "--manifest", str(root / "manifest.jsonl"),
            "--strategy", "single-action", "--augment", "action",
            "--out", str(tmp_path / "x.jsonl"),
        ])
        assert rc == 2

    def test_roi_crop_attached(self, corpus, tmp_path):
        root, _ = corpus
        out = tmp_path / "plans.jsonl"
        rc = main([
            "plan", "--manifest", str(root / "manifest.jsonl"),
            "--crop", "roi", "--out", str(out),
        ])
        assert rc == 0
        for r in _read_jsonl(out):
            assert all(e.get("crop") is not None for e in r["entries"])
            assert r["crop_mode"] == "roi"


class TestMaterialize:
    def _plans(self, root, tmp_path, extra=()):
        plans = tmp_path / "plans.jsonl"
        rc = main([
            "plan", "--manifest", str(root / "manifest.jsonl"),
            "--strategy", "action-subset", "--out", str(plans), *extra,
        ])
        assert rc == 0
        return plans

    def test_clip_dimensions_and_determinism(self, corpus, tmp_path):
        root, samples = corpus
        plans = self._plans(root, tmp_path)
        out1, out2 = tmp_path / "clips1", tmp_path / "clips2"
        for out in (out1, out2):
            rc = main([
                "materialize", "--plans", str(plans),
                "--source", str(root / "frames"), "--out-dir", str(out),
                "--size", "64", "--jobs", "2",
            ])
            assert rc == 0
        files1 = sorted(out1.iterdir())
        files2 = sorted(out2.iterdir())
        assert len(files1) == len(samples)
        for f1, f2 in zip(files1, files2):
            assert f1.name == f2.name
            assert f1.read_bytes() == f2.read_bytes()
        clip = read_clip(files1[0])
        assert clip.data.shape == (32, 64, 64, 3)
        assert clip.provenance["plan"]["strategy"] == "action-subset"

    def test_missing_frames_fail(self, corpus, tmp_path):
        root, _ = corpus
        plans = self._plans(root, tmp_path)
        rc = main([
            "materialize", "--plans", str(plans),
            "--source", str(tmp_path / "nowhere"), "--out-dir", str(tmp_path / "c"),
        ])
        assert rc == 1


class TestEval:
    def test_per_action_aggregation(self, tmp_path, capsys):
        t = make_timeline(sample_id="s1", label=DECONSTRUCTION)
        u = make_timeline(sample_id="s2", label=NOMINAL)
        v = make_timeline(sample_id="s3", label=OPEN)
        manifest = tmp_path / "manifest.jsonl"
        write_manifest(manifest, [t, u, v])
        preds = tmp_path / "preds.jsonl"
        rows = [
            {"sample_id": "s1", "action": "MoveDestination", "label": "open"},
            {"sample_id": "s1", "action": "Wait", "label": "deconstruction"},
            {"sample_id": "s1", "action": "Place", "label": "open"},
            {"sample_id": "s2", "action": "MoveDestination", "label": "nominal"},
            {"sample_id": "s2", "action": "Wait", "label": "nominal"},
            {"sample_id": "s2", "action": "Place", "label": "nominal"},
            {"sample_id": "s3", "action": "MoveDestination", "label": "nominal"},
            {"sample_id": "s3", "action": "Wait", "label": "open"},
            {"sample_id": "s3", "action": "Place", "label": "nominal"},
        ]
        preds.write_text("".join(json.dumps(r) + "\n" for r in rows))
        rc = main(["eval", "--manifest", str(manifest), "--predictions", str(preds)])
        assert rc == 0
        text = capsys.readouterr().out
        assert "recall.deconstruction 1.000000" in text
        assert "f1 1.000000" in text

    def test_tta_mean_logits(self, tmp_path, capsys):
        t = make_timeline(sample_id="s1", label=OPEN)
        manifest = tmp_path / "manifest.jsonl"
        write_manifest(manifest, [t])
        preds = tmp_path / "preds.jsonl"
        # mean = [0.3, 0.4, 0.3] -> open, though two rows alone say nominal
        rows = [
            {"sample_id": "s1", "logits": [0.6, 0.2, 0.2]},
            {"sample_id": "s1", "logits": [0.2, 0.5, 0.3]},
            {"sample_id": "s1", "logits": [0.1, 0.5, 0.4]},
        ]
        preds.write_text("".join(json.dumps(r) + "\n" for r in rows))
        rc = main([
            "eval", "--manifest", str(manifest), "--predictions", str(preds), "--tta",
        ])
        assert rc == 0
        assert "recall.open 1.000000" in capsys.readouterr().out

    def test_missing_predictions_exit_2(self, tmp_path, capsys):
        t = make_timeline(sample_id="s1")
        u = make_timeline(sample_id="s2")
        manifest = tmp_path / "manifest.jsonl"
        write_manifest(manifest, [t, u])
        preds = tmp_path / "preds.jsonl"
        preds.write_text(json.dumps({"sample_id": "s1", "label": "nominal"}) + "\n")
        rc = main(["eval", "--manifest", str(manifest), "--predictions", str(preds)])
        assert rc == 2
        assert "s2" in capsys.readouterr().err

    def test_json_report(self, tmp_path, capsys):
        t = make_timeline(sample_id="s1", label=NOMINAL)
        manifest = tmp_path / "manifest.jsonl"
        write_manifest(manifest, [t])
        preds = tmp_path / "preds.jsonl"
        preds.write_text(json.dumps({"sample_id": "s1", "label": "nominal"}) + "\n")
        out = tmp_path / "report.json"
        rc = main([
            "eval", "--manifest", str(manifest), "--predictions", str(preds),
            "--json", str(out),
        ])
        assert rc == 0
        record = json.loads(out.read_text())
        assert record["total"] == 1
        assert record["classes"] == ["nominal", "open", "deconstruction"]


class TestSynthStats:
    def test_synth_seed_stable(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            rc = main(["synth", "--count", "4", "--seed", "99", "--out-dir", str(out)])
            assert rc == 0
        assert (a / "manifest.jsonl").read_text() == (b / "manifest.jsonl").read_text()
        for fa in sorted((a / "frames").iterdir()):
            fb = b / "frames" / fa.name
            assert fa.read_bytes() == fb.read_bytes()

    def test_stats_totals(self, corpus, capsys):
        root, samples = corpus
        rc = main(["stats", "--manifest", str(root / "manifest.jsonl")])
        assert rc == 0
        out = capsys.readouterr().out
        assert f"records {len(samples)}" in out
        label_counts = {
            line.split()[0].split(".", 1)[1]: int(line.split()[1])
            for line in out.splitlines()
            if line.startswith("label.")
        }
        assert sum(label_counts.values()) == len(samples)

    def test_malformed_manifest_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text(serialize_manifest([make_timeline()]) + "{broken\n")
        rc = main(["stats", "--manifest", str(bad)])
        assert rc == 2
        assert "line 2" in capsys.readouterr().err


class TestHelp:
    def test_plan_help_lists_defaults(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["plan", "--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        assert "default: 32" in text        # frames
        assert "default: 0.75" in text      # majority fraction
        assert "default: 0.25" in text      # window fraction
        assert "default: all" in text       # roi frames
        assert "default: none" in text      # crop / augment
