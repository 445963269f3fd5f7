import json
from pathlib import Path

import numpy as np
import pytest

from clbench import codec
from clbench.cli import main


def run(*argv):
    return main(list(argv))


def synth_corpus(out: Path, frames=12, layout="straight", seed=7, num_lanes=1, images=False):
    args = [
        "synth", "--out", str(out), "--seed", str(seed), "--layout", layout,
        "--frames", str(frames), "--num-lanes", str(num_lanes),
    ]
    if not images:
        args.append("--no-images")
    assert run(*args) == 0


def label_corpus(corpus: Path, out: Path, *extra):
    assert run(
        "label",
        "--map", str(corpus / "map.json"),
        "--poses", str(corpus / "poses.ndjson"),
        "--calib", str(corpus / "calibration.json"),
        "--frames", str(corpus / "frames.ndjson"),
        "--out", str(out),
        *extra,
    ) == 0


def tree_bytes(root: Path) -> dict:
    return {
        str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()
    }


class TestPipeline:
    def test_synth_label_self_eval_perfect(self, tmp_path, capsys):
        corpus = tmp_path / "corpus"
        labels = tmp_path / "labels"
        synth_corpus(corpus)
        label_corpus(corpus, labels)
        assert run(
            "eval", "--gt", str(labels), "--pred", str(labels),
            "--frame-stride", "1", "--out", str(tmp_path / "report.json"),
        ) == 0
        report = codec.load_report(tmp_path / "report.json")
        for w in report.windows:
            assert (w.precision, w.recall, w.f1) == (1.0, 1.0, 1.0)
        assert report.avg_depth_error == 0.0

    def test_label_stride_arithmetic(self, tmp_path):
        corpus = tmp_path / "corpus"
        synth_corpus(corpus, frames=130)
        labels = tmp_path / "labels"
        label_corpus(corpus, labels, "--frame-stride", "10")
        assert len(list(labels.glob("*.json"))) == 13

    def test_decode_then_eval_from_tensors(self, tmp_path):
        corpus = tmp_path / "corpus"
        labels = tmp_path / "labels"
        synth_corpus(corpus)
        label_corpus(corpus, labels)
        # build prediction tensors straight from a label file (perfect preds)
        pred_dir = tmp_path / "pred"
        for path in labels.glob("*.json"):
            grid = codec.load_label(path)
            f, o, z = grid.target_grids()
            codec.save_prediction_frame(
                pred_dir, grid.frame_id, grid.camera_id,
                f.astype(np.float32), o.astype(np.float32), z.astype(np.float32),
            )
        decoded = tmp_path / "decoded"
        assert run(
            "decode", "--pred", str(pred_dir), "--calib", str(corpus / "calibration.json"),
            "--out", str(decoded),
        ) == 0
        assert len(list(decoded.glob("*.json"))) == len(list(labels.glob("*.json")))
        # tensors evaluated directly
        assert run(
            "eval", "--gt", str(labels), "--pred", str(pred_dir),
            "--calib", str(corpus / "calibration.json"),
            "--frame-stride", "1", "--out", str(tmp_path / "r1.json"),
        ) == 0
        r1 = codec.load_report(tmp_path / "r1.json")
        assert all(w.f1 == 1.0 for w in r1.windows)
        # decoded keypoint files evaluated the same way
        assert run(
            "eval", "--gt", str(labels), "--pred", str(decoded),
            "--frame-stride", "1", "--out", str(tmp_path / "r2.json"),
        ) == 0
        r2 = codec.load_report(tmp_path / "r2.json")
        assert all(w.f1 == 1.0 for w in r2.windows)

    def test_eval_grid_mismatch_exit_code(self, tmp_path, capsys):
        corpus = tmp_path / "corpus"
        labels16 = tmp_path / "labels16"
        labels32 = tmp_path / "labels32"
        synth_corpus(corpus)
        label_corpus(corpus, labels32)
        # relabel on a coarser grid via config flags
        assert run(
            "label",
            "--map", str(corpus / "map.json"),
            "--poses", str(corpus / "poses.ndjson"),
            "--calib", str(corpus / "calibration.json"),
            "--frames", str(corpus / "frames.ndjson"),
            "--out", str(labels16),
            "--h1", "16", "--w1", "32", "--s", "16",
        ) == 0
        code = run("eval", "--gt", str(labels32), "--pred", str(labels16), "--frame-stride", "1")
        assert code == 1
        assert "GridMismatch" in capsys.readouterr().err

    def test_label_without_frames_manifest_uses_poses(self, tmp_path):
        corpus = tmp_path / "corpus"
        synth_corpus(corpus, frames=4)
        out = tmp_path / "labels"
        assert run(
            "label",
            "--map", str(corpus / "map.json"),
            "--poses", str(corpus / "poses.ndjson"),
            "--calib", str(corpus / "calibration.json"),
            "--out", str(out),
        ) == 0
        track = codec.load_pose_track(corpus / "poses.ndjson")
        assert len(list(out.glob("*.json"))) == len(track)
        grid = codec.load_label(out / "000000_cam_front.json")
        assert grid.timestamp_ns == track[0].timestamp_ns

    def test_usage_error_exit_code(self):
        with pytest.raises(SystemExit) as exc:
            run("eval")  # missing required flags
        assert exc.value.code == 2

    def test_losses_check_output(self, tmp_path, capsys):
        corpus = tmp_path / "corpus"
        labels = tmp_path / "labels"
        synth_corpus(corpus, frames=3)
        label_corpus(corpus, labels)
        label_path = next(iter(sorted(labels.glob("*.json"))))
        grid = codec.load_label(label_path)
        f, o, z = grid.target_grids()
        pred_dir = tmp_path / "pred"
        manifest = codec.save_prediction_frame(
            pred_dir, grid.frame_id, grid.camera_id,
            f.astype(np.float32), o.astype(np.float32), z.astype(np.float32),
        )
        capsys.readouterr()  # drop synth/label progress lines
        assert run("losses-check", "--label", str(label_path), "--pred", str(manifest)) == 0
        doc = json.loads(capsys.readouterr().out)
        assert set(doc) == {"l_conf", "l_offset", "l_depth", "l_total"}
        # predictions are the f32-quantized targets, so losses are ~0
        assert doc["l_conf"] == 0
        assert doc["l_total"] < 1e-9

    def test_config_file_with_flag_override(self, tmp_path):
        corpus = tmp_path / "corpus"
        synth_corpus(corpus, frames=3)
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"label": {"h1": 16, "w1": 32, "s": 16}}))
        # config file alone selects the coarse grid
        out_file = tmp_path / "labels_file"
        label_corpus(corpus, out_file, "--config", str(cfg_path))
        grid = codec.load_label(next(iter(sorted(out_file.glob("*.json")))))
        assert (grid.config.h1, grid.config.w1, grid.config.s) == (16, 32, 16)
        # explicit flags win over the config file
        out_flags = tmp_path / "labels_flags"
        label_corpus(corpus, out_flags, "--config", str(cfg_path),
                     "--h1", "32", "--w1", "64", "--s", "8")
        grid = codec.load_label(next(iter(sorted(out_flags.glob("*.json")))))
        assert (grid.config.h1, grid.config.w1, grid.config.s) == (32, 64, 8)


class TestDeterminism:
    def test_workers_do_not_change_outputs(self, tmp_path):
        trees = []
        for k, workers in enumerate((1, 8)):
            corpus = tmp_path / f"c{k}"
            labels = tmp_path / f"l{k}"
            assert run(
                "synth", "--out", str(corpus), "--seed", "5", "--layout", "curve",
                "--frames", "10", "--workers", str(workers),
            ) == 0
            label_corpus(corpus, labels, "--workers", str(workers))
            assert run(
                "eval", "--gt", str(labels), "--pred", str(labels),
                "--frame-stride", "1", "--out", str(tmp_path / f"r{k}.json"),
            ) == 0
            trees.append(
                (tree_bytes(corpus), tree_bytes(labels), (tmp_path / f"r{k}.json").read_bytes())
            )
        assert trees[0] == trees[1]

    def test_repeat_run_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            synth_corpus(out / "corpus", frames=6, layout="grid_with_intersections", images=True)
            label_corpus(out / "corpus", out / "labels")
        assert tree_bytes(a) == tree_bytes(b)

    def test_env_var_worker_default(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CLINET_BENCH_WORKERS", "3")
        from clbench.cli import build_parser

        args = build_parser().parse_args(["synth", "--out", str(tmp_path)])
        assert args.workers == 3


class TestInspect:
    def test_inspect_all_artifacts(self, tmp_path, capsys):
        corpus = tmp_path / "corpus"
        labels = tmp_path / "labels"
        synth_corpus(corpus, frames=3, images=True)
        label_corpus(corpus, labels)
        label_path = next(iter(sorted(labels.glob("*.json"))))
        grid = codec.load_label(label_path)
        f, o, z = grid.target_grids()
        manifest = codec.save_prediction_frame(
            tmp_path / "pred", grid.frame_id, grid.camera_id,
            f.astype(np.float32), o.astype(np.float32), z.astype(np.float32),
        )
        assert run(
            "eval", "--gt", str(labels), "--pred", str(labels), "--frame-stride", "1",
            "--out", str(tmp_path / "report.json"),
        ) == 0
        capsys.readouterr()
        targets = [
            corpus / "map.json",
            corpus / "poses.ndjson",
            corpus / "frames.ndjson",
            corpus / "calibration.json",
            label_path,
            manifest,
            tmp_path / "pred" / f"{grid.frame_id}_{grid.camera_id}.conf.cltn",
            tmp_path / "report.json",
            next(iter(sorted((corpus / "images").glob("*.png")))),
        ]
        for target in targets:
            assert run("inspect", str(target)) == 0, target
            out = capsys.readouterr().out
            assert out.strip()

    def test_inspect_unknown_artifact(self, tmp_path):
        p = tmp_path / "junk.bin"
        p.write_bytes(b"\x01\x02\x03")
        assert run("inspect", str(p)) == 1
