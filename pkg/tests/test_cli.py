import json

import numpy as np
import pytest
from PIL import Image as PILImage

from gatesim.cli import main
from gatesim.dataset import read_manifest

from helpers import write_demo_assets


@pytest.fixture(scope="module")
def assets(tmp_path_factory):
    return write_demo_assets(tmp_path_factory.mktemp("assets"), n_backgrounds=3)


def run_generate(assets, out, count=4, seed=3, extra=()):
    return main([
        "generate",
        "--config", str(assets["config"]),
        "--backgrounds", str(assets["backgrounds"]),
        "--poses", str(assets["poses"]),
        "--meshes", str(assets["meshes"]),
        "--count", str(count),
        "--seed", str(seed),
        "--out", str(out),
        *extra,
    ])


class TestGenerate:
    def test_writes_dataset(self, assets, tmp_path, capsys):
        assert run_generate(assets, tmp_path / "ds") == 0
        out = capsys.readouterr().out
        assert "wrote" in out
        manifest = read_manifest(tmp_path / "ds" / "manifest.json")
        assert manifest.sample_count == 4
        images = sorted((tmp_path / "ds" / "images").iterdir())
        assert len(images) == 4
        with PILImage.open(images[0]) as img:
            assert img.size == assets["size"]

    def test_split_writes_train_and_val(self, assets, tmp_path):
        assert run_generate(assets, tmp_path / "ds", extra=["--split", "3:2"]) == 0
        train = read_manifest(tmp_path / "ds" / "train" / "manifest.json")
        val = read_manifest(tmp_path / "ds" / "val" / "manifest.json")
        assert train.sample_count == 3
        assert val.sample_count == 2

    def test_missing_config_field_exits_1(self, assets, tmp_path):
        doc = json.loads(assets["config"].read_text())
        del doc["scene"]["max_gates"]
        broken = tmp_path / "broken.json"
        broken.write_text(json.dumps(doc))
        code = main([
            "generate", "--config", str(broken),
            "--backgrounds", str(assets["backgrounds"]),
            "--poses", str(assets["poses"]),
            "--meshes", str(assets["meshes"]),
            "--out", str(tmp_path / "x"),
        ])
        assert code == 1

    def test_bad_usage_exits_1(self):
        assert main(["generate", "--config"]) == 1

    def test_missing_backgrounds_dir_exits_2(self, assets, tmp_path):
        code = main([
            "generate", "--config", str(assets["config"]),
            "--backgrounds", str(tmp_path / "nowhere"),
            "--poses", str(tmp_path / "nope.csv"),
            "--meshes", str(assets["meshes"]),
            "--out", str(tmp_path / "x"),
        ])
        assert code == 2


class TestCrop:
    def test_crop_round_trip(self, tmp_path, capsys):
        src = tmp_path / "src.png"
        arr = np.full((40, 60, 3), 200, dtype=np.uint8)
        PILImage.fromarray(arr).save(src)
        out = tmp_path / "out.png"
        assert main(["crop", "--image", str(src), "--bbox", "10,5,20,15", "--out", str(out)]) == 0
        with PILImage.open(out) as img:
            result = np.asarray(img)
        assert result.shape == arr.shape
        assert result[10, 20].tolist() == [200, 200, 200]
        assert result[0, 0].tolist() == [0, 0, 0]
        assert result[10:20, 10:30].min() == 200

    def test_bad_bbox_exits_1(self, tmp_path):
        src = tmp_path / "src.png"
        PILImage.fromarray(np.zeros((10, 10, 3), dtype=np.uint8)).save(src)
        assert main(["crop", "--image", str(src), "--bbox", "1,2,3", "--out", str(tmp_path / "o.png")]) == 1


class TestEvaluate:
    def test_perfect_predictions_report(self, assets, tmp_path, capsys):
        assert run_generate(assets, tmp_path / "ds", count=6) == 0
        manifest = read_manifest(tmp_path / "ds" / "manifest.json")
        capsys.readouterr()
        preds = []
        for sample in manifest.samples:
            for ann in sample["annotations"]:
                preds.append({
                    "image_id": sample["id"],
                    "bbox": ann["bbox"],
                    "category_id": ann["category_id"],
                    "score": 0.99,
                    "distance": ann["distance"],
                })
        pred_path = tmp_path / "preds.json"
        pred_path.write_text(json.dumps(preds))
        code = main([
            "evaluate", "--gt", str(tmp_path / "ds" / "manifest.json"),
            "--pred", str(pred_path), "--iou", "0.5,0.75,0.9",
        ])
        out = capsys.readouterr().out
        assert code == 0
        assert "1.000" in out          # perfect AP
        assert "mAP" in out
        assert "0.000" in out          # perfect distances: MAE 0
        assert "IoU threshold" in out

    def test_unreadable_predictions_exits_2(self, assets, tmp_path):
        assert run_generate(assets, tmp_path / "ds2", count=2) == 0
        code = main([
            "evaluate", "--gt", str(tmp_path / "ds2" / "manifest.json"),
            "--pred", str(tmp_path / "missing.json"),
        ])
        assert code == 2


class TestSimulate:
    def test_sweep_writes_report(self, tmp_path, capsys):
        code = main([
            "simulate", "--speeds", "1.0", "--starts", "centre,left",
            "--runs", "2", "--seed", "5", "--out", str(tmp_path / "report"),
            "--pixel-sigma", "0", "--distance-mae", "0",
        ])
        out = capsys.readouterr().out
        assert code == 0
        assert "speed (m/s)" in out
        stats = (tmp_path / "report" / "crossing_stats.csv").read_text().splitlines()
        assert len(stats) == 3  # header + 2 cells
        runs = (tmp_path / "report" / "runs.csv").read_text().splitlines()
        assert len(runs) == 5
        assert (tmp_path / "report" / "trajectories.csv").exists()

    def test_bad_speed_list_exits_1(self, tmp_path):
        assert main(["simulate", "--speeds", "fast", "--out", str(tmp_path / "r")]) == 1
