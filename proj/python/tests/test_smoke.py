import json
import os
import subprocess
from pathlib import Path

import numpy as np
import pytest

import posegen

FIXTURES = Path(os.environ.get("POSEGEN_FIXTURES_DIR", Path(__file__).parents[2] / "tests" / "fixtures"))


def test_joint_names():
    names = posegen.joint_names()
    assert len(names) == 18
    assert names[0] == "nose"


def test_load_keypoints_shape():
    pts, frame = posegen.load_keypoints(FIXTURES / "canonical_standing.keypoints.json")
    assert pts.shape == (18, 3)
    assert frame[0] > 0 and frame[1] > 0


def test_rasterize_matches_golden():
    from PIL import Image

    out = posegen.rasterize(FIXTURES / "raised_arm.keypoints.json", 128, 96)
    golden = np.asarray(Image.open(FIXTURES / "raised_arm_128x96.png").convert("RGB"))
    assert out.shape == (128, 96, 3)
    assert np.array_equal(np.rint(out * 255).astype(np.uint8), golden)


def test_bad_keypoints_raise_value_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"version": 1, "frame_size": [8, 8], "keypoints": [[0, 0, 1]] * 17}))
    with pytest.raises(ValueError):
        posegen.load_keypoints(bad)


def test_ssim_and_inception_score():
    rng = np.random.default_rng(0)
    a = rng.random((32, 32, 3), dtype=np.float32)
    assert posegen.ssim(a, a) == pytest.approx(1.0)
    assert posegen.inception_score(np.full((20, 4), 0.25), 2)[0] == pytest.approx(1.0)
    assert posegen.inception_score(np.eye(5), 1)[0] == pytest.approx(5.0)


def test_microdataset_and_evaluate(tmp_path):
    posegen.make_microdataset(tmp_path / "d", skus=2, items_per_sku=2, height=32, width=32, seed=1)
    sku = tmp_path / "d" / "train" / "sku_000"
    assert len(list(sku.glob("*.png"))) == 2
    report = posegen.evaluate(sku, sku, n_splits=1, label="same")
    assert report["ssim_mean"] == pytest.approx(1.0)
    assert report["label"] == "same"
    assert report["is_comparable"] is False


@pytest.mark.skipif("POSEGEN_CLI" not in os.environ, reason="needs the posegen executable")
def test_checkpoint_loads_in_torch_and_synthesizes(tmp_path):
    torch = pytest.importorskip("torch")
    data = tmp_path / "d"
    posegen.make_microdataset(data, skus=2, items_per_sku=2, height=32, width=32, seed=2)
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "\n".join(
            [
                "generator.base_channels = 8",
                "generator.n_res_blocks = 1",
                "generator.lstm_hidden_channels = 16",
                "generator.image_height = 32",
                "generator.image_width = 32",
                "generator.mode = single",
                "disc.base_channels = 8",
                "perceptual.base_channels = 4",
                f"data.root = {data}",
                f"train.output_dir = {tmp_path / 'run'}",
                "train.epochs = 1",
                "train.checkpoint_every = 1",
            ]
        )
    )
    env = dict(os.environ, POSEGEN_NUM_WORKERS="0")
    subprocess.run([os.environ["POSEGEN_CLI"], "train", "--config", str(cfg)], check=True, env=env,
                   capture_output=True)
    ckpt = tmp_path / "run" / "epoch_0001.ckpt"

    from torch.jit._pickle import restore_type_tag

    with torch.serialization.safe_globals([restore_type_tag]):
        state = torch.load(ckpt, weights_only=True)
    assert isinstance(state, dict)
    assert any(isinstance(v, torch.Tensor) for v in state.values())
    assert "config" in state

    sku = data / "train" / "sku_000"
    img = posegen.synthesize(ckpt, [sku / "item_0.png"], sku / "item_1.keypoints.json")
    assert img.shape == (32, 32, 3)
    assert img.min() >= 0.0 and img.max() <= 1.0
    with pytest.raises(ValueError):
        posegen.synthesize(ckpt, [sku / "item_0.png", sku / "item_1.png"], sku / "item_1.keypoints.json")
