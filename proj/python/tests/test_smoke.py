# Copyright 2026 The voxtrig Authors
# License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

import csv
import json
import math
import os
from pathlib import Path

import pytest

import voxtrig

TOY = Path(os.environ.get("VOXTRIG_TOY_DIR", Path(__file__).parents[2] / "tests" / "data" / "toy"))
CONFIGS = Path(os.environ.get("VOXTRIG_CONFIG_DIR", Path(__file__).parents[2] / "configs"))


def tone(hz, n=16000, rate=16000):
    return [0.5 * math.sin(2 * math.pi * hz * i / rate) for i in range(n)]


def test_version_and_sampler():
    assert voxtrig.__version__
    assert voxtrig.SAMPLER_ID.startswith("mt19937_64")


def test_pitch_shift_raises_a_tone_by_five_semitones():
    out = voxtrig.pitch_shift(tone(440.0), 16000, 5)
    assert len(out) == 16000
    assert voxtrig.dominant_frequency(out, 16000) == pytest.approx(587.33, rel=0.02)
    assert voxtrig.semitone_factor(12) == 2.0


def test_locator_and_labels():
    assert voxtrig.locate_max_energy([0, 0, 1, 1, 0, 0], 2) == 4
    assert voxtrig.poison_label(9, "all_to_all", num_classes=10) == 0
    assert voxtrig.poison_label(3, "all_to_one", 2, 10) == 2
    assert voxtrig.subset_size(0.01, 23726) == 237


def test_greedy_select_line_fixture():
    ids = ["a", "b", "c", "d"]
    assert voxtrig.greedy_select(ids, [[0.0], [1.0], [5.0], [6.0]], 3) == ["a", "d", "b"]
    with pytest.raises(voxtrig.VoxtrigError):
        voxtrig.greedy_select(ids, [[0.0], [1.0], [5.0], [6.0]], 5)


def test_pbsm_and_wav_round_trip(tmp_path):
    samples, rate = voxtrig.load_wav(TOY / "test" / "test_4_left.wav")
    r = voxtrig.apply_pbsm(samples, rate)
    assert r["tone_rms"] == pytest.approx(0.5 * r["host_rms"])
    voxtrig.save_wav(r["audio"], rate, tmp_path / "o.wav")
    back, _ = voxtrig.load_wav(tmp_path / "o.wav")
    assert voxtrig.snr_db(r["audio"], back) > 60.0
    neutral = voxtrig.convert_voice(samples, rate, warp_alpha=1.0)
    assert voxtrig.snr_db(samples, neutral) > 40.0


def test_dataset_pipeline(tmp_path):
    plan = CONFIGS / "pbsm_toy.json"
    text = voxtrig.build_poisoned_dataset(TOY / "train_manifest.csv", plan, tmp_path / "train", jobs=2)
    rows = list(csv.DictReader(text.splitlines()))
    assert len(rows) == 20
    assert sum(r["subset"] != "benign" for r in rows) == 5

    voxtrig.build_attack_testset(TOY / "test_manifest.csv", plan, tmp_path / "attack")
    with open(tmp_path / "attack" / "manifest.csv") as f:
        attack = list(csv.DictReader(f))
    preds = tmp_path / "preds.csv"
    preds.write_text("sample_id,predicted_label\n" + "".join(f"{r['sample_id']},4\n" for r in attack))
    report = voxtrig.evaluate(preds, attack_manifest=tmp_path / "attack" / "manifest.csv", plan=plan)
    assert report["asr_overall"]["value"] == 1.0
    assert report["asr_overall"]["denominator"] == 8

    digest = voxtrig.plan_digest(json.dumps(json.loads(plan.read_text())))
    assert len(digest) == 16
