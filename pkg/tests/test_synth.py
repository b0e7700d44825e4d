import json

import numpy as np
import pytest

from didan import synth
from didan.data import Label, load_manifest
from didan.errors import SchemaError

SMALL = dict(n_articles=40, d_text=5, d_image=6, latent_k=2, n_topics=4, entity_pool=6)


class TestConfig:
    def test_rejects_inverted_entity_probs(self):
        with pytest.raises(SchemaError, match="q_mismatch"):
            synth.SynthConfig(q_match=0.2, q_mismatch=0.5)

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(SchemaError, match="sigma"):
            synth.SynthConfig(sigma=0.0)

    def test_rejects_unknown_keys(self):
        with pytest.raises(SchemaError, match="unknown"):
            synth.SynthConfig.from_dict({"n_articles": 10, "noise": 1.0})

    def test_dict_round_trip(self):
        config = synth.SynthConfig(**SMALL, seed=9)
        again = synth.SynthConfig.from_dict(config.to_dict())
        assert again == config

    def test_per_channel_sigma_overrides(self):
        config = synth.SynthConfig(sigma=2.0, sigma_obj=7.0)
        assert config.sigmas == (2.0, 2.0, 7.0)


class TestGeneration:
    def test_dataset_is_deterministic(self, tmp_path):
        config = synth.SynthConfig(**SMALL, seed=5)
        m1 = synth.generate_synthetic_dataset(config, tmp_path / "one")
        m2 = synth.generate_synthetic_dataset(config, tmp_path / "two")
        for split in ("train", "val", "test"):
            assert m1[split].read_text() == m2[split].read_text()
        blobs1 = sorted((tmp_path / "one" / "blobs").iterdir())
        blobs2 = sorted((tmp_path / "two" / "blobs").iterdir())
        assert [b.name for b in blobs1] == [b.name for b in blobs2]
        for b1, b2 in zip(blobs1, blobs2):
            assert b1.read_bytes() == b2.read_bytes()

    def test_seed_changes_payload(self, tmp_path):
        m1 = synth.generate_synthetic_dataset(
            synth.SynthConfig(**SMALL, seed=1), tmp_path / "one"
        )
        m2 = synth.generate_synthetic_dataset(
            synth.SynthConfig(**SMALL, seed=2), tmp_path / "two"
        )
        assert m1["train"].read_text() != m2["train"].read_text()

    def test_manifests_load_and_split_sizes(self, tmp_path):
        config = synth.SynthConfig(**SMALL, seed=5)
        paths = synth.generate_synthetic_dataset(config, tmp_path)
        sizes = {}
        for split in ("train", "val", "test"):
            m = load_manifest(paths[split])
            assert (m.d_text, m.d_image) == (config.d_text, config.d_image)
            assert m.split == split
            sizes[split] = len(m.records)
        assert sizes == {"train": 28, "val": 6, "test": 6}

    def test_labels_alternate_for_exact_balance(self, tmp_path):
        config = synth.SynthConfig(**SMALL, seed=5)
        paths = synth.generate_synthetic_dataset(config, tmp_path)
        labels = [m.label for m in load_manifest(paths["train"]).records]
        assert labels[:4] == [Label.REAL, Label.GENERATED, Label.REAL, Label.GENERATED]
        assert sum(labels) == len(labels) // 2

    def test_config_snapshot_written(self, tmp_path):
        config = synth.SynthConfig(**SMALL, seed=5)
        synth.generate_synthetic_dataset(config, tmp_path)
        snapshot = json.loads((tmp_path / "synth_config.json").read_text())
        assert synth.SynthConfig.from_dict(snapshot) == config

    def test_real_articles_share_latent_across_channels(self):
        # With near-zero noise a real article's caption mean should match
        # the latent image almost exactly; generated articles should not
        # match the body's latent.
        config = synth.SynthConfig(**SMALL, sigma=1e-4, seed=8)
        mats = synth.mixing_matrices(config)
        m_art, m_cap, _ = mats
        arts = synth.sample_articles(config, 10, stream=2)
        for art in arts:
            z_art = np.linalg.lstsq(m_art, art.sentences[0][0], rcond=None)[0]
            cap_pred = m_cap @ z_art
            gap = np.linalg.norm(art.pairs[0]["caption"][0] - cap_pred)
            if art.label == Label.REAL:
                assert gap < 1e-2
            else:
                assert gap > 1e-1

    def test_entity_overlap_tracks_label_channel(self):
        config = synth.SynthConfig(
            **{**SMALL, "n_topics": 2}, seed=4, q_match=1.0, q_mismatch=0.0
        )
        arts = synth.sample_articles(config, 60, stream=2)
        for art in arts:
            body = set(art.body_entities)
            for pr in art.pairs:
                hit = bool(body & set(pr["entities"]))
                assert hit == (art.label == Label.REAL)
                assert hit == pr["overlap"]

    def test_distractor_entities_never_collide_with_bodies(self):
        config = synth.SynthConfig(**SMALL, seed=4)
        arts = synth.sample_articles(config, 60, stream=2)
        bodies = set().union(*(a.body_entities for a in arts))
        distractors = {
            e for a in arts for p in a.pairs for e in p["entities"]
            if e.startswith("dx_")
        }
        assert distractors
        assert not bodies & distractors


class TestOracle:
    def test_noiseless_regime_is_separable(self):
        config = synth.SynthConfig(**{**SMALL, "n_articles": 200}, sigma=0.05, seed=6)
        acc = synth.bayes_oracle_accuracy(config, n_mc=200)
        assert acc >= 0.99

    def test_accuracy_degrades_with_noise(self):
        accs = []
        for sigma in (0.5, 2.5, 12.0):
            config = synth.SynthConfig(**SMALL, sigma=sigma, q_match=0.6,
                                       q_mismatch=0.4, seed=6)
            accs.append(synth.bayes_oracle_accuracy(config, n_mc=400))
        assert accs[0] > accs[1] > accs[2]
        assert accs[2] < 0.8

    def test_oracle_is_deterministic(self):
        config = synth.SynthConfig(**SMALL, seed=6)
        a1 = synth.bayes_oracle_accuracy(config, n_mc=100)
        a2 = synth.bayes_oracle_accuracy(config, n_mc=100)
        assert a1 == a2

    def test_llr_sign_tracks_label_in_easy_regime(self):
        config = synth.SynthConfig(**SMALL, sigma=0.1, seed=6)
        mats = synth.mixing_matrices(config)
        for art in synth.sample_articles(config, 20, stream=3):
            llr = synth.article_log_likelihood_ratio(art, config, mats)
            assert (llr >= 0) == (art.label == Label.REAL)

    def test_entity_channel_alone_moves_the_oracle(self):
        # Drown the geometric channel in noise; detection must then ride
        # on entity overlap and land near the analytic ceiling.
        config = synth.SynthConfig(
            **SMALL, sigma=60.0, q_match=0.95, q_mismatch=0.05, seed=6
        )
        acc = synth.bayes_oracle_accuracy(config, n_mc=600)
        assert 0.7 < acc < 1.0
