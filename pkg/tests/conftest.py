import numpy as np
import pytest

from didan.data import ArticleRecord, ImageCaptionPair, Label


def make_pair(rng, d_text, d_image, n_c=None, n_o=None, pair_id="p0", entities=("alice",)):
    n_c = n_c or int(rng.integers(2, 5))
    n_o = n_o or int(rng.integers(2, 5))
    return ImageCaptionPair(
        pair_id=pair_id,
        caption_words=rng.standard_normal((n_c, d_text)),
        object_feats=rng.standard_normal((n_o, d_image)),
        caption_entities=frozenset(entities),
    )


def make_record(
    rng,
    d_text=6,
    d_image=8,
    n_pairs=2,
    label=Label.REAL,
    article_id="a0",
    body_entities=("alice", "bob"),
):
    sentences = [
        rng.standard_normal((int(rng.integers(1, 4)), d_text))
        for _ in range(int(rng.integers(1, 4)))
    ]
    pairs = [
        make_pair(rng, d_text, d_image, pair_id=f"{article_id}_p{k}")
        for k in range(n_pairs)
    ]
    return ArticleRecord(
        article_id=article_id,
        sentences=sentences,
        body_entities=frozenset(body_entities),
        pairs=pairs,
        label=label,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
