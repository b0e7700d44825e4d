"""The DIDAN scoring network.

Pipeline per article: project body words into the article subspace and
average twice (words -> sentence, sentences -> article); project caption
words and object regions into the shared visual-semantic space; attend
objects to each caption word through cosine similarities; fuse the
article vector, the mean word-specific image vector, and the entity
co-occurrence bit; score each pair with an FC-ReLU-BN stack ending in a
sigmoid; combine pair scores into the article authenticity score with a
noisy-OR.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .data import ArticleRecord, ImageCaptionPair
from .entities import compute_indicator
from .errors import ShapeError

PAIR_SCORE_CLAMP = 1e-7
BCE_CLAMP = 1e-7
BN_MOMENTUM = 0.1
BN_EPS = 1e-5

ABLATIONS = ("full", "no_images", "no_captions", "articles_only")


@dataclass
class DidanParams:
    """All learnable parameters plus BatchNorm running statistics."""

    d_text: int
    d_image: int
    d_vse: int
    hidden: tuple[int, int]
    weights: dict[str, np.ndarray] = field(default_factory=dict)
    bn_stats: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def init(
        cls,
        rng: np.random.Generator,
        d_text: int,
        d_image: int,
        d_vse: int = 512,
        hidden: tuple[int, int] = (512, 128),
        dtype=np.float32,
    ) -> "DidanParams":
        def xavier(fan_in, fan_out):
            a = np.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-a, a, size=(fan_in, fan_out)).astype(dtype)

        h1, h2 = hidden
        d_in = 2 * d_vse + 1
        w = {
            "proj.article": xavier(d_text, d_vse),
            "proj.caption": xavier(d_text, d_vse),
            "proj.visual": xavier(d_image, d_vse),
            "disc.fc1.w": xavier(d_in, h1),
            "disc.fc1.b": np.zeros(h1, dtype=dtype),
            "disc.bn1.gamma": np.ones(h1, dtype=dtype),
            "disc.bn1.beta": np.zeros(h1, dtype=dtype),
            "disc.fc2.w": xavier(h1, h2),
            "disc.fc2.b": np.zeros(h2, dtype=dtype),
            "disc.bn2.gamma": np.ones(h2, dtype=dtype),
            "disc.bn2.beta": np.zeros(h2, dtype=dtype),
            "disc.fc3.w": xavier(h2, 1),
            "disc.fc3.b": np.zeros(1, dtype=dtype),
        }
        stats = {
            "bn1.mean": np.zeros(h1, dtype=dtype),
            "bn1.var": np.ones(h1, dtype=dtype),
            "bn2.mean": np.zeros(h2, dtype=dtype),
            "bn2.var": np.ones(h2, dtype=dtype),
        }
        return cls(d_text, d_image, d_vse, (h1, h2), w, stats)

    def to_tensors(self) -> dict[str, np.ndarray]:
        out = {
            "meta.dims": np.array(
                [self.d_text, self.d_image, self.d_vse, *self.hidden], dtype=np.float32
            )
        }
        out.update(self.weights)
        out.update({f"bn.{k}": v for k, v in self.bn_stats.items()})
        return out

    @classmethod
    def from_tensors(cls, tensors: dict[str, np.ndarray]) -> "DidanParams":
        dims = tensors["meta.dims"].astype(int)
        weights = {
            k: v
            for k, v in tensors.items()
            if not k.startswith(("bn.", "adam.", "cca.", "meta."))
        }
        stats = {k[3:]: v.copy() for k, v in tensors.items() if k.startswith("bn.")}
        return cls(
            d_text=int(dims[0]),
            d_image=int(dims[1]),
            d_vse=int(dims[2]),
            hidden=(int(dims[3]), int(dims[4])),
            weights=weights,
            bn_stats=stats,
        )


@dataclass
class PairTrace:
    pair_id: str
    similarity: np.ndarray  # [n_o, n_c]
    attention: np.ndarray  # [n_o, n_c], columns sum to 1
    word_image_reps: np.ndarray  # [n_c, d_vse]
    fused: np.ndarray  # [2*d_vse + 1]
    indicator: float
    score: float


@dataclass
class ForwardTrace:
    article_id: str
    article_rep: np.ndarray  # [d_vse]
    pairs: list[PairTrace]
    authenticity: float


def param_nodes(params: DidanParams) -> dict[str, ad.Node]:
    return {k: ad.parameter(v, name=k) for k, v in params.weights.items()}


def encode_article(record: ArticleRecord, nodes: dict[str, ad.Node]) -> ad.Node:
    """Two-level mean: words within each sentence, then across sentences."""
    w = nodes["proj.article"]
    sent_reps = []
    for sent in record.sentences:
        if sent.shape[0] < 1:
            raise ShapeError("encode_article", f"empty sentence in {record.article_id}")
        sent_reps.append(ad.mean_rows(ad.matmul(ad.constant(sent), w)))
    if len(sent_reps) == 1:
        return sent_reps[0]
    return ad.mean_rows(ad.stack_rows(sent_reps))


def attend_pair(
    pair: ImageCaptionPair, nodes: dict[str, ad.Node]
) -> tuple[ad.Node, ad.Node, ad.Node, ad.Node, ad.Node]:
    """Returns (proj_objects, proj_words, similarity, attention_T, word_image_reps).

    attention_T is [n_c, n_o]: for each caption word, a distribution over
    objects (rows sum to 1).
    """
    objs = ad.matmul(ad.constant(pair.object_feats), nodes["proj.visual"])
    words = ad.matmul(ad.constant(pair.caption_words), nodes["proj.caption"])
    sim = ad.cosine_matrix(objs, words)  # [n_o, n_c]
    attn_t = ad.softmax_rows(ad.transpose(sim))  # softmax over objects, per word
    word_image = ad.matmul(attn_t, objs)  # [n_c, d_vse]
    return objs, words, sim, attn_t, word_image


def pair_indicator(
    body_entities: frozenset[str],
    pair: ImageCaptionPair,
    use_nei: bool,
    ablation: str,
) -> float:
    if not use_nei or ablation in ("no_captions", "articles_only"):
        return 0.0
    return compute_indicator(body_entities, pair.caption_entities)


def fuse_pair(
    article_rep: ad.Node,
    objs: ad.Node,
    words: ad.Node,
    word_image: ad.Node,
    b_c: float,
    ablation: str,
) -> ad.Node:
    d = article_rep.shape[0]
    if ablation == "full":
        img_part = ad.mean_rows(word_image)
    elif ablation == "no_images":
        img_part = ad.mean_rows(words)
    elif ablation == "no_captions":
        img_part = ad.mean_rows(objs)
    elif ablation == "articles_only":
        img_part = ad.constant(np.zeros(d, dtype=article_rep.value.dtype))
    else:
        raise ValueError(f"unknown ablation {ablation!r}")
    bit = ad.constant(np.asarray([b_c], dtype=article_rep.value.dtype))
    return ad.concat_last_axis([article_rep, img_part, bit])


def discriminator(
    fused_rows: ad.Node,
    nodes: dict[str, ad.Node],
    bn_stats: dict[str, np.ndarray],
    training: bool,
    update_stats: bool = True,
) -> ad.Node:
    """FC-ReLU-BN twice, then FC-sigmoid; input [n, 2*d_vse+1] -> scores [n, 1]."""
    h = ad.relu(ad.add(ad.matmul(fused_rows, nodes["disc.fc1.w"]), nodes["disc.fc1.b"]))
    h = ad.batchnorm(
        h,
        nodes["disc.bn1.gamma"],
        nodes["disc.bn1.beta"],
        bn_stats["bn1.mean"],
        bn_stats["bn1.var"],
        training=training,
        momentum=BN_MOMENTUM,
        eps=BN_EPS,
        update_stats=update_stats,
    )
    h = ad.relu(ad.add(ad.matmul(h, nodes["disc.fc2.w"]), nodes["disc.fc2.b"]))
    h = ad.batchnorm(
        h,
        nodes["disc.bn2.gamma"],
        nodes["disc.bn2.beta"],
        bn_stats["bn2.mean"],
        bn_stats["bn2.var"],
        training=training,
        momentum=BN_MOMENTUM,
        eps=BN_EPS,
        update_stats=update_stats,
    )
    logits = ad.add(ad.matmul(h, nodes["disc.fc3.w"]), nodes["disc.fc3.b"])
    return ad.sigmoid(logits)


def aggregate_authenticity(pair_scores: ad.Node) -> ad.Node:
    """Noisy-OR over pair scores, in log space: 1 - prod(1 - p)."""
    if pair_scores.value.size < 1:
        raise ShapeError("aggregate_authenticity", "no pair scores to aggregate")
    capped = ad.clamp(pair_scores, 0.0, 1.0 - PAIR_SCORE_CLAMP)
    log_miss = ad.log(ad.add_const(ad.scale(capped, -1.0), 1.0))
    return ad.add_const(ad.scale(ad.exp(ad.sum_all(log_miss)), -1.0), 1.0)


def bce_loss(p: ad.Node, y: int) -> ad.Node:
    """Binary cross-entropy of a scalar probability against label y."""
    q = ad.clamp(p, BCE_CLAMP, 1.0 - BCE_CLAMP)
    if y == 1:
        return ad.scale(ad.log(q), -1.0)
    return ad.scale(ad.log(ad.add_const(ad.scale(q, -1.0), 1.0)), -1.0)


@dataclass
class BatchForward:
    """Graph handles for one minibatch: per-example authenticity nodes."""

    p_articles: list[ad.Node]
    pair_scores: ad.Node
    nodes: dict[str, ad.Node]


def forward_examples(
    examples: list[tuple[ArticleRecord, list[ImageCaptionPair], frozenset[str]]],
    params: DidanParams,
    training: bool,
    use_nei: bool = True,
    ablation: str = "full",
    update_stats: bool = True,
    nodes: dict[str, ad.Node] | None = None,
) -> BatchForward:
    """Run the model over (record, pairs-in-use, body-entities) triples.

    The article representation is computed once per distinct record and
    shared between an article's positive example and any mismatch
    negatives built from it.
    """
    if ablation not in ABLATIONS:
        raise ValueError(f"unknown ablation {ablation!r}")
    if nodes is None:
        nodes = param_nodes(params)
    article_cache: dict[int, ad.Node] = {}
    fused: list[ad.Node] = []
    spans: list[tuple[int, int]] = []
    row = 0
    for record, pairs, body_entities in examples:
        key = id(record)
        if key not in article_cache:
            article_cache[key] = encode_article(record, nodes)
        a_f = article_cache[key]
        start = row
        for pair in pairs:
            objs, words, _, _, word_image = attend_pair(pair, nodes)
            b_c = pair_indicator(body_entities, pair, use_nei, ablation)
            fused.append(fuse_pair(a_f, objs, words, word_image, b_c, ablation))
            row += 1
        spans.append((start, row))
    scores = discriminator(
        ad.stack_rows(fused), nodes, params.bn_stats, training, update_stats
    )
    p_articles = [
        aggregate_authenticity(ad.slice_rows(scores, s, e)) for s, e in spans
    ]
    return BatchForward(p_articles=p_articles, pair_scores=scores, nodes=nodes)


def forward_article(
    record: ArticleRecord,
    params: DidanParams,
    substituted_pairs: list[ImageCaptionPair] | None = None,
    mode: str = "eval",
    use_nei: bool = True,
    ablation: str = "full",
) -> ForwardTrace:
    """Score one article end to end, returning all intermediates.

    When `substituted_pairs` is given they replace the article's own
    pairs and the entity indicator is recomputed against this article's
    body entities.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    training = mode == "train"
    pairs = substituted_pairs if substituted_pairs is not None else record.pairs
    nodes = param_nodes(params)
    a_f = encode_article(record, nodes)
    traces = []
    fused_nodes = []
    for pair in pairs:
        objs, words, sim, attn_t, word_image = attend_pair(pair, nodes)
        b_c = pair_indicator(record.body_entities, pair, use_nei, ablation)
        f = fuse_pair(a_f, objs, words, word_image, b_c, ablation)
        fused_nodes.append(f)
        traces.append((pair, sim, attn_t, word_image, f, b_c))
    scores = discriminator(
        ad.stack_rows(fused_nodes),
        nodes,
        params.bn_stats,
        training=training,
        update_stats=False,
    )
    p_a = aggregate_authenticity(scores)
    pair_traces = [
        PairTrace(
            pair_id=pair.pair_id,
            similarity=sim.value.copy(),
            attention=attn_t.value.T.copy(),
            word_image_reps=word_image.value.copy(),
            fused=f.value.copy(),
            indicator=b_c,
            score=float(scores.value[i, 0]),
        )
        for i, (pair, sim, attn_t, word_image, f, b_c) in enumerate(traces)
    ]
    return ForwardTrace(
        article_id=record.article_id,
        article_rep=a_f.value.copy(),
        pairs=pair_traces,
        authenticity=float(p_a.value[0]),
    )
