"""tagsec: profile-injection attacks and countermeasures for tag-based recommenders.

Submodules: corpus (data model and statistics), attacks (Overload and
Piggyback batch synthesis), classifiers (Naive Bayes, linear SVM, LSTM),
recommender (embedding profiles and cosine top-k), evaluation (the full
protocol), synth (seeded synthetic corpora) and cli.
"""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    Corpus,
    CorpusError,
    Folksonomy,
    Label,
    Vocabulary,
    build_vocabulary,
    encode_sequence,
    folksonomy_size_distribution,
    parse_dataset,
    parse_dataset_file,
    sample_users,
    serialize_corpus,
    tag_frequencies,
    top_annotated_resources,
    top_popular_tags,
)
from .attacks import (  # noqa: F401
    AttackError,
    AttackKind,
    AttackSpec,
    BogusBatch,
    generate,
    generate_overload,
    generate_piggyback,
    inject,
    kl_divergence,
    tag_class_distribution,
)
from .synth import make_desk_corpus, make_synthetic_corpus  # noqa: F401
