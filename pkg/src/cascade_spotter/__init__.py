"""Offline analysis of Twitter jsonl dumps: retweet cascade assembly,
probabilistic influence scoring, feature engineering, and supervised
user labeling, plus an HTTP explorer for inspection and relabeling."""

from cascade_spotter.ingest import (
    Cascade,
    CascadeEvent,
    IngestStats,
    RawTweet,
    RawUser,
    UserRecord,
    aggregate_users,
    build_cascades,
    load_dataset,
    parse_tweet_line,
)
from cascade_spotter.influence import (
    CascadeInfluenceScorer,
    InfluenceMatrix,
    InfluenceReport,
    KernelParams,
    ParentProbabilityMatrix,
    event_intensity,
    expected_parents,
    influence_report,
    kernel_phi,
    pairwise_influence,
    parent_probabilities,
)
from cascade_spotter.features import (
    EmbeddingTable,
    FeatureMatrix,
    HashtagTfidfVectorizer,
    HashtagVocabulary,
    UserFeaturizer,
    assemble_features,
    embed_text,
    hashtag_tfidf,
    user_stat_features,
)
from cascade_spotter.labeler import (
    AnnotationRecord,
    BoostedTreesClassifier,
    SchemaMismatchError,
    TreeEnsembleModel,
    annotation_template,
    fine_tune,
    load_annotations,
    train,
)

__version__ = "0.1.0"
