"""Evidence synthesis harness: corpus handling, span tagging, budgeted
encoder-input assembly, summarization backends, metrics, statistics, and
a blinded annotation protocol."""

from .corpus import (
    CorpusError,
    Review,
    SplitSpec,
    StudyDocument,
    load_corpus,
    save_corpus,
    split_corpus,
    toy_corpus_path,
)
from .input_builder import (
    BudgetError,
    BuildConfig,
    DecorationError,
    EncoderInput,
    assemble,
    decorate,
    sort_key,
    strip_decoration,
)
from .metrics import (
    FindingsDistribution,
    LinearTextClassifier,
    RougeScore,
    findings_jsd,
    jsd,
    rouge_l,
    select_punchline,
    train_classifier,
)
from .stats import (
    PairedRatings,
    RegressionResult,
    ols_regress,
    paired_ttest,
    weighted_kappa,
)
from .summarizer import (
    BackendError,
    BaselineBackend,
    DecodingParams,
    GeneratedSummary,
    RemoteBackend,
    generate,
    run_systems,
    variant_grid,
)
from .tagger import ProviderError, TaggedSpan, TagSet, tag_spans
from .textproc import Sentence, Token, count_tokens, split_sentences, tokenize

__version__ = "0.1.0"

__all__ = [
    "BackendError",
    "BaselineBackend",
    "BudgetError",
    "BuildConfig",
    "CorpusError",
    "DecodingParams",
    "DecorationError",
    "EncoderInput",
    "FindingsDistribution",
    "GeneratedSummary",
    "LinearTextClassifier",
    "PairedRatings",
    "ProviderError",
    "RegressionResult",
    "RemoteBackend",
    "Review",
    "RougeScore",
    "Sentence",
    "SplitSpec",
    "StudyDocument",
    "TagSet",
    "TaggedSpan",
    "Token",
    "assemble",
    "count_tokens",
    "decorate",
    "findings_jsd",
    "generate",
    "jsd",
    "load_corpus",
    "ols_regress",
    "paired_ttest",
    "rouge_l",
    "run_systems",
    "save_corpus",
    "select_punchline",
    "sort_key",
    "split_corpus",
    "split_sentences",
    "strip_decoration",
    "tag_spans",
    "tokenize",
    "toy_corpus_path",
    "train_classifier",
    "variant_grid",
    "weighted_kappa",
]
