"""agentdex: in-memory, low-latency agent discovery.

Three indices per corpus -- inverted tags, expanded context vectors, and
per-example embedding matrices -- feed hybrid recall and example-level
re-ranking. Ships with a deterministic embedder, a synthetic benchmark
generator, an evaluation harness, an HTTP service, and a CLI.
"""

from .benchgen import (
    CorpusStats,
    GeneratedCorpus,
    TaxonomySpec,
    corpus_stats,
    generate,
    load_corpus,
    write_corpus,
)
from .context import (
    ApproxContextSearch,
    ContextIndex,
    ExternalQueryGenerator,
    NullGenerator,
    PseudoDoc,
    TemplateGenerator,
    build_context,
    expand,
)
from .core import (
    DEFAULT_DIM,
    AgentCard,
    BuildError,
    ConfigError,
    DegenerateVectorError,
    DimensionError,
    EngineConfig,
    EngineError,
    InputError,
    IntegrityError,
    NotReadyError,
    ParseError,
    ProviderError,
    QueryRecord,
    ScoredAgent,
    agent_from_json_dict,
    agent_to_json_dict,
    fuse_scores,
    normalize,
)
from .embedding import EmbedderSpec, ExternalEmbedder, HashingEmbedder, build_embedder
from .engine import DiscoveryBatchError, DiscoveryEngine, DiscoveryResult
from .evaluation import (
    DilutionRow,
    EvalReport,
    LatencyReport,
    ModeRow,
    dilution_table,
    evaluate_mode,
    latency_report,
    mrr_at_k,
    recall_at_k,
    run_ablation,
)
from .intent import ExampleMatrix, IntentIndex, build_intent, max_sim, mean_pool_raw_dot, mean_pool_sim
from .service import ApiConfig, create_app
from .sparse import TagPostings, build_sparse, load_synonyms
from .tagging import ExternalTagger, LexicalTagger, OracleTagger, TagPrediction

__version__ = "0.1.0"
