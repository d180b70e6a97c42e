"""Multi-relational knowledge graph embeddings in Euclidean and
Poincare-ball geometry."""

from hyperkg._core import (  # noqa: F401
    Checkpoint,
    EpochMetrics,
    GeometryKind,
    HierarchyReport,
    KnowledgeGraph,
    ModelParams,
    RankingReport,
    RelationHierarchy,
    RelationMetrics,
    TrainConfig,
    TrainResult,
    Triple,
    TruthIndex,
    augment_reciprocal,
    classify_relations,
    conformal_factor,
    evaluate,
    exp_map,
    graph_from_triples,
    khs,
    load_checkpoint,
    load_graph,
    log_map,
    mobius_add,
    mobius_matvec,
    path_stats,
    poincare_distance,
    project_to_ball,
    rank_triple,
    resplit,
    riemannian_scale,
    save_checkpoint,
    score,
    sigmoid,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
