"""Hyper-parameter search engine for a face video super-resolution network family."""

from ._vsrhpo import (
    CostError,
    EvaluatorError,
    LogError,
    MetricError,
    ReportError,
    SamplerError,
    SpaceError,
    conv2d_cost,
    decode,
    encode,
    expected_improvement,
    format_duration,
    graph_cost_json,
    load_space,
    network_cost,
    paper_space,
    pareto_front,
    propose,
    psnr,
    quantile_split,
    rank,
    run_search,
    space_size,
    ssim,
    synthetic_loss,
    top_k,
    unrank,
)

__all__ = [name for name in dir() if not name.startswith("_")]
