"""Synthetic alluvial diagrams, layout, complexity scoring and study analysis."""
from .core import (
    ACC3,
    ACC4,
    S_A,
    SVC,
    WEIGHT_SETS,
    AlluvialDataset,
    ComplexityClass,
    ComplexityReport,
    EntityRef,
    FeatureVector,
    Flow,
    ModelWeights,
    build_reports,
    classify,
    count_crossings,
    extract_features,
    normalize_scores,
    score,
)
from .errors import (
    AlluvialError,
    DegenerateVariable,
    EmptyInput,
    FormatError,
    GenerationExhausted,
    InsufficientData,
    InvalidDataset,
    InvalidOrdering,
    LayoutOverflow,
    OutOfRange,
    SingularDesign,
)
from .generator import GeneratorConfig, check_dataset, generate, generate_corpus
from .layout import LayoutConfig, LayoutGeometry, layout, order_columns
from .render import RenderStyle, render_svg

__version__ = "0.1.0"

__all__ = [
    "GeneratorConfig",
    "check_dataset",
    "generate",
    "generate_corpus",
    "LayoutConfig",
    "LayoutGeometry",
    "layout",
    "order_columns",
    "RenderStyle",
    "render_svg",
    "ACC3",
    "ACC4",
    "S_A",
    "SVC",
    "WEIGHT_SETS",
    "AlluvialDataset",
    "ComplexityClass",
    "ComplexityReport",
    "EntityRef",
    "FeatureVector",
    "Flow",
    "ModelWeights",
    "build_reports",
    "classify",
    "count_crossings",
    "extract_features",
    "normalize_scores",
    "score",
    "AlluvialError",
    "DegenerateVariable",
    "EmptyInput",
    "FormatError",
    "GenerationExhausted",
    "InsufficientData",
    "InvalidDataset",
    "InvalidOrdering",
    "LayoutOverflow",
    "OutOfRange",
    "SingularDesign",
]
