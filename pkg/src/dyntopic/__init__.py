"""Dynamic topic modeling with nonnegative matrix and tensor factorizations.

The package turns a stream of timestamped short documents into
terms-by-documents matrices or days-by-terms-by-documents tensors,
factorizes them with batch or online nonnegative methods, and renders
the learned topics as keyword summaries and prevalence heatmaps.
"""

import os as _os

# Translate the package thread cap into the BLAS knobs before numpy loads.
# Has no effect if numpy was already imported by the host process.
_cap = _os.environ.get("DYNTOPIC_THREADS")
if _cap:
    for _var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        _os.environ.setdefault(_var, _cap)
del _os, _cap

from .corpus import (
    Corpus,
    DaySlice,
    Document,
    ParseIssue,
    ParseResult,
    parse_documents,
    slice_by_day,
    subsample_corpus,
    top_k,
)
from .ncpd import (
    CpModel,
    fit_ncpd,
    load_cp_model,
    mttkrp,
    save_cp_model,
    temporal_prevalence,
)
from .nmf import (
    NmfModel,
    code,
    fit_nmf,
    load_nmf_model,
    rel_error,
    save_nmf_model,
)
from .online_ncpd import (
    OncpdState,
    TensorStream,
    as_cp_model,
    fit_oncpd,
    init_oncpd_state,
    oncpd_code,
    oncpd_step,
    sequential_oncpd,
    surrogate_objective,
)
from .online_nmf import (
    MinibatchPlan,
    OnmfState,
    fit_onmf,
    init_onmf_state,
    onmf_step,
    sequential_onmf,
)
from .synth import (
    PlantedSpec,
    PlantedTopic,
    RecoveryScore,
    gen_planted,
    recovery_score,
)
from .tensor_core import (
    SolverConfig,
    cp_reconstruct,
    fold,
    hadamard,
    khatri_rao,
    kkt_residual,
    nnls,
    nonneg_lasso,
    nonneg_lasso_gram,
    unfold,
)
from .topics import (
    PrevalenceMatrix,
    TopicSummary,
    daily_prevalence,
    export_heatmap,
    export_keywords,
    read_heatmap_csv,
    summarize_model,
    summarize_topic,
)
from .vectorizer import (
    TermTensor,
    Vocabulary,
    build_tensor,
    build_vocab,
    default_stopwords,
    document_terms,
    filter_terms,
    load_tensor,
    load_tensor_triplets,
    load_vocabulary,
    ngrams,
    save_tensor,
    save_tensor_triplets,
    save_vocabulary,
    tfidf_matrix,
    tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "CpModel",
    "DaySlice",
    "Document",
    "MinibatchPlan",
    "NmfModel",
    "OncpdState",
    "OnmfState",
    "ParseIssue",
    "ParseResult",
    "PlantedSpec",
    "PlantedTopic",
    "PrevalenceMatrix",
    "RecoveryScore",
    "SolverConfig",
    "TensorStream",
    "TermTensor",
    "TopicSummary",
    "Vocabulary",
    "as_cp_model",
    "build_tensor",
    "build_vocab",
    "code",
    "cp_reconstruct",
    "daily_prevalence",
    "default_stopwords",
    "document_terms",
    "export_heatmap",
    "export_keywords",
    "filter_terms",
    "fit_ncpd",
    "fit_nmf",
    "fit_oncpd",
    "fit_onmf",
    "fold",
    "gen_planted",
    "hadamard",
    "init_oncpd_state",
    "init_onmf_state",
    "khatri_rao",
    "kkt_residual",
    "load_cp_model",
    "load_nmf_model",
    "load_tensor",
    "load_tensor_triplets",
    "load_vocabulary",
    "mttkrp",
    "ngrams",
    "nnls",
    "nonneg_lasso",
    "nonneg_lasso_gram",
    "oncpd_code",
    "oncpd_step",
    "onmf_step",
    "parse_documents",
    "read_heatmap_csv",
    "recovery_score",
    "rel_error",
    "save_cp_model",
    "save_nmf_model",
    "save_tensor",
    "save_tensor_triplets",
    "save_vocabulary",
    "sequential_oncpd",
    "sequential_onmf",
    "slice_by_day",
    "subsample_corpus",
    "summarize_model",
    "summarize_topic",
    "temporal_prevalence",
    "tfidf_matrix",
    "tokenize",
    "top_k",
    "unfold",
]
