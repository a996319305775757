"""Multitask policy foundry.

Three-phase pipeline over contextual MDPs: foundation policy acquisition
(context-conditioned maximum-entropy actor-critic), policy selection by a
KL-regularized return index, and skill generation by TPE search over the
encoder's latent space.
"""

from ._mpf import (
    Candidate,
    ContextSpec,
    Env,
    MpfError,
    __version__,
    evaluate_latent,
    gaussian_kl_diag,
    index_from_terms,
    make_env,
    run_phase,
    run_pipeline,
    skill_generate,
    tpe_optimize,
    train_foundation,
)

__all__ = [
    "Candidate",
    "ContextSpec",
    "Env",
    "MpfError",
    "__version__",
    "evaluate_latent",
    "gaussian_kl_diag",
    "index_from_terms",
    "make_env",
    "run_phase",
    "run_pipeline",
    "skill_generate",
    "tpe_optimize",
    "train_foundation",
]
