"""Privacy risk of categorical speaker attribute profiles.

Uniqueness (anonymity set sizes) over attribute profiles and an exact-match
re-identification attack with random tie-breaking.
"""
__version__ = "0.1.0"

from .attack import (  # noqa: E402
    AttackInstance,
    AttackReport,
    attack_closed_form,
    attack_monte_carlo,
    attack_over_runs,
)
from .channel import ConfusionChannel, apply_channel, channel_from_accuracy  # noqa: E402
from .dataset import (  # noqa: E402
    ProfileDataset,
    ProfileRecord,
    load_labels,
    load_posteriors,
    restrict_to_speakers,
    write_dataset,
)
from .metrics import baseline, classification_metrics  # noqa: E402
from .partition import (  # noqa: E402
    AnonymityAssignment,
    UniquenessReport,
    k_delta,
    partition_speakers,
    uniqueness_report,
)
from .profile_build import (  # noqa: E402
    ResamplePlan,
    aggregate_majority,
    aggregate_posterior_mean,
    resample_single,
)
from .schema import (  # noqa: E402
    AttributeDef,
    AttributeSchema,
    PosteriorProfile,
    argmax_profile,
    load_schema,
    validate_schema,
)

__all__ = [
    "AnonymityAssignment",
    "AttackInstance",
    "AttackReport",
    "AttributeDef",
    "AttributeSchema",
    "ConfusionChannel",
    "PosteriorProfile",
    "ProfileDataset",
    "ProfileRecord",
    "ResamplePlan",
    "UniquenessReport",
    "aggregate_majority",
    "aggregate_posterior_mean",
    "apply_channel",
    "argmax_profile",
    "attack_closed_form",
    "attack_monte_carlo",
    "attack_over_runs",
    "baseline",
    "channel_from_accuracy",
    "classification_metrics",
    "k_delta",
    "load_labels",
    "load_posteriors",
    "load_schema",
    "partition_speakers",
    "resample_single",
    "restrict_to_speakers",
    "uniqueness_report",
    "validate_schema",
    "write_dataset",
]
