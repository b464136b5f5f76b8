"""Multi-attack robustness benchmarking.

The package trains desk-scale models, evaluates them against a configurable
family of graded attacks, scores defenses with competitiveness and stability
metrics, and serves an interactive leaderboard.

Layout:

- ``threat``: attack families, instances, attack/knowledge sets, the game.
- ``metrics``: competitiveness ratios, stability, union/average accuracy,
  ranking.
- ``sandbox``: synthetic data, a small analytic-gradient classifier, the
  attack implementations, and training modes.
- ``harness``: minimal-epsilon evaluation and baseline-table construction.
- ``store``: JSON schemas for bundles, baselines, profiles, reports,
  leaderboards, and visualization datasets.
- ``cli`` / ``server``: the pipeline commands and the read-only HTTP API.
"""

from .threat import (
    CLEAN,
    AttackFamily,
    AttackInstance,
    AttackSet,
    ConfigurationError,
    GameSpec,
    KnowledgeSet,
    build_knowledge_set,
    full_attack_set,
    game_outcome,
)
from .metrics import (
    BaselineCell,
    BaselineTable,
    EvaluationMatrix,
    MetricReport,
    average_accuracy,
    attack_strength,
    compute_report,
    cr_exp,
    cr_general,
    cr_in_out,
    cr_ind_avg,
    cr_ind_worst,
    cr_max,
    muar,
    multi_error,
    rank_leaderboard,
    single_cr,
    stability_constant,
    uar,
    union_accuracy,
)
from .harness import (
    MinimalEpsilonProfile,
    accuracy_curve,
    build_baseline_table,
    evaluate_model,
    minimal_epsilon_search,
)
from .config import RunConfig, default_families, load_config

__version__ = "0.1.0"
