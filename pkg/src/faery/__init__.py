"""Few-shot quality-diversity optimization via meta-learned prior populations.

The library learns a population of policies such that quality-diversity
search seeded from it solves new tasks from the same distribution within a
handful of generations. See README.md for the module map and the demos/
directory for worked examples.
"""

from .errors import (
    CheckpointError,
    ConfigError,
    DatasetError,
    DimensionMismatchError,
    EmptyPopulationError,
    FaeryError,
    RootIndexError,
    TaskEvaluationError,
    UnknownNodeError,
)
from .evo import (
    NoveltyArchive,
    archive_insert,
    crowding_distance,
    non_dominated_sort,
    novelty_scores,
    nsga2_select,
    nsga2_select_indices,
)
from .gridworld import (
    AblationReport,
    GridGenome,
    GridTask,
    GridWorldSpec,
    default_ablation_config,
    grid_mutate,
    grid_reproduce,
    initial_grid_population,
    run_ablation,
    sample_grid_tasks,
    split_goal_cells,
)
from .lineage import EvolutionForest, RootStats
from .maze import (
    MazeLayout,
    MazeTask,
    SimParams,
    generate_dataset,
    generate_maze,
    make_task,
    render_ascii,
    sample_tasks_from_pool,
    simulate_episodes,
)
from .meta import (
    WORST_SENTINEL,
    MetaConfig,
    MetaGenReport,
    MetaScore,
    PriorPopulation,
    compute_meta_scores,
    meta_generation,
    run_faery,
)
from .networks import (
    Genome,
    MutationConfig,
    NetworkShape,
    decode,
    decode_and_forward,
    forward,
    initial_network_population,
    mutate,
    mutate_population,
    polynomial_reproducer,
    random_genome,
)
from .qd import EvalResult, QdConfig, QdOutcome, evaluate, run_qd_instance
from .rngs import RngKey, master_key

__version__ = "0.1.0"
