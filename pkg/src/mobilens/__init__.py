"""Zero-shot demographic inference from stay-point trajectories.

The pipeline: load stay points and POI metadata, render weekly mobility
narratives, run a three-stage reasoning chain against a chat-completion
backend, parse the structured predictions, and score them against labels.
"""

__version__ = "0.1.0"

from .backend import BackendConfig, CacheBackend, CompletionRequest, HttpBackend
from .categories import CategoryConfig, DEFAULT_CATEGORIES, INCOME_BRACKETS, UNPARSED
from .chain import StageTranscript, build_stage1_prompt, build_stage2_prompt, build_stage3_prompt, run_chain
from .evaluation import EvalReport, RunConfig, accuracy, macro_f1, run_ablation, run_experiment
from .mock import MockBackend
from .narrative import VisitStats, WeeklyNarrative, build_narrative, render_chronicle, render_summary
from .parsing import DemographicPrediction, extract_scores, normalize_label, parse_stage3
from .synth import RuleSet, default_rules, generate_agents
from .templates import PromptTemplate, TemplateRegistry
from .trajectory import (
    AgentWeek,
    DatasetManifest,
    DemographicLabel,
    Poi,
    PoiCatalog,
    StayPoint,
    Visit,
    join_visits,
    load_poi_catalog,
    load_stay_points,
    partition_weeks,
    sample_agents,
)
