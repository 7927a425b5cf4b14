# models/schemas.py
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from config.settings import settings


class ExampleDocument(BaseModel):
    """One input/output observation; values are JSON-encoded by type."""
    inputs: List[Any]
    output: Any


class TaskDocument(BaseModel):
    """Task file entry."""
    id: str
    name: str
    domain: Literal["list", "text", "regression"]
    type: str
    examples: Optional[List[ExampleDocument]] = None
    points: Optional[List[List[float]]] = None
    solution: Optional[Dict[str, Any]] = None

    @model_validator(mode="after")
    def check_observations(self):
        if self.domain == "regression":
            if not self.points:
                raise ValueError("regression tasks need 'points'")
            if any(len(p) != 2 for p in self.points):
                raise ValueError("each point must be [x, y]")
        elif not self.examples:
            raise ValueError("IO tasks need a nonempty 'examples' list")
        return self


class ProductionDocument(BaseModel):
    source: str
    type: str
    logWeight: float


class LibraryDocument(BaseModel):
    productions: List[ProductionDocument]
    variableLogWeight: float


class FrontierEntryDocument(BaseModel):
    program: str
    logPrior: float
    logLikelihood: float


class FrontierDocument(BaseModel):
    task_id: str
    request: str
    entries: List[FrontierEntryDocument] = []


class InventionRecord(BaseModel):
    """Logged when compression adopts an invention."""
    name: str
    source: str
    mdl_gain: float
    uses: int


class ModelDocument(BaseModel):
    """Recognition model checkpoint: a shape header plus flat parameters."""
    shape: Dict[str, Any]
    parameters: List[float]


class FantasyDocument(BaseModel):
    task: TaskDocument
    program: str


class AblationFlags(BaseModel):
    no_abstraction: bool = False
    no_recognition: bool = False
    memorize: bool = False
    enumerate_only: bool = False


class RunConfig(BaseModel):
    """Options for one wake-sleep run; defaults come from settings."""
    curriculum: Optional[str] = None
    task_file: Optional[str] = None
    basis: Optional[str] = None
    iterations: int = Field(default_factory=lambda: settings.ITERATIONS, ge=0)
    minibatch: Optional[int] = Field(None, ge=1)
    timeout: float = Field(default_factory=lambda: settings.TASK_TIMEOUT, gt=0)
    beam: int = Field(default_factory=lambda: settings.BEAM_SIZE, ge=1)
    nats_window: float = Field(default_factory=lambda: settings.NATS_WINDOW, gt=0)
    structure_penalty: float = Field(default_factory=lambda: settings.STRUCTURE_PENALTY, gt=0)
    steps: int = Field(default_factory=lambda: settings.REFACTOR_STEPS, ge=0)
    max_inventions: int = Field(default_factory=lambda: settings.MAX_INVENTIONS, ge=0)
    candidate_pool: int = Field(default_factory=lambda: settings.CANDIDATE_POOL, ge=1)
    max_refactor: bool = False
    epochs: int = Field(default_factory=lambda: settings.EPOCHS, ge=0)
    fantasy_count: int = Field(default_factory=lambda: settings.FANTASY_COUNT, ge=0)
    bigram: bool = False
    seed: int = Field(default_factory=lambda: settings.SEED)
    deterministic: bool = False
    workers: int = Field(default_factory=lambda: settings.WORKERS, ge=1)
    test_fraction: float = Field(default_factory=lambda: settings.TEST_FRACTION, ge=0.0, lt=1.0)
    ablations: AblationFlags = AblationFlags()

    @model_validator(mode="after")
    def check_curriculum_source(self):
        if (self.curriculum is None) == (self.task_file is None):
            raise ValueError("exactly one of 'curriculum' and 'task_file' must be given")
        return self


class CheckpointDocument(BaseModel):
    iteration: int
    library: LibraryDocument
    frontiers: List[FrontierDocument]
    model: Optional[ModelDocument] = None
    solve_times: Dict[str, Optional[float]] = {}
    train_task_ids: List[str] = []
    inventions: List[InventionRecord] = []
    rng: Dict[str, int] = {}


class MetricsRow(BaseModel):
    iter: int
    train_solved: float
    test_solved: float
    mean_time_s: Optional[float] = None
    median_time_s: Optional[float] = None
    lib_size: int
    lib_depth: int


class MetricsDocument(BaseModel):
    rows: List[MetricsRow]


class CompressionDocument(BaseModel):
    """Output of a standalone abstraction pass."""
    library: LibraryDocument
    frontiers: List[FrontierDocument]
    inventions: List[InventionRecord] = []
