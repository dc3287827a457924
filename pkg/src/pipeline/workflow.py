"""
Experiment workflow using LangGraph StateGraph.

Each partition seed runs through:
1. Split the dataset (or reuse the stored split)
2. Fit the MinMax scaler on the training subset
3. Build a freshly initialized model
4. Train it
5. Evaluate it on the test subset
and the graph loops until every seed has been processed.
"""
import logging
from operator import add
from typing import Annotated, Literal, TypedDict

from langgraph.graph import END, StateGraph

from src.data import Dataset, fit_scaler, split_train_test
from src.errors import KanEtsError, TrainingDivergedError
from src.evaluation.metrics import R2Report, evaluate
from src.models import ChainModel, KanNetwork, ModelSpec, build_model
from src.training import TrainConfig, TrainResult, train

logger = logging.getLogger(__name__)

NODES_PER_PARTITION = 6


class ExperimentState(TypedDict):
    """State for the experiment workflow."""
    dataset: Dataset
    spec: ModelSpec
    train_config: TrainConfig
    seeds: list[int]
    position: int
    reuse_split: bool
    progress: bool
    partition: Dataset | None
    model: KanNetwork | ChainModel | None
    result: TrainResult | None
    reports: Annotated[list[R2Report], add]
    histories: Annotated[list[dict], add]
    steps: Annotated[list[str], add]  # Human-readable log of the run


def _seed(state: ExperimentState) -> int:
    return state["seeds"][state["position"]]


def _tag(error: KanEtsError, seed: int) -> KanEtsError:
    message = f"Partition {seed}: {error}"
    if isinstance(error, TrainingDivergedError):
        return TrainingDivergedError(message, epoch=error.epoch, last_good_state=error.last_good_state)
    return type(error)(message)


def prepare_split(state: ExperimentState) -> dict:
    """Node: Partition the dataset for the current seed."""
    dataset, seed = state["dataset"], _seed(state)
    if state["reuse_split"] and dataset.split is not None:
        return {"partition": dataset, "steps": [f"Partition {seed}: reusing stored split ({len(dataset.split.train)}/{len(dataset.split.test)})"]}
    train_idx, test_idx = split_train_test(dataset, seed=seed)
    return {
        "partition": dataset.with_split(train_idx, test_idx, seed),
        "steps": [f"Partition {seed}: split {len(train_idx)} train / {len(test_idx)} test"],
    }


def fit_scaling(state: ExperimentState) -> dict:
    """Node: Fit scaling parameters on the training subset only."""
    partition = state["partition"]
    scaler = fit_scaler(partition, partition.split.train)
    return {
        "partition": partition.with_scaler(scaler),
        "steps": [f"Partition {_seed(state)}: scaler fitted (s_Y={scaler.output_scale:.4g})"],
    }


def build(state: ExperimentState) -> dict:
    """Node: Build a fresh model."""
    spec, config = state["spec"], state["train_config"]
    model = build_model(spec, state["partition"].recipe.n_steps, seed=config.seed)
    return {
        "model": model,
        "steps": [f"Partition {_seed(state)}: built {spec.kind} {list(model.architecture)}"],
    }


def train_model(state: ExperimentState) -> dict:
    """Node: Train on the partition."""
    seed = _seed(state)
    try:
        result = train(state["model"], state["partition"], state["train_config"], progress=state["progress"])
    except KanEtsError as e:
        raise _tag(e, seed) from e
    final = result.history[-1]
    return {
        "result": result,
        "histories": [{"partition_seed": seed, **result.to_dict()}],
        "steps": [f"Partition {seed}: trained {len(result.history)} epochs, final loss {final.total:.4e}"],
    }


def evaluate_model(state: ExperimentState) -> dict:
    """Node: Score the test subset."""
    seed, partition = _seed(state), state["partition"]
    try:
        report = evaluate(
            state["model"], partition,
            metadata={
                "partition_seed": seed,
                "model": state["spec"].to_dict(),
                "train": state["train_config"].to_dict(),
                "recipe": partition.recipe.to_dict(),
            },
        )
    except KanEtsError as e:
        raise _tag(e, seed) from e
    passing = ", ".join(f"R2>{t}: {s['count']}/{len(report.entries)}" for t, s in report.thresholds.items())
    return {"reports": [report], "steps": [f"Partition {seed}: {passing}"]}


def advance(state: ExperimentState) -> dict:
    """Node: Move to the next seed."""
    return {"position": state["position"] + 1}


def has_more(state: ExperimentState) -> Literal["next", "done"]:
    """Conditional edge: Loop while seeds remain."""
    if state["position"] < len(state["seeds"]):
        return "next"
    return "done"


def build_workflow():
    """Build and compile the experiment graph."""
    workflow = StateGraph(ExperimentState)

    workflow.add_node("prepare_split", prepare_split)
    workflow.add_node("fit_scaling", fit_scaling)
    workflow.add_node("build", build)
    workflow.add_node("train_model", train_model)
    workflow.add_node("evaluate_model", evaluate_model)
    workflow.add_node("advance", advance)

    workflow.set_entry_point("prepare_split")

    workflow.add_edge("prepare_split", "fit_scaling")
    workflow.add_edge("fit_scaling", "build")
    workflow.add_edge("build", "train_model")
    workflow.add_edge("train_model", "evaluate_model")
    workflow.add_edge("evaluate_model", "advance")
    workflow.add_conditional_edges(
        "advance",
        has_more,
        {
            "next": "prepare_split",
            "done": END,
        }
    )

    return workflow.compile()


_workflow = None


def get_workflow():
    """Get or create the compiled workflow."""
    global _workflow
    if _workflow is None:
        _workflow = build_workflow()
    return _workflow


def run_partitions(
    dataset: Dataset,
    spec: ModelSpec,
    config: TrainConfig,
    seeds: list[int],
    reuse_split: bool = False,
    progress: bool = True,
) -> dict:
    """
    Run split -> train -> evaluate for each seed.

    Args:
        dataset: Unscaled dataset; a stored split is used only with reuse_split.
        spec: Model specification.
        config: Training configuration.
        seeds: Partition seeds, processed in order.
        reuse_split: Keep dataset.split instead of drawing a new one.
        progress: Show tqdm bars while training.

    Returns:
        dict with keys:
            - reports: list[R2Report] (one per seed)
            - histories: list[dict] (loss history per seed)
            - model: the last trained model
            - partition: the last scaled and split dataset
            - steps: list[str]
    """
    if not seeds:
        raise ValueError("At least one partition seed is required")

    initial_state = {
        "dataset": dataset,
        "spec": spec,
        "train_config": config,
        "seeds": list(seeds),
        "position": 0,
        "reuse_split": reuse_split,
        "progress": progress,
        "partition": None,
        "model": None,
        "result": None,
        "reports": [],
        "histories": [],
        "steps": [],
    }

    result = get_workflow().invoke(
        initial_state, {"recursion_limit": NODES_PER_PARTITION * len(seeds) + 10}
    )

    return {
        "reports": result.get("reports", []),
        "histories": result.get("histories", []),
        "model": result.get("model"),
        "partition": result.get("partition"),
        "steps": result.get("steps", []),
    }
