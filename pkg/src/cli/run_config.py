"""
Run configuration: one JSON document, presets 1-4, CLI flag overrides.

Resolution order for every field: CLI flag, then the config file, then the
preset, then built-in defaults. A file field that replaces a preset value is
logged.
"""
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

from src.config import Config
from src.data import DatasetRecipe, amplitude_grid
from src.errors import ConfigError
from src.models import ModelSpec, SplineGrid, parse_architecture
from src.physics import SpinChainParams
from src.training import TrainConfig

logger = logging.getLogger(__name__)

REPORT_FORMATS = ("csv", "json", "svg")


def _as_number(value, cast: type, name: str):
    try:
        return cast(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{name} must be {cast.__name__}, got {value!r}") from e


@dataclass(frozen=True)
class Preset:
    """Dataset recipe of one of the four reference problems."""
    amplitudes: tuple[float, ...]
    n_frequencies: int
    omega_min: float
    omega_max: float
    description: str


PRESETS: dict[int, Preset] = {
    1: Preset((2.6,), 200, 0.4, 4.0, "single amplitude A=2.6"),
    2: Preset((10.0,), 200, 0.4, 4.0, "single amplitude A=10 (N_omega=600 variant via n_frequencies)"),
    3: Preset(tuple(amplitude_grid(0.4, 2.6, 8)), 200, 0.4, 3.0, "8 amplitudes in [0.4, 2.6]"),
    4: Preset(tuple(amplitude_grid(1.0, 10.0, 10)), 400, 0.4, 4.0, "10 amplitudes in [1, 10]"),
}


def default_architecture(preset: int | None, kind: str, n_frequencies: int, n_steps: int) -> tuple[int, ...]:
    """Reference architecture for a preset and model kind, resized to N_T."""
    if kind == "chain":
        width = 3 if preset == 1 else 100
        return (min(500, n_steps), width, 1)
    if kind == "wavkan":
        hidden = (240, 240)
    elif preset == 4:
        hidden = (1000,)
    elif preset == 2 and n_frequencies >= 600:
        hidden = (400, 400)
    else:
        hidden = (100,)
    return (n_steps, *hidden, n_steps)


@dataclass(frozen=True)
class IoPaths:
    out_dir: Path
    dataset: Path
    checkpoint: Path
    report: Path | None = None
    formats: tuple[str, ...] = REPORT_FORMATS

    def to_dict(self) -> dict:
        return {
            "out": str(self.out_dir),
            "dataset": str(self.dataset),
            "checkpoint": str(self.checkpoint),
            "report": str(self.report) if self.report else None,
            "formats": list(self.formats),
        }


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration of one CLI run."""
    recipe: DatasetRecipe
    preset: int | None
    model: ModelSpec
    train: TrainConfig
    io: IoPaths
    seed: int = 1
    threads: int = 1
    thresholds: tuple[float, ...] = Config.R2_THRESHOLDS
    n_partitions: int = Config.STABILITY_PARTITIONS
    widths: tuple[int, ...] = ()
    overlays: int = 4
    notices: tuple[str, ...] = field(default=(), compare=False)

    @property
    def dataset_id(self) -> str:
        name = f"preset{self.preset}" if self.preset else "custom"
        return f"{name}-N{self.recipe.chain.n_sites}-w{self.recipe.n_frequencies}"

    @property
    def model_id(self) -> str:
        return f"{self.model.label}-{'x'.join(str(w) for w in self.model.architecture)}"

    def to_dict(self) -> dict:
        return {
            "dataset": {"preset": self.preset, **self.recipe.to_dict()},
            "model": self.model.to_dict(),
            "train": self.train.to_dict(),
            "eval": {
                "thresholds": list(self.thresholds),
                "n_partitions": self.n_partitions,
                "widths": list(self.widths),
                "overlays": self.overlays,
            },
            "io": self.io.to_dict(),
            "seed": self.seed,
            "threads": self.threads,
        }


def _read_file(path: str | Path | None) -> dict:
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def _resolve_recipe(section: dict, preset: int | None, sites: int | None, notices: list[str]) -> DatasetRecipe:
    if preset is not None and preset not in PRESETS:
        raise ConfigError(f"Unknown preset {preset}; choose one of {sorted(PRESETS)}")
    if "amplitudes" in section and "amplitude_range" in section:
        raise ConfigError(
            f"dataset.amplitudes={section['amplitudes']} conflicts with "
            f"dataset.amplitude_range={section['amplitude_range']}; give only one"
        )

    values = {}
    if preset is not None:
        p = PRESETS[preset]
        values = {"amplitudes": p.amplitudes, "n_frequencies": p.n_frequencies,
                  "omega_min": p.omega_min, "omega_max": p.omega_max}

    explicit = dict(section)
    if "amplitude_range" in explicit:
        try:
            a1, am, m = explicit.pop("amplitude_range")
            explicit["amplitudes"] = tuple(amplitude_grid(float(a1), float(am), int(m)))
        except (TypeError, ValueError) as e:
            raise ConfigError(f"dataset.amplitude_range must be [A_1, A_m, m]: {e}") from e
    for key in ("amplitudes", "n_frequencies", "omega_min", "omega_max", "n_steps"):
        if key not in explicit:
            continue
        value = explicit[key]
        if key == "amplitudes":
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"dataset.amplitudes must be a list, got {value!r}")
            value = tuple(value)
        if preset is not None and key in values and value != values[key]:
            notices.append(f"dataset.{key}={value} overrides preset {preset} value {values[key]}")
        values[key] = value

    missing = {"amplitudes", "n_frequencies", "omega_min", "omega_max"} - set(values)
    if missing:
        raise ConfigError(f"dataset needs a preset or the fields {sorted(missing)}")

    n_sites = sites if sites is not None else _as_number(section.get("sites", Config.DEFAULT_SITES), int, "dataset.sites")
    try:
        chain = SpinChainParams(n_sites=n_sites)
        return DatasetRecipe(
            amplitudes=tuple(float(a) for a in values["amplitudes"]),
            n_frequencies=int(values["n_frequencies"]),
            omega_min=float(values["omega_min"]),
            omega_max=float(values["omega_max"]),
            n_steps=int(values.get("n_steps", 500)),
            chain=chain,
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid dataset configuration: {e}") from e


def _resolve_model(section: dict, preset: int | None, recipe: DatasetRecipe) -> ModelSpec:
    kind = section.get("kind", "kan")
    architecture = section.get("architecture")
    if architecture is None:
        if kind not in ("kan", "wavkan", "chain"):
            raise ConfigError(f"Unknown model kind {kind!r}; use kan, wavkan or chain")
        architecture = default_architecture(preset, kind, recipe.n_frequencies, recipe.n_steps)
        window = section.get("window")
        if kind == "chain" and window is not None:
            architecture = (_as_number(window, int, "model.window"), *architecture[1:])
    elif isinstance(architecture, str):
        architecture = parse_architecture(architecture)
    grid = SplineGrid.from_dict(section["grid"]) if section.get("grid") else SplineGrid()
    spec = ModelSpec(kind=kind, architecture=tuple(architecture), window=section.get("window"), grid=grid,
                     layer=section.get("layer", "spline"))
    spec.check_steps(recipe.n_steps)
    return spec


def _resolve_eval(section: dict) -> dict:
    thresholds = section.get("thresholds", Config.R2_THRESHOLDS)
    widths = section.get("widths", ())
    if not isinstance(thresholds, (list, tuple)) or not isinstance(widths, (list, tuple)):
        raise ConfigError(f"eval.thresholds and eval.widths must be lists, got {thresholds!r} and {widths!r}")
    resolved = {
        "thresholds": tuple(sorted(_as_number(t, float, "eval.thresholds entry") for t in thresholds)),
        "n_partitions": _as_number(section.get("n_partitions", Config.STABILITY_PARTITIONS), int, "eval.n_partitions"),
        "widths": tuple(_as_number(w, int, "eval.widths entry") for w in widths),
        "overlays": _as_number(section.get("overlays", 4), int, "eval.overlays"),
    }
    if resolved["n_partitions"] < 1:
        raise ConfigError(f"eval.n_partitions must be >= 1, got {resolved['n_partitions']}")
    if any(w < 1 for w in resolved["widths"]):
        raise ConfigError(f"eval.widths must be positive, got {list(resolved['widths'])}")
    return resolved


def _file_threads(data: dict) -> int | None:
    return _as_number(data["threads"], int, "threads") if data.get("threads") is not None else None


def load_run_config(
    path: str | Path | None = None,
    preset: int | None = None,
    seed: int | None = None,
    sites: int | None = None,
    threads: int | None = None,
    out: str | None = None,
) -> RunConfig:
    """
    Resolve a run configuration from a JSON file and CLI flags.

    Args:
        path: Config file, or None to run from flags alone.
        preset: --preset; wins over dataset.preset in the file.
        seed: --seed; partition seed and model seed.
        sites: --sites; chain length.
        threads: --threads; falls back to KAN_ETS_THREADS.
        out: --out; output directory.

    Raises:
        ConfigError: For unknown presets, conflicting fields or invalid values.
    """
    data = _read_file(path)
    unknown = set(data) - {"dataset", "model", "train", "eval", "io", "seed", "threads"}
    if unknown:
        raise ConfigError(f"Unknown config section(s): {', '.join(sorted(unknown))}")
    notices: list[str] = []

    dataset_section = dict(data.get("dataset", {}))
    file_preset = dataset_section.pop("preset", None)
    if preset is not None and file_preset is not None and preset != file_preset:
        notices.append(f"--preset {preset} overrides dataset.preset={file_preset}")
    resolved_preset = preset if preset is not None else file_preset
    recipe = _resolve_recipe(dataset_section, resolved_preset, sites, notices)

    model = _resolve_model(data.get("model", {}), resolved_preset, recipe)

    resolved_seed = seed if seed is not None else _as_number(data.get("seed", 1), int, "seed")
    train_section = dict(data.get("train", {}))
    if seed is not None or "seed" not in train_section:
        train_section["seed"] = resolved_seed
    train = TrainConfig.from_dict(train_section)

    eval_section = data.get("eval", {})
    io_section = data.get("io", {})
    out_dir = Config.get_output_dir(out or io_section.get("out"))

    config = RunConfig(
        recipe=recipe,
        preset=resolved_preset,
        model=model,
        train=train,
        io=IoPaths(out_dir=out_dir, dataset=out_dir, checkpoint=out_dir),
        seed=resolved_seed,
        threads=Config.get_threads(threads if threads is not None else _file_threads(data)),
        **_resolve_eval(eval_section),
        notices=tuple(notices),
    )
    formats = tuple(io_section.get("formats", REPORT_FORMATS))
    bad = set(formats) - set(REPORT_FORMATS)
    if bad:
        raise ConfigError(f"Unknown report format(s) {sorted(bad)}; use {list(REPORT_FORMATS)}")
    io = IoPaths(
        out_dir=out_dir,
        dataset=Path(io_section.get("dataset") or out_dir / f"dataset-{config.dataset_id}.json"),
        checkpoint=Path(io_section.get("checkpoint") or out_dir / f"model-{config.dataset_id}-{config.model_id}-s{resolved_seed}.json"),
        report=Path(io_section["report"]) if io_section.get("report") else None,
        formats=formats,
    )
    config = replace(config, io=io)

    for notice in notices:
        logger.info("Config override: %s", notice)
    return config
