"""Copter command line: planning, model fitting, recommendation and simulation workflows."""

import logging
import sys
from pathlib import Path

import click
import numpy as np
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler

from config.settings import APP_NAME, APP_VERSION, LOG_LEVELS, Estimator, Settings, load_settings
from models.choice import CHOICE_FORMAT_VERSION
from models.forest import FOREST_FORMAT_VERSION, ForestTarget
from models.network import Query
from models.simulation import REPORT_FORMAT_VERSION, SimReport
from models.traveler import TravelerProfile
from reports import f1_frame, importance_frame, render_csv, render_frame, render_table
from services.adoption_tools import adoption_for, sample_intercept
from services.choice_tools import acceptability, fit_mnl, load_choice_data, load_choice_model, save_choice_model
from services.copter_service import ChoiceEstimator, Copter, ForestEstimator
from services.graph_service import GRAPH_FORMAT_VERSION, load_graph_dir
from services.likelihood_tools import (
    baseline_predict,
    f1_scores,
    gini_importance,
    load_dataset,
    load_forest,
    predict_labels,
    save_forest,
    synthesize_dataset,
    train_forest,
)
from services.mode_language import compile_dfa, load_languages_file
from services.planner_service import PlannerService
from services.simulation_tools import SimulationService, load_scenario
from utils.errors import CopterError
from utils.helpers import dumps_canonical, read_json, write_json

logger = logging.getLogger(__name__)

VERSION_MESSAGE = (
    f"%(prog)s %(version)s (graph format {GRAPH_FORMAT_VERSION}, choice model format {CHOICE_FORMAT_VERSION}, "
    f"forest format {FOREST_FORMAT_VERSION}, report format {REPORT_FORMAT_VERSION})"
)


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=LOG_LEVELS[level],
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False, show_time=False)],
        force=True,
    )


def _emit(payload: object, out: Path | None) -> None:
    """Canonical JSON to a file, or to standard output."""
    if out is not None:
        write_json(out, payload)
        logger.info(f"Wrote {out}")
    else:
        click.echo(dumps_canonical(payload), nl=False)


def _require_file(path: Path) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"{path}: no such file or directory")
    return path


def _query(origin: str, destination: str, depart: float, deadline: float) -> Query:
    return Query(origin=origin, destination=destination, start_s=depart, deadline_s=deadline)


@click.group()
@click.version_option(APP_VERSION, prog_name=APP_NAME, message=VERSION_MESSAGE)
@click.option("--config", "config_path", type=click.Path(path_type=Path), help="JSON configuration file.")
@click.option("--set", "overrides", multiple=True, metavar="KEY.PATH=VALUE", help="Override one configuration value.")
@click.pass_context
def cli(ctx: click.Context, config_path: Path | None, overrides: tuple[str, ...]) -> None:
    """Acceptable multi-modal planning for energy reduction."""
    settings = load_settings(_require_file(config_path) if config_path else None, overrides)
    _configure_logging(settings.log_level)
    ctx.obj = settings


@cli.command("plan")
@click.option("--graph", "graph_dir", required=True, type=click.Path(path_type=Path), help="Directory with nodes.csv, edges.csv, schedules.csv.")
@click.option("--from", "origin", required=True, help="Origin node id.")
@click.option("--to", "destination", required=True, help="Destination node id.")
@click.option("--depart", required=True, type=float, help="Departure time, seconds since midnight.")
@click.option("--deadline", required=True, type=float, help="Latest arrival, seconds since midnight.")
@click.option("--lang", "--language", "language", default="w*b+w*", show_default=True, help="Mode regular expression.")
@click.option("--out", type=click.Path(path_type=Path), help="Write the plan here instead of standard output.")
@click.pass_obj
def plan_command(settings: Settings, graph_dir: Path, origin: str, destination: str, depart: float, deadline: float, language: str, out: Path | None) -> None:
    """Earliest-arrival plan whose mode word matches LANGUAGE."""
    graph = load_graph_dir(_require_file(graph_dir))
    planner = PlannerService(graph, settings.planner.search, settings.planner.fare_per_boarding)
    found = planner.plan(_query(origin, destination, depart, deadline), compile_dfa(language))
    if found is None:
        logger.warning(f"No plan from {origin} to {destination} matching {language!r} before {deadline:g}s")
    _emit({"language": language, "plan": found.to_summary() if found else None}, out)


@cli.command("fit-choice")
@click.option("--data", required=True, type=click.Path(path_type=Path), help="Long-format choice CSV.")
@click.option("--reference", default=None, help="Reference alternative (default: d when present).")
@click.option("--out", required=True, type=click.Path(path_type=Path), help="Model JSON to write.")
def fit_choice_command(data: Path, reference: str | None, out: Path) -> None:
    """Fit a multinomial logit model by maximum likelihood."""
    model = fit_mnl(load_choice_data(_require_file(data)), reference=reference)
    save_choice_model(model, out)


@cli.command("train-forest")
@click.option("--data", type=click.Path(path_type=Path), help="Training CSV (feature columns plus label).")
@click.option("--synthetic", type=click.IntRange(min=1), help="Train on this many synthetic survey rows instead of --data.")
@click.option("--target", type=click.Choice([t.value for t in ForestTarget]), default="mode", show_default=True)
@click.option("--seed", required=True, type=int, help="Training seed.")
@click.option("--out", required=True, type=click.Path(path_type=Path), help="Model JSON to write.")
@click.pass_obj
def train_forest_command(settings: Settings, data: Path | None, synthetic: int | None, target: str, seed: int, out: Path) -> None:
    """Train the mode or category likelihood forest."""
    if (data is None) == (synthetic is None):
        raise click.UsageError("give exactly one of --data and --synthetic")
    forest_target = ForestTarget(target)
    dataset = load_dataset(_require_file(data), forest_target) if data else synthesize_dataset(synthetic, seed, forest_target)
    save_forest(train_forest(dataset, settings.forest, seed), out)


@cli.command("eval-forest")
@click.option("--model", "model_path", required=True, type=click.Path(path_type=Path), help="Forest JSON.")
@click.option("--data", required=True, type=click.Path(path_type=Path), help="Evaluation CSV.")
@click.option("--seed", default=0, show_default=True, type=int, help="Seed of the weighted-random baseline.")
@click.option("--f1-out", type=click.Path(path_type=Path), help="F1 report CSV (default: standard output).")
@click.option("--importance-out", type=click.Path(path_type=Path), help="Gini importance CSV (default: standard output).")
def eval_forest_command(model_path: Path, data: Path, seed: int, f1_out: Path | None, importance_out: Path | None) -> None:
    """F1 of the forest against the two baselines, and Gini feature importance."""
    model = load_forest(_require_file(model_path))
    dataset = load_dataset(_require_file(data), model.target)
    reports = {
        "forest": f1_scores(predict_labels(model, dataset.features), dataset.labels),
        "most_frequent": f1_scores(baseline_predict(dataset.labels, "most_frequent", seed), dataset.labels),
        "weighted_random": f1_scores(baseline_predict(dataset.labels, "weighted_random", seed), dataset.labels),
    }
    for path, text in ((f1_out, render_frame(f1_frame(reports, baseline_seed=seed))), (importance_out, render_frame(importance_frame(gini_importance(model))))):
        if path is None:
            click.echo(text, nl=False)
        else:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")


@cli.command("acceptability")
@click.option("--pr-r", required=True, type=click.FloatRange(0.0, 1.0), help="Probability of the recommended mode.")
@click.option("--pr-u", required=True, type=click.FloatRange(0.0, 1.0), help="Probability of the usual mode.")
@click.option("--intercept", type=float, help="Person intercept; adds the adoption probability.")
@click.pass_obj
def acceptability_command(settings: Settings, pr_r: float, pr_u: float, intercept: float | None) -> None:
    """Switching gain, odds and probability, optionally with the adoption probability."""
    acc = acceptability(pr_r, pr_u)
    payload: dict[str, object] = {"acceptability": acc.model_dump()}
    if intercept is not None:
        payload["adoption_prob"] = adoption_for(settings.adoption.model(), intercept, acc)
    _emit(payload, None)


@cli.command("recommend")
@click.option("--graph", "graph_dir", required=True, type=click.Path(path_type=Path))
@click.option("--models", "models_dir", required=True, type=click.Path(path_type=Path), help="Directory with forest.json and/or choice.json.")
@click.option("--profile", "profile_path", required=True, type=click.Path(path_type=Path), help="Traveler profile JSON.")
@click.option("--from", "origin", required=True)
@click.option("--to", "destination", required=True)
@click.option("--depart", required=True, type=float)
@click.option("--deadline", required=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int, help="Seed of the person intercept draw.")
@click.option("--out", type=click.Path(path_type=Path))
@click.pass_obj
def recommend_command(
    settings: Settings, graph_dir: Path, models_dir: Path, profile_path: Path,
    origin: str, destination: str, depart: float, deadline: float, seed: int, out: Path | None,
) -> None:
    """Maximum expected energy saving alternative to driving."""
    graph = load_graph_dir(_require_file(graph_dir))
    if settings.copter.estimator is Estimator.MNL:
        estimator = ChoiceEstimator(load_choice_model(_require_file(models_dir / "choice.json")))
    else:
        estimator = ForestEstimator(load_forest(_require_file(models_dir / "forest.json")))
    profile = TravelerProfile.model_validate(read_json(_require_file(profile_path)))
    languages = load_languages_file(settings.languages_file) if settings.languages_file else None
    adoption_model = settings.adoption.model()
    planner = PlannerService(graph, settings.planner.search, settings.planner.fare_per_boarding)
    copter = Copter(planner, estimator, adoption_model, settings.energy, settings.copter, languages)
    intercept = sample_intercept(adoption_model, np.random.default_rng(seed))
    recommendation = copter.recommend(_query(origin, destination, depart, deadline), profile, intercept)
    _emit({
        "seed": seed,
        "intercept": intercept.value,
        "recommendation": recommendation.to_summary() if recommendation else None,
    }, out)


@cli.command("simulate")
@click.option("--scenario", "scenario_path", required=True, type=click.Path(path_type=Path), help="Scenario JSON.")
@click.option("--out", required=True, type=click.Path(path_type=Path), help="Report JSON to write.")
@click.pass_obj
def simulate_command(settings: Settings, scenario_path: Path, out: Path) -> None:
    """Run the baseline and comparison conditions of a scenario."""
    scenario = load_scenario(_require_file(scenario_path))
    report = SimulationService.from_settings(scenario, settings).run_experiment()
    write_json(out, report.model_dump(mode="json"))


@cli.command("report")
@click.option("--in", "report_path", required=True, type=click.Path(path_type=Path), help="Report JSON from simulate.")
@click.option("--format", "fmt", type=click.Choice(["csv", "table"]), default="table", show_default=True)
def report_command(report_path: Path, fmt: str) -> None:
    """Fuel/delay changes with 95% intervals, and mode shares of the influenced population."""
    report = SimReport.model_validate(read_json(_require_file(report_path)))
    click.echo(render_csv(report) if fmt == "csv" else render_table(report), nl=False)


def main(argv: list[str] | None = None) -> int:
    """Run the CLI: 0 on success, 1 on usage errors, 2 on data or model errors."""
    try:
        rv = cli.main(args=argv, prog_name=APP_NAME, standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return 1
    except click.Abort:
        click.echo("Aborted.", err=True)
        return 1
    except click.ClickException as e:
        e.show()
        return 2
    except (CopterError, ValidationError, OSError, ValueError) as e:
        click.echo(f"error: {e}", err=True)
        return 2
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":
    sys.exit(main())
