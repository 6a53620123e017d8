"""Operator commands: validate, pipeline, run, approvals, serving.

Exit codes: 0 clean, 1 blocking findings or failed/unfinished runs,
2 parse or usage errors. JSON output is byte-deterministic for a fixed
input (and seed, where a run is involved).
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path
from typing import Optional

import click

from .agents import HttpAgent, MockAgent
from .audit import LogicalClock, verify_audit_chain
from .bundle_io import ReportFormat, parse_bundle, render_report, report_to_doc, serialize_bundle
from .engine import RunEngine, TaskStatus
from .errors import (
    BundleParseError,
    MaxIterationsExceededError,
    UnknownPackError,
    UnresolvedCellError,
)
from .example_bundle import EXAMPLE_FILENAME, example_bundle
from .model import MatrixBundle, ResolutionPolicy, TrustworthyRequirement, ValidationMode
from .packs import ALL_PACKS, COVERAGE_DISCLAIMER, applicable_packs, requirement_coverage
from .pipeline import PipelineConfig, outcome_to_doc, run_pipeline
from .validation import validate_matrix
from .workflow import WorkflowSpec, parse_workflow, serialize_workflow

_MODES = [m.value for m in ValidationMode]
_POLICIES = [p.value for p in ResolutionPolicy]
_FORMATS = [ReportFormat.TEXT, ReportFormat.JSON]


def _fail_usage(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(2)


def _read_bundle(path: Path) -> MatrixBundle:
    try:
        return parse_bundle(path.read_bytes())
    except BundleParseError as exc:
        _fail_usage(f"{path}: {exc}")
    except OSError as exc:
        _fail_usage(str(exc))
    raise AssertionError("unreachable")


def _read_workflow(path: Path) -> WorkflowSpec:
    try:
        return parse_workflow(path.read_text(encoding="utf-8"))
    except BundleParseError as exc:
        _fail_usage(f"{path}: {exc}")
    except OSError as exc:
        _fail_usage(str(exc))
    raise AssertionError("unreachable")


def _parse_packs(bundle: MatrixBundle, packs_csv: Optional[str]) -> list:
    if packs_csv is None:
        return applicable_packs(bundle.actors)
    return [p for p in packs_csv.split(",") if p]


@click.group()
def cli() -> None:
    """Responsibility matrices for human/agent teams: validate them,
    derive workflows, and drive runs with human approval gates."""


@cli.command()
@click.argument("bundle_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--mode", type=click.Choice(_MODES), default=ValidationMode.COMPAT.value,
              show_default=True, help="Which reading of the no-accountable exception applies.")
@click.option("--packs", "packs_csv", default=None, metavar="IDS",
              help="Comma-separated rule pack ids. Default: packs applicable to the roster.")
@click.option("--policy", type=click.Choice(_POLICIES), default=None,
              help="Override the bundle's dual-role resolution policy.")
@click.option("--format", "fmt", type=click.Choice(_FORMATS), default=ReportFormat.TEXT,
              show_default=True)
@click.option("--coverage", is_flag=True,
              help="Also report which trustworthiness requirements the run exercised.")
def validate(bundle_path: Path, mode: str, packs_csv: Optional[str], policy: Optional[str],
             fmt: str, coverage: bool) -> None:
    """Check a bundle's matrix against the core constraints and rule packs."""
    bundle = _read_bundle(bundle_path)
    try:
        report = validate_matrix(
            bundle,
            mode=ValidationMode(mode),
            packs=_parse_packs(bundle, packs_csv),
            policy=ResolutionPolicy(policy) if policy else None,
        )
    except (UnknownPackError, UnresolvedCellError) as exc:
        _fail_usage(str(exc))
        return
    if fmt == ReportFormat.JSON:
        doc = report_to_doc(report)
        if coverage:
            verdicts = requirement_coverage(report)
            doc["coverage"] = {
                "requirements": {r.value: verdicts[r].value for r in TrustworthyRequirement},
                "disclaimer": COVERAGE_DISCLAIMER,
            }
        click.echo(json.dumps(doc, indent=2, ensure_ascii=False))
    else:
        click.echo(render_report(report, fmt))
        if coverage:
            verdicts = requirement_coverage(report)
            click.echo("coverage:")
            for requirement in TrustworthyRequirement:
                click.echo(f"  {requirement.value}: {verdicts[requirement].value}")
            click.echo(f"disclaimer: {COVERAGE_DISCLAIMER}")
    sys.exit(0 if report.is_valid else 1)


@cli.command()
@click.argument("bundle_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--mode", type=click.Choice(_MODES), default=ValidationMode.COMPAT.value, show_default=True)
@click.option("--threshold", type=float, default=0.7, show_default=True,
              help="Minimum agent proficiency for a task to stay automatable.")
@click.option("--max-iterations", type=int, default=3, show_default=True,
              help="Bound on workflow strengthening passes.")
@click.option("--policy", type=click.Choice(_POLICIES), default=None)
@click.option("--audit/--no-audit", "audit_enabled", default=True, show_default=True,
              help="Whether synthesized workflows log an audit trail.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Workflow file to write on success. Default: <bundle>.workflow.json")
def pipeline(bundle_path: Path, mode: str, threshold: float, max_iterations: int,
             policy: Optional[str], audit_enabled: bool, out_path: Optional[Path]) -> None:
    """Run the staged pipeline from a bundle to a validated workflow."""
    bundle = _read_bundle(bundle_path)
    try:
        config = PipelineConfig(
            mode=ValidationMode(mode),
            threshold=threshold,
            max_iterations=max_iterations,
            policy=ResolutionPolicy(policy) if policy else None,
            audit_enabled=audit_enabled,
        )
    except ValueError as exc:
        _fail_usage(str(exc))
        return
    try:
        outcome = run_pipeline(bundle, config)
    except MaxIterationsExceededError as exc:
        if exc.outcome is not None:
            click.echo(json.dumps(outcome_to_doc(exc.outcome), indent=2, ensure_ascii=False))
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except UnresolvedCellError as exc:
        _fail_usage(str(exc))
        return
    click.echo(json.dumps(outcome_to_doc(outcome), indent=2, ensure_ascii=False))
    if outcome.workflow is None:
        click.echo("error: matrix validation failed; no workflow written", err=True)
        sys.exit(1)
    target = out_path or bundle_path.with_suffix(".workflow.json")
    target.write_text(serialize_workflow(outcome.workflow), encoding="utf-8")
    click.echo(f"workflow written to {target}", err=True)
    sys.exit(0)


def _make_adapter(spec: str):
    if spec == "mock":
        return MockAgent()
    if spec.startswith("http://") or spec.startswith("https://"):
        return HttpAgent(spec)
    _fail_usage(f"--adapter must be mock or an http(s) URL, got {spec!r}")


def _approve_everything(engine: RunEngine) -> None:
    while not engine.is_finished():
        pending = engine.pending_approvals()
        if not pending:
            break  # failed tasks leave dependents permanently blocked
        for entry in pending:
            for actor_id in entry["accountable_actors"]:
                engine.record_verdict(entry["task_id"], actor_id, "approve")
        engine.advance_until_blocked()


def _prompt_verdicts(engine: RunEngine) -> None:
    while not engine.is_finished():
        pending = engine.pending_approvals()
        if not pending:
            break
        for entry in pending:
            artifact = entry["artifact_version"]
            click.echo(f"\ntask {entry['task_id']} (revision {artifact['version']}) "
                       f"by {entry['responsible_actor']}")
            click.echo(f"  artifact {artifact['digest'][:16]}: {artifact['content'][:200]}")
            for note in entry["consultation"]:
                click.echo(f"  consulted {note['actor_id']}: {note['content'][:120]}")
            for actor_id in entry["accountable_actors"]:
                verdict = click.prompt(
                    f"  verdict of {actor_id}",
                    type=click.Choice(["approve", "reject"]),
                )
                comment = click.prompt("  comment", default="", show_default=False)
                engine.record_verdict(entry["task_id"], actor_id, verdict, comment or None)
                if verdict == "reject":
                    break  # the task went back to execution; revisit after advance
        engine.advance_until_blocked()


@cli.command()
@click.argument("workflow_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--adapter", "adapter_spec", default="mock", show_default=True,
              metavar="mock|URL", help="Who produces agent artifacts: mock or an HTTP adapter URL.")
@click.option("--auto-approve/--interactive", "auto_approve", default=True,
              help="Approve every gate automatically, or prompt per pending approval.")
@click.option("--data-dir", envvar="MATRIXGATE_DATA_DIR",
              type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Directory for audit logs. Env: MATRIXGATE_DATA_DIR.")
@click.option("--seed", type=int, default=None,
              help="Fix the run id and timestamps for reproducible runs.")
@click.option("--format", "fmt", type=click.Choice(_FORMATS), default=ReportFormat.TEXT,
              show_default=True)
def run(workflow_path: Path, adapter_spec: str, auto_approve: bool,
        data_dir: Optional[Path], seed: Optional[int], fmt: str) -> None:
    """Execute a workflow with the chosen adapter and approval style."""
    spec = _read_workflow(workflow_path)
    adapter = _make_adapter(adapter_spec)
    run_id = None
    clock = None
    if seed is not None:
        run_id = "run-" + hashlib.sha256(f"seed:{seed}".encode("utf-8")).hexdigest()[:12]
        clock = LogicalClock()
    if data_dir is not None:
        data_dir.mkdir(parents=True, exist_ok=True)
    engine = RunEngine(spec, adapter=adapter, clock=clock, data_dir=data_dir, run_id=run_id)
    engine.advance_until_blocked()
    if auto_approve:
        _approve_everything(engine)
    else:
        _prompt_verdicts(engine)

    doc = engine.state_doc()
    bad_seq = verify_audit_chain(engine.log.events)
    doc["audit"] = {
        "enabled": spec.audit_enabled,
        "ok": bad_seq is None,
        "first_corrupt_seq": bad_seq,
    }
    if fmt == ReportFormat.JSON:
        click.echo(json.dumps(doc, indent=2, ensure_ascii=False))
    else:
        click.echo(f"run {engine.run_id}")
        for task_id, task_doc in doc["tasks"].items():
            click.echo(f"  {task_id}: {task_doc['status']} (revision {task_doc['revision']})")
        click.echo(f"audit chain: {'ok' if bad_seq is None else f'corrupt at seq {bad_seq}'}")
        if engine.log.path is not None:
            click.echo(f"audit log: {engine.log.path}")
    unfinished = [
        task_id for task_id, task_doc in doc["tasks"].items()
        if task_doc["status"] != TaskStatus.COMPLETE.value
    ]
    if unfinished:
        click.echo(f"error: unfinished task(s): {', '.join(unfinished)}", err=True)
        sys.exit(1)
    sys.exit(0)


@cli.command("init-example")
@click.argument("directory", type=click.Path(file_okay=False, path_type=Path), default=".")
@click.option("--force", is_flag=True, help="Overwrite an existing file.")
def init_example(directory: Path, force: bool) -> None:
    """Write the bundled six-task planning example into DIRECTORY."""
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / EXAMPLE_FILENAME
    if target.exists() and not force:
        click.echo(f"error: {target} already exists (use --force to overwrite)", err=True)
        sys.exit(1)
    target.write_text(serialize_bundle(example_bundle()), encoding="utf-8")
    click.echo(str(target))


@cli.group()
def packs() -> None:
    """Inspect the built-in rule packs."""


@packs.command("list")
@click.option("--format", "fmt", type=click.Choice(_FORMATS), default=ReportFormat.TEXT,
              show_default=True)
def packs_list(fmt: str) -> None:
    """Print every pack with its rules, severities, and requirement tags."""
    if fmt == ReportFormat.JSON:
        doc = []
        for pack in ALL_PACKS:
            doc.append({
                "id": pack.id,
                "description": pack.description,
                "rules": [
                    {
                        "id": rule.id,
                        "severity": rule.severity.value,
                        "scope": rule.scope.value,
                        "description": rule.description,
                        "requirements": [
                            r.value for r in TrustworthyRequirement if r in rule.requirements
                        ],
                    }
                    for rule in pack.rules
                ],
            })
        click.echo(json.dumps({"packs": doc}, indent=2, ensure_ascii=False))
        return
    for pack in ALL_PACKS:
        click.echo(f"{pack.id}: {pack.description}")
        for rule in pack.rules:
            tags = ",".join(r.value for r in TrustworthyRequirement if r in rule.requirements)
            click.echo(f"  {rule.id} {rule.severity.value} {rule.scope.value} [{tags}] {rule.description}")


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, envvar="MATRIXGATE_PORT", default=8000, show_default=True,
              help="Env: MATRIXGATE_PORT.")
@click.option("--data-dir", envvar="MATRIXGATE_DATA_DIR",
              type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Directory for audit logs. Env: MATRIXGATE_DATA_DIR.")
def serve(host: str, port: int, data_dir: Optional[Path]) -> None:
    """Serve the HTTP API (identity is declared, not authenticated)."""
    import uvicorn

    from .service import create_app

    if data_dir is not None:
        data_dir.mkdir(parents=True, exist_ok=True)
    uvicorn.run(create_app(data_dir), host=host, port=port)


main = cli
