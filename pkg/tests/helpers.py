"""Shared builders for the test suite."""

from matrixgate import (
    Actor,
    ActorKind,
    BundleConfig,
    MatrixBundle,
    Provenance,
    RaciMatrix,
    Role,
    Task,
)

ROLE_BY_LETTER = {
    "R": Role.RESPONSIBLE,
    "A": Role.ACCOUNTABLE,
    "C": Role.CONSULTED,
    "I": Role.INFORMED,
}


def human(actor_id, name=None):
    return Actor(id=actor_id, name=name or actor_id.replace("_", " "), kind=ActorKind.HUMAN)


def llm(actor_id, capabilities=None, provenance=Provenance.THIRD_PARTY, name=None):
    return Actor(
        id=actor_id,
        name=name or actor_id.replace("_", " "),
        kind=ActorKind.LLM_AGENT,
        provenance=provenance,
        capabilities=capabilities or {},
    )


def cells_from_grid(grid):
    """{task_id: {actor_id: "R" | "I/C" | ...}} to sparse role-set cells."""
    cells = {}
    for task_id, row in grid.items():
        for actor_id, letters in row.items():
            if not letters:
                continue
            roles = frozenset(ROLE_BY_LETTER[part] for part in letters.split("/"))
            cells[(task_id, actor_id)] = roles
    return cells


def grid_bundle(actors, tasks, grid, phase="demo phase", config=None):
    """Bundle from shorthand: tasks may be Task objects or bare ids."""
    tasks = tuple(t if isinstance(t, Task) else Task(id=t, name=t.replace("_", " ")) for t in tasks)
    matrix = RaciMatrix(
        task_ids=tuple(t.id for t in tasks),
        actor_ids=tuple(a.id for a in actors),
        cells=cells_from_grid(grid),
    )
    return MatrixBundle(
        phase_name=phase,
        actors=tuple(actors),
        tasks=tasks,
        matrix=matrix,
        config=config or BundleConfig(),
    )


def finding_triples(report):
    """Findings reduced to comparable (rule_id, task_id, actor_id) triples."""
    return [(f.rule_id, f.task_id, f.actor_id) for f in report.findings]
