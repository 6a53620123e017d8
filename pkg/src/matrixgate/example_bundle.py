"""The bundled reference scenario: a DevOps planning phase where three
humans and three LLM agents share six tasks.

The business analyst's cell on the product backlog task is authored in
the dual I/C form, so the bundle carries the prefer-consulted policy to
make itself resolvable. The roadmap task deliberately has no Accountable
actor: the Responsible human stands in under the default validation
mode, while strict mode reports it.
"""

from __future__ import annotations

from .model import (
    Actor,
    ActorKind,
    BundleConfig,
    MatrixBundle,
    Provenance,
    RaciMatrix,
    ResolutionPolicy,
    Role,
    Task,
)

EXAMPLE_FILENAME = "devops-planning.json"

_R = Role.RESPONSIBLE
_A = Role.ACCOUNTABLE
_C = Role.CONSULTED
_I = Role.INFORMED


def _llm(actor_id: str, name: str, capabilities) -> Actor:
    return Actor(
        id=actor_id,
        name=name,
        kind=ActorKind.LLM_AGENT,
        provenance=Provenance.THIRD_PARTY,
        capabilities=capabilities,
    )


def example_bundle() -> MatrixBundle:
    actors = (
        Actor(id="product_owner", name="Product Owner", kind=ActorKind.HUMAN),
        Actor(id="business_analyst", name="Business Analyst", kind=ActorKind.HUMAN),
        Actor(id="scrum_master", name="Scrum Master", kind=ActorKind.HUMAN),
        _llm("llm_agent_a", "LLM Agent A", {"product_backlog_management": 1.0}),
        _llm("llm_agent_b", "LLM Agent B", {"user_story_authoring": 1.0}),
        _llm("llm_agent_c", "LLM Agent C", {"sprint_planning": 1.0, "task_allocation": 1.0}),
    )
    tasks = (
        Task(
            id="requirements_elicitation",
            name="Requirements elicitation",
            stakeholder_facing=True,
            required_capabilities=frozenset({"requirements_elicitation"}),
            output_artifact_type="requirements_document",
        ),
        Task(
            id="create_product_roadmap",
            name="Create product roadmap",
            stakeholder_facing=True,
            required_capabilities=frozenset({"roadmap_authoring"}),
            depends_on=("requirements_elicitation",),
            output_artifact_type="product_roadmap",
        ),
        Task(
            id="create_features_user_stories",
            name="Create features and user stories",
            required_capabilities=frozenset({"user_story_authoring"}),
            depends_on=("create_product_roadmap",),
            output_artifact_type="user_stories",
        ),
        Task(
            id="create_product_backlog",
            name="Create product backlog",
            required_capabilities=frozenset({"product_backlog_management"}),
            depends_on=("create_features_user_stories",),
            output_artifact_type="product_backlog",
        ),
        Task(
            id="sprint_planning",
            name="Sprint planning",
            required_capabilities=frozenset({"sprint_planning"}),
            depends_on=("create_product_backlog",),
            output_artifact_type="sprint_plan",
        ),
        Task(
            id="task_allocation",
            name="Task allocation",
            required_capabilities=frozenset({"task_allocation"}),
            depends_on=("sprint_planning",),
            output_artifact_type="task_assignments",
        ),
    )
    # Rows list cells per actor in roster order: product owner, business
    # analyst, scrum master, then agents A, B, C. None means empty.
    rows = {
        "requirements_elicitation": (_A, _R, _I, _I, _C, _C),
        "create_product_roadmap": (_R, _I, _I, _C, None, _C),
        "create_features_user_stories": (_I, _A, _I, _C, _R, None),
        "create_product_backlog": (_A, frozenset({_I, _C}), _I, _R, None, None),
        "sprint_planning": (_I, None, _A, _C, None, _R),
        "task_allocation": (_I, None, _A, _C, None, _R),
    }
    cells = {}
    actor_ids = tuple(a.id for a in actors)
    for task_id, row in rows.items():
        for actor_id, value in zip(actor_ids, row):
            if value is None:
                continue
            roles = value if isinstance(value, frozenset) else frozenset({value})
            cells[(task_id, actor_id)] = roles
    return MatrixBundle(
        phase_name="DevOps planning",
        actors=actors,
        tasks=tasks,
        matrix=RaciMatrix(
            task_ids=tuple(t.id for t in tasks),
            actor_ids=actor_ids,
            cells=cells,
        ),
        config=BundleConfig(policy=ResolutionPolicy.PREFER_CONSULTED),
    )
