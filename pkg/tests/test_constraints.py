"""The three core rules: per-case behavior, messages, and mode relation."""

from hypothesis import given
from hypothesis import strategies as st

from matrixgate import (
    RaciMatrix,
    Role,
    Severity,
    TrustworthyRequirement,
    ValidationMode,
    check_c1,
    check_c2,
    check_c3,
    validate_matrix,
)
from helpers import cells_from_grid, finding_triples, grid_bundle, human, llm

REQ = TrustworthyRequirement


def small_bundle(grid, actors=None):
    actors = actors or [human("owner"), llm("agent_a"), llm("agent_b")]
    return grid_bundle(actors, sorted(grid), grid)


class TestC1:
    def test_fires_per_task_without_responsible(self):
        bundle = small_bundle({"t1": {"owner": "A"}, "t2": {"owner": "R"}})
        findings = check_c1(bundle.resolved_matrix())
        assert [(f.rule_id, f.task_id) for f in findings] == [("C1", "t1")]
        assert findings[0].severity is Severity.ERROR
        assert findings[0].requirements == frozenset({REQ.ACCOUNTABILITY})
        assert findings[0].message == "no actor is Responsible for this task"

    def test_any_responsible_satisfies(self):
        bundle = small_bundle({"t1": {"agent_a": "R"}})
        assert check_c1(bundle.resolved_matrix()) == []


class TestC2:
    def test_accountable_satisfies_both_modes(self):
        bundle = small_bundle({"t1": {"owner": "A", "agent_a": "R"}})
        for mode in ValidationMode:
            assert check_c2(bundle.resolved_matrix(), bundle.actors, mode) == []

    def test_human_responsible_exception_in_compat(self):
        # no Accountable, human holds R, an agent is Consulted: the
        # default mode lets the human stand in, strict does not
        bundle = small_bundle({"t1": {"owner": "R", "agent_a": "C"}})
        matrix = bundle.resolved_matrix()
        assert check_c2(matrix, bundle.actors, ValidationMode.COMPAT) == []
        strict = check_c2(matrix, bundle.actors, ValidationMode.STRICT)
        assert [(f.rule_id, f.task_id) for f in strict] == [("C2", "t1")]
        assert strict[0].message == (
            "no actor is Accountable; the exception needs every "
            "LLM-agent cell on this task to be Informed or empty"
        )

    def test_strict_exception_with_quiet_agents(self):
        # agent cells Informed or empty: strict grants the exception too
        bundle = small_bundle({"t1": {"owner": "R", "agent_a": "I"}})
        matrix = bundle.resolved_matrix()
        for mode in ValidationMode:
            assert check_c2(matrix, bundle.actors, mode) == []

    def test_no_human_responsible_fails_both_modes(self):
        bundle = small_bundle({"t1": {"agent_a": "R"}})
        matrix = bundle.resolved_matrix()
        for mode in ValidationMode:
            findings = check_c2(matrix, bundle.actors, mode)
            assert [(f.rule_id, f.task_id) for f in findings] == [("C2", "t1")]
            assert findings[0].message == "no actor is Accountable and no Responsible human can stand in"

    def test_requirement_tags(self):
        bundle = small_bundle({"t1": {"agent_a": "R"}})
        finding = check_c2(bundle.resolved_matrix(), bundle.actors, ValidationMode.COMPAT)[0]
        assert finding.requirements == frozenset({REQ.ACCOUNTABILITY, REQ.HUMAN_AGENCY_OVERSIGHT})


class TestC3:
    def test_llm_responsible_without_human_accountable(self):
        bundle = small_bundle({"t1": {"owner": "C", "agent_a": "R"}})
        findings = check_c3(bundle.resolved_matrix(), bundle.actors)
        assert [(f.rule_id, f.task_id, f.actor_id) for f in findings] == [("C3", "t1", "agent_a")]
        assert findings[0].requirements == frozenset({REQ.HUMAN_AGENCY_OVERSIGHT, REQ.ACCOUNTABILITY})

    def test_human_accountable_suppresses(self):
        bundle = small_bundle({"t1": {"owner": "A", "agent_a": "R"}})
        assert check_c3(bundle.resolved_matrix(), bundle.actors) == []

    def test_llm_accountable_does_not_suppress(self):
        bundle = small_bundle({"t1": {"agent_a": "R", "agent_b": "A"}})
        findings = check_c3(bundle.resolved_matrix(), bundle.actors)
        assert [(f.task_id, f.actor_id) for f in findings] == [("t1", "agent_a")]

    def test_points_at_first_offending_agent_in_declaration_order(self):
        bundle = small_bundle({"t1": {"agent_b": "R", "agent_a": "R"}})
        findings = check_c3(bundle.resolved_matrix(), bundle.actors)
        assert findings[0].actor_id == "agent_a"

    def test_human_responsible_alone_is_fine(self):
        bundle = small_bundle({"t1": {"owner": "R"}})
        assert check_c3(bundle.resolved_matrix(), bundle.actors) == []


class TestValidateMatrix:
    def test_example_bundle_default_mode_is_clean(self, bundle):
        report = validate_matrix(bundle)
        assert report.is_valid
        assert report.status == "valid"
        assert report.findings == ()
        assert report.packs == ("framework-core",)
        assert report.mode is ValidationMode.COMPAT

    def test_example_bundle_strict_mode_flags_the_roadmap(self, bundle):
        report = validate_matrix(bundle, mode=ValidationMode.STRICT)
        assert not report.is_valid
        assert report.status == "invalid"
        assert finding_triples(report) == [("C2", "create_product_roadmap", None)]
        assert report.errors() == report.findings

    def test_findings_sorted_by_task_declaration_order(self):
        # authored so t2 precedes t1 in task order; findings follow suit
        bundle = grid_bundle(
            [human("owner"), llm("agent_a")],
            ["t2", "t1"],
            {"t2": {"agent_a": "R"}, "t1": {}},
        )
        report = validate_matrix(bundle)
        assert [f.task_id for f in report.findings] == ["t2", "t2", "t1", "t1"]
        assert [f.rule_id for f in report.findings] == ["C2", "C3", "C1", "C2"]


# Strategy: 2 tasks x (1 human + 2 agents), single-role cells.
_CELL = st.sampled_from([None, Role.RESPONSIBLE, Role.ACCOUNTABLE, Role.CONSULTED, Role.INFORMED])
_ACTORS = [human("owner"), llm("agent_a"), llm("agent_b")]
_TASKS = ("t1", "t2")
_PAIRS = [(t, a.id) for t in _TASKS for a in _ACTORS]


def _bundle_from_assignment(assignment):
    cells = {pair: frozenset({role}) for pair, role in zip(_PAIRS, assignment) if role}
    grid = {}
    for (task_id, actor_id), roles in cells.items():
        grid.setdefault(task_id, {})[actor_id] = next(iter(roles)).value
    return grid_bundle(_ACTORS, list(_TASKS), grid)


@given(st.tuples(*[_CELL] * len(_PAIRS)))
def test_strict_valid_implies_compat_valid(assignment):
    bundle = _bundle_from_assignment(assignment)
    strict = validate_matrix(bundle, mode=ValidationMode.STRICT)
    compat = validate_matrix(bundle, mode=ValidationMode.COMPAT)
    if strict.is_valid:
        assert compat.is_valid
    # and compat findings are a subset of strict findings
    assert set(finding_triples(compat)) <= set(finding_triples(strict))


@given(st.tuples(*[_CELL] * len(_PAIRS)), st.integers(0, len(_PAIRS) - 1))
def test_adding_responsible_never_introduces_c1(assignment, position):
    before = _bundle_from_assignment(assignment)
    promoted = list(assignment)
    promoted[position] = Role.RESPONSIBLE
    after = _bundle_from_assignment(tuple(promoted))
    c1_before = {f.task_id for f in check_c1(before.resolved_matrix())}
    c1_after = {f.task_id for f in check_c1(after.resolved_matrix())}
    assert c1_after <= c1_before
