"""Workflow templates: chain grammar, the task graph, and the file format."""

import dataclasses
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from matrixgate import (
    BundleParseError,
    CyclicDependencyError,
    Gate,
    GateKind,
    Quorum,
    TaskChain,
    WorkflowSpec,
    example_bundle,
    parse_workflow,
    serialize_workflow,
    synthesize_workflow,
    workflow_to_doc,
)
from helpers import human, llm


def chain(task_id, *gates):
    return TaskChain(
        task_id=task_id,
        task_name=task_id.replace("_", " "),
        output_artifact_type="document",
        gates=tuple(Gate(GateKind(kind), actor) for kind, actor in gates),
    )


def spec(chains, actors=None, **kwargs):
    actors = actors or (human("owner"), human("analyst"), llm("agent_a"))
    return WorkflowSpec(phase_name="demo phase", actors=tuple(actors), chains=tuple(chains), **kwargs)


class TestChainGrammar:
    def test_full_chain(self):
        c = chain(
            "t1",
            ("consult", "analyst"),
            ("execute", "agent_a"),
            ("validate", "owner"),
            ("notify", "analyst"),
        )
        assert c.consult_actors == ("analyst",)
        assert c.execute_actor == "agent_a"
        assert c.validate_actors == ("owner",)
        assert c.notify_actors == ("analyst",)
        assert not c.auto_validates

    def test_execute_only_chain_auto_validates(self):
        c = chain("t1", ("execute", "owner"))
        assert c.auto_validates

    def test_exactly_one_execute_gate(self):
        with pytest.raises(ValueError, match="exactly one execute gate"):
            chain("t1", ("consult", "owner"))
        # a second execute gate is out of order by the chain grammar
        with pytest.raises(ValueError, match="gate order|execute gate"):
            chain("t1", ("execute", "owner"), ("execute", "agent_a"))

    def test_gate_order_enforced(self):
        for gates in (
            [("validate", "owner"), ("execute", "agent_a")],
            [("execute", "agent_a"), ("consult", "owner")],
            [("notify", "owner"), ("execute", "agent_a")],
            [("execute", "agent_a"), ("notify", "owner"), ("validate", "owner")],
        ):
            with pytest.raises(ValueError, match="gate order"):
                chain("t1", *gates)

    def test_duplicate_gate_rejected(self):
        with pytest.raises(ValueError, match="duplicate validate gate"):
            chain("t1", ("execute", "agent_a"), ("validate", "owner"), ("validate", "owner"))

    def test_same_actor_may_hold_different_gates(self):
        c = chain("t1", ("consult", "owner"), ("execute", "agent_a"), ("validate", "owner"))
        assert c.consult_actors == ("owner",)
        assert c.validate_actors == ("owner",)


class TestWorkflowSpec:
    def test_gate_actor_must_be_in_roster(self):
        with pytest.raises(ValueError, match="unknown actor 'ghost'"):
            spec([chain("t1", ("execute", "ghost"))])

    def test_duplicate_chains_rejected(self):
        with pytest.raises(ValueError, match="duplicate task chains"):
            spec([chain("t1", ("execute", "owner")), chain("t1", ("execute", "analyst"))])

    def test_edges_must_reference_known_tasks(self):
        with pytest.raises(ValueError, match="unknown task"):
            spec([chain("t1", ("execute", "owner"))], edges=(("t1", "ghost"),))

    def test_edge_cycle_rejected(self):
        chains = [chain("t1", ("execute", "owner")), chain("t2", ("execute", "owner"))]
        with pytest.raises(CyclicDependencyError):
            spec(chains, edges=(("t1", "t2"), ("t2", "t1")))

    def test_graph_navigation(self):
        chains = [chain(t, ("execute", "owner")) for t in ("t1", "t2", "t3")]
        s = spec(chains, edges=(("t1", "t2"), ("t1", "t3")))
        assert s.root_tasks() == ("t1",)
        assert s.prerequisites("t2") == ("t1",)
        assert set(s.dependents("t1")) == {"t2", "t3"}
        assert s.chain("t2").task_id == "t2"
        with pytest.raises(KeyError):
            s.chain("ghost")
        with pytest.raises(KeyError):
            s.actor("ghost")


class TestWorkflowFormat:
    def test_round_trip_of_synthesized_workflow(self):
        s = synthesize_workflow(example_bundle())
        assert parse_workflow(serialize_workflow(s)) == s

    def test_fixpoint(self):
        text = serialize_workflow(synthesize_workflow(example_bundle()))
        assert serialize_workflow(parse_workflow(text)) == text

    def test_defaults_omitted(self):
        doc = workflow_to_doc(spec([chain("t1", ("execute", "owner"))]))
        assert set(doc) == {"phase", "actors", "chains"}

    def test_non_defaults_written(self):
        s = spec(
            [chain("t1", ("execute", "owner"))],
            audit_enabled=False,
            quorum=Quorum.ANY,
            re_consult_on_reject=True,
        )
        doc = workflow_to_doc(s)
        assert doc["audit_enabled"] is False
        assert doc["quorum"] == "any"
        assert doc["re_consult_on_reject"] is True

    def test_chain_document_shape(self):
        s = synthesize_workflow(example_bundle())
        doc = workflow_to_doc(s)
        first = doc["chains"][0]
        assert set(first) == {"task", "name", "artifact_type", "gates"}
        assert all(set(g) == {"kind", "actor"} for g in first["gates"])
        assert doc["edges"] == [
            ["requirements_elicitation", "create_product_roadmap"],
            ["create_product_roadmap", "create_features_user_stories"],
            ["create_features_user_stories", "create_product_backlog"],
            ["create_product_backlog", "sprint_planning"],
            ["sprint_planning", "task_allocation"],
        ]

    def test_parse_rejects_bad_gate_kind(self):
        doc = workflow_to_doc(spec([chain("t1", ("execute", "owner"))]))
        doc["chains"][0]["gates"][0]["kind"] = "review"
        with pytest.raises(BundleParseError, match=r"chains\[0\].gates\[0\].kind"):
            parse_workflow(json.dumps(doc))

    def test_parse_rejects_unknown_keys(self):
        doc = workflow_to_doc(spec([chain("t1", ("execute", "owner"))]))
        doc["retries"] = 3
        with pytest.raises(BundleParseError, match="unexpected field"):
            parse_workflow(json.dumps(doc))

    def test_parse_rejects_grammar_violations(self):
        doc = workflow_to_doc(spec([chain("t1", ("execute", "owner"))]))
        doc["chains"][0]["gates"] = [
            {"kind": "validate", "actor": "owner"},
            {"kind": "execute", "actor": "owner"},
        ]
        with pytest.raises(BundleParseError, match="gate order"):
            parse_workflow(json.dumps(doc))

    def test_parse_rejects_bad_edges(self):
        doc = workflow_to_doc(spec([chain("t1", ("execute", "owner"))]))
        doc["edges"] = [["t1"]]
        with pytest.raises(BundleParseError, match=r"edges\[0\]"):
            parse_workflow(json.dumps(doc))

    def test_parse_rejects_bad_quorum(self):
        doc = workflow_to_doc(spec([chain("t1", ("execute", "owner"))]))
        doc["quorum"] = "majority"
        with pytest.raises(BundleParseError, match="quorum"):
            parse_workflow(json.dumps(doc))


@given(
    st.booleans(),
    st.sampled_from(list(Quorum)),
    st.booleans(),
    st.lists(st.sampled_from(["owner", "analyst"]), min_size=0, max_size=2, unique=True),
)
def test_round_trip_over_generated_specs(audit, quorum, re_consult, validators):
    gates = [("consult", "analyst"), ("execute", "agent_a")]
    gates += [("validate", v) for v in validators]
    gates += [("notify", "owner")]
    s = spec(
        [chain("t1", *gates), chain("t2", ("execute", "owner"))],
        edges=(("t1", "t2"),),
        audit_enabled=audit,
        quorum=quorum,
        re_consult_on_reject=re_consult,
    )
    assert parse_workflow(serialize_workflow(s)) == s
