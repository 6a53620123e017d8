"""HTTP surface: bundles, validation, pipeline, runs, approvals, events."""

import hashlib
import json
import threading
import time

import pytest
from fastapi.testclient import TestClient

from matrixgate import (
    LogicalClock,
    example_bundle,
    parse_workflow,
    replay_events,
    serialize_bundle,
)
from matrixgate.audit import event_from_doc
from matrixgate.service import create_app

EXAMPLE_TEXT = serialize_bundle(example_bundle())
EXAMPLE_ID = hashlib.sha256(EXAMPLE_TEXT.encode("utf-8")).hexdigest()[:12]


@pytest.fixture()
def app(tmp_path):
    return create_app(data_dir=tmp_path, clock_factory=LogicalClock)


@pytest.fixture()
def client(app):
    with TestClient(app) as client:
        yield client


def start_run(client):
    """Pipeline the example bundle, start a run, return (workflow, run doc)."""
    outcome = client.post(f"/bundles/{EXAMPLE_ID}/pipeline", content=b"{}").json()
    response = client.post("/runs", content=json.dumps(outcome).encode())
    assert response.status_code == 200, response.text
    return outcome["workflow"], response.json()


def approve(client, run_id, task_id, actor, verdict="approve", **extra):
    body = {"verdict": verdict, **extra}
    return client.post(
        f"/approvals/{run_id}/{task_id}", content=json.dumps(body).encode(),
        headers={"X-Actor-Id": actor},
    )


class TestPacks:
    def test_listing_shape(self, client):
        doc = client.get("/packs").json()
        assert [p["id"] for p in doc["packs"]] == [
            "framework-core", "aia-deployer", "aia-provider",
        ]
        core = doc["packs"][0]
        assert [r["id"] for r in core["rules"]] == ["C1", "C2", "C3"]
        for pack in doc["packs"]:
            for rule in pack["rules"]:
                assert set(rule) == {"id", "severity", "scope", "description", "requirements"}


class TestBundles:
    def test_example_is_preloaded(self, client):
        doc = client.get("/bundles").json()
        assert doc["bundles"] == [{
            "id": EXAMPLE_ID,
            "phase": example_bundle().phase_name,
            "actors": 6,
            "tasks": 6,
        }]

    def test_upload_is_content_addressed(self, client):
        response = client.post("/bundles", content=EXAMPLE_TEXT.encode())
        assert response.status_code == 200
        assert response.json()["id"] == EXAMPLE_ID
        assert len(client.get("/bundles").json()["bundles"]) == 1

    def test_get_returns_the_serialized_form(self, client):
        doc = client.get(f"/bundles/{EXAMPLE_ID}").json()
        assert doc["id"] == EXAMPLE_ID
        assert doc["bundle"] == json.loads(EXAMPLE_TEXT)

    def test_upload_rejects_bad_json(self, client):
        response = client.post("/bundles", content=b"{not json")
        assert response.status_code == 400
        error = response.json()["error"]
        assert error["type"] == "BundleParseError"
        assert "invalid JSON" in error["message"]

    def test_upload_rejects_duplicate_keys(self, client):
        response = client.post("/bundles", content=b'{"a": 1, "a": 2}')
        assert response.status_code == 400
        assert "duplicate key" in response.json()["error"]["message"]

    def test_unknown_bundle_is_404(self, client):
        response = client.get("/bundles/feedfeedfeed")
        assert response.status_code == 404
        assert response.json()["error"]["type"] == "UnknownBundleError"


class TestValidate:
    def test_defaults_compat_and_applicable_packs(self, client):
        doc = client.post(f"/bundles/{EXAMPLE_ID}/validate").json()
        assert doc == {
            "mode": "paper-compat",
            "packs": ["framework-core", "aia-deployer"],
            "status": "valid",
            "findings": [],
        }

    def test_strict_mode_reports_the_missing_accountable(self, client):
        doc = client.post(f"/bundles/{EXAMPLE_ID}/validate?mode=strict").json()
        assert doc["status"] == "invalid"
        assert [(f["rule_id"], f["task_id"]) for f in doc["findings"]] == [
            ("C2", "create_product_roadmap"),
        ]

    def test_empty_packs_means_core_only(self, client):
        doc = client.post(f"/bundles/{EXAMPLE_ID}/validate?packs=").json()
        assert doc["packs"] == ["framework-core"]

    def test_explicit_pack_list(self, client):
        doc = client.post(
            f"/bundles/{EXAMPLE_ID}/validate?packs=framework-core,aia-provider"
        ).json()
        assert doc["packs"] == ["framework-core", "aia-provider"]

    def test_unknown_mode_is_400(self, client):
        response = client.post(f"/bundles/{EXAMPLE_ID}/validate?mode=bogus")
        assert response.status_code == 400
        error = response.json()["error"]
        assert error["type"] == "UnknownModeError"
        assert "paper-compat" in error["message"] and "strict" in error["message"]

    def test_unknown_pack_is_400(self, client):
        response = client.post(f"/bundles/{EXAMPLE_ID}/validate?packs=nope")
        assert response.status_code == 400
        assert response.json()["error"]["type"] == "UnknownPackError"

    def test_strict_policy_rejects_the_dual_role_cell(self, client):
        response = client.post(f"/bundles/{EXAMPLE_ID}/validate?policy=strict")
        assert response.status_code == 400
        assert response.json()["error"]["type"] == "UnresolvedCellError"

    def test_policy_override_can_resolve_it(self, client):
        response = client.post(f"/bundles/{EXAMPLE_ID}/validate?policy=prefer-informed")
        assert response.status_code == 200
        assert response.json()["status"] == "valid"

    def test_unknown_policy_is_400(self, client):
        response = client.post(f"/bundles/{EXAMPLE_ID}/validate?policy=bogus")
        assert response.status_code == 400
        assert response.json()["error"]["type"] == "UnknownPolicyError"


class TestPipelineEndpoint:
    def test_default_config(self, client):
        doc = client.post(f"/bundles/{EXAMPLE_ID}/pipeline", content=b"{}").json()
        assert "workflow" in doc
        assert len(doc["decisions"]) == 6
        assert [s["step"] for s in doc["steps"]] == list(range(1, 10))

    def test_empty_body_is_the_default_config(self, client):
        doc = client.post(f"/bundles/{EXAMPLE_ID}/pipeline").json()
        assert "workflow" in doc

    def test_strict_mode_halts_without_a_workflow(self, client):
        doc = client.post(
            f"/bundles/{EXAMPLE_ID}/pipeline", content=b'{"mode": "strict"}'
        ).json()
        assert "workflow" not in doc
        assert doc["report"]["status"] == "invalid"

    def test_exhausted_iterations_are_422_with_the_partial_outcome(self, client):
        response = client.post(
            f"/bundles/{EXAMPLE_ID}/pipeline",
            content=b'{"audit_enabled": false, "max_iterations": 0}',
        )
        assert response.status_code == 422
        body = response.json()
        assert body["error"]["type"] == "MaxIterationsExceededError"
        assert body["outcome"]["report"]["status"] == "invalid"

    def test_config_type_errors(self, client):
        response = client.post(
            f"/bundles/{EXAMPLE_ID}/pipeline", content=b'{"threshold": "high"}'
        )
        assert response.status_code == 400
        assert "threshold must be a number" in response.json()["error"]["message"]

    def test_unknown_config_field(self, client):
        response = client.post(f"/bundles/{EXAMPLE_ID}/pipeline", content=b'{"bogus": 1}')
        assert response.status_code == 400
        assert "unexpected config field(s): bogus" in response.json()["error"]["message"]

    def test_non_object_config(self, client):
        response = client.post(f"/bundles/{EXAMPLE_ID}/pipeline", content=b"[1, 2]")
        assert response.status_code == 400
        assert "must be a JSON object" in response.json()["error"]["message"]


class TestRuns:
    def test_create_advances_to_the_first_approval_gate(self, client):
        _, doc = start_run(client)
        assert doc["phase"] == example_bundle().phase_name
        assert doc["audit"] == {"enabled": True, "ok": True, "first_corrupt_seq": None}
        tasks = doc["tasks"]
        assert tasks["requirements_elicitation"]["status"] == "awaiting_validation"
        assert tasks["create_product_roadmap"]["status"] == "pending"

    def test_accepts_a_bare_workflow_document(self, client):
        workflow, _ = start_run(client)
        response = client.post("/runs", content=json.dumps(workflow).encode())
        assert response.status_code == 200
        assert response.json()["run_id"] != ""

    def test_rejects_other_documents(self, client):
        response = client.post("/runs", content=b'{"foo": 1}')
        assert response.status_code == 400
        assert "workflow" in response.json()["error"]["message"]

    def test_get_run_round_trips(self, client):
        _, doc = start_run(client)
        again = client.get(f"/runs/{doc['run_id']}").json()
        assert again == doc

    def test_unknown_run_is_404(self, client):
        response = client.get("/runs/nope")
        assert response.status_code == 404
        assert response.json()["error"]["type"] == "UnknownRunError"


class TestApprovals:
    def test_inbox_lists_the_blocked_task(self, client):
        _, doc = start_run(client)
        approvals = client.get("/approvals").json()["approvals"]
        assert len(approvals) == 1
        entry = approvals[0]
        assert entry["run_id"] == doc["run_id"]
        assert entry["task_id"] == "requirements_elicitation"
        assert entry["responsible_actor"] == "business_analyst"
        assert entry["accountable_actors"] == ["product_owner"]
        assert entry["artifact_version"]["version"] == 0
        assert {c["actor_id"] for c in entry["consultation"]} == {"llm_agent_b", "llm_agent_c"}

    def test_inbox_filters_by_actor(self, client):
        start_run(client)
        assert client.get("/approvals?actor=product_owner").json()["approvals"] != []
        assert client.get("/approvals?actor=scrum_master").json()["approvals"] == []

    def test_approve_unblocks_the_downstream_chain(self, client):
        _, doc = start_run(client)
        run_id = doc["run_id"]
        response = approve(client, run_id, "requirements_elicitation", "product_owner")
        assert response.status_code == 200
        tasks = response.json()["tasks"]
        assert tasks["requirements_elicitation"]["status"] == "complete"
        # the roadmap auto-validates (nobody holds Accountable), so the
        # run rolls forward to the next human gate
        assert tasks["create_product_roadmap"]["status"] == "complete"
        assert tasks["create_features_user_stories"]["status"] == "awaiting_validation"

    def test_reject_sends_the_task_back_for_revision(self, client):
        _, doc = start_run(client)
        run_id = doc["run_id"]
        approve(client, run_id, "requirements_elicitation", "product_owner")
        response = approve(
            client, run_id, "create_features_user_stories", "business_analyst",
            verdict="reject", comment="tighten the scope",
        )
        assert response.status_code == 200
        task = response.json()["tasks"]["create_features_user_stories"]
        assert task["status"] == "awaiting_validation"
        assert task["revision"] == 1
        assert len(task["artifacts"]) == 2

    def test_wrong_actor_is_403(self, client):
        _, doc = start_run(client)
        response = approve(client, doc["run_id"], "requirements_elicitation", "scrum_master")
        assert response.status_code == 403
        assert response.json()["error"]["type"] == "UnauthorizedVerdictError"

    def test_verdict_on_a_settled_task_is_409(self, client):
        _, doc = start_run(client)
        run_id = doc["run_id"]
        approve(client, run_id, "requirements_elicitation", "product_owner")
        response = approve(client, run_id, "requirements_elicitation", "product_owner")
        assert response.status_code == 409
        assert response.json()["error"]["type"] == "IllegalTransitionError"

    def test_unknown_run_and_task_are_404(self, client):
        _, doc = start_run(client)
        assert approve(client, "nope", "requirements_elicitation", "product_owner").status_code == 404
        assert approve(client, doc["run_id"], "nope", "product_owner").status_code == 404

    def test_identity_disagreement_is_400(self, client):
        _, doc = start_run(client)
        response = client.post(
            f"/approvals/{doc['run_id']}/requirements_elicitation",
            content=json.dumps({"verdict": "approve", "actor_id": "business_analyst"}).encode(),
            headers={"X-Actor-Id": "product_owner"},
        )
        assert response.status_code == 400
        assert "disagree" in response.json()["error"]["message"]

    def test_identity_is_required(self, client):
        _, doc = start_run(client)
        response = client.post(
            f"/approvals/{doc['run_id']}/requirements_elicitation",
            content=json.dumps({"verdict": "approve"}).encode(),
        )
        assert response.status_code == 400
        assert "actor identity" in response.json()["error"]["message"]

    def test_body_actor_id_works_without_the_header(self, client):
        _, doc = start_run(client)
        response = client.post(
            f"/approvals/{doc['run_id']}/requirements_elicitation",
            content=json.dumps({"verdict": "approve", "actor_id": "product_owner"}).encode(),
        )
        assert response.status_code == 200

    def test_bad_verdict_and_unknown_fields_are_400(self, client):
        _, doc = start_run(client)
        bad = approve(client, doc["run_id"], "requirements_elicitation", "product_owner", verdict="maybe")
        assert bad.status_code == 400
        assert "approve or reject" in bad.json()["error"]["message"]
        extra = approve(client, doc["run_id"], "requirements_elicitation", "product_owner", note="hi")
        assert extra.status_code == 400
        assert "unexpected field(s): note" in extra.json()["error"]["message"]


class TestEvents:
    def test_full_log_from_the_beginning(self, client):
        _, doc = start_run(client)
        events = client.get(f"/runs/{doc['run_id']}/events?since_seq=0&timeout=0").json()
        assert events["run_id"] == doc["run_id"]
        assert [e["seq"] for e in events["events"]] == list(range(doc["last_seq"] + 1))
        assert events["last_seq"] == doc["last_seq"]
        assert events["events"][0]["type"] == "RunStarted"

    def test_tail_times_out_empty(self, client):
        _, doc = start_run(client)
        events = client.get(
            f"/runs/{doc['run_id']}/events?since_seq={doc['last_seq']}&timeout=0"
        ).json()
        assert events["events"] == []
        assert events["last_seq"] == doc["last_seq"]

    def test_long_poll_wakes_on_a_verdict(self, app):
        with TestClient(app) as poller, TestClient(app) as actor:
            _, doc = start_run(actor)
            run_id, last = doc["run_id"], doc["last_seq"]
            box = {}

            def poll():
                box["response"] = poller.get(
                    f"/runs/{run_id}/events?since_seq={last}&timeout=10"
                )

            thread = threading.Thread(target=poll)
            thread.start()
            time.sleep(0.2)
            approve(actor, run_id, "requirements_elicitation", "product_owner")
            thread.join(timeout=10)
            assert not thread.is_alive()
            events = box["response"].json()["events"]
            assert events and all(e["seq"] > last for e in events)
            assert any(e["type"] == "VerdictRecorded" for e in events)

    def test_events_replay_to_the_served_state(self, app):
        with TestClient(app) as client:
            workflow, doc = start_run(client)
            run_id = doc["run_id"]
            approve(client, run_id, "requirements_elicitation", "product_owner")
            docs = client.get(f"/runs/{run_id}/events?since_seq=0&timeout=0").json()["events"]
            events = [event_from_doc(d, d["seq"]) for d in docs]
            spec = parse_workflow(json.dumps(workflow))
            replayed = replay_events(spec, events, run_id=run_id)
            engine = app.state.store.get_run(run_id).engine
            assert replayed == engine.state

    def test_on_disk_tampering_shows_in_the_audit_verdict(self, client, tmp_path):
        _, doc = start_run(client)
        run_id = doc["run_id"]
        path = tmp_path / f"{run_id}.audit.jsonl"
        lines = path.read_bytes().splitlines(keepends=True)
        lines[3] = lines[3].replace(b'"', b"'", 1)
        path.write_bytes(b"".join(lines))
        audit = client.get(f"/runs/{run_id}").json()["audit"]
        assert audit == {"enabled": True, "ok": False, "first_corrupt_seq": 3}
