"""Agent adapters: how the engine asks an LLM agent for an artifact.

The wire contract is a single call: task context in, draft out. The
bundled MockAgent is fully deterministic so simulated runs are
reproducible; HttpAgent speaks the same contract over HTTP POST for
live integrations.
"""

from __future__ import annotations

import json
import urllib.request
from dataclasses import dataclass, field
from typing import Protocol

from .audit import canonical_json, sha256_hex


@dataclass(frozen=True)
class ArtifactDraft:
    content: str
    metadata: dict = field(default_factory=dict)


class AgentAdapter(Protocol):
    def invoke(self, context: dict) -> ArtifactDraft:
        """Produce a draft for the task described by ``context``.

        The context carries three keys: "task" (id, name, artifact
        type, revision), "consultation" (recorded entries, each with
        actor_id, content, mandatory), and "prior_versions" (digests of
        earlier drafts of this task, oldest first).
        """
        ...


class MockAgent:
    """Deterministic stand-in for a live agent.

    The draft content is the digest of the canonical task context, so
    identical inputs always yield identical artifacts. The metadata
    lists a digest for every consultation entry, which is what lets
    tests prove consulted input reached the producing agent.
    """

    def invoke(self, context: dict) -> ArtifactDraft:
        content = sha256_hex(canonical_json(context))
        consultation_digests = [
            sha256_hex(entry["content"]) for entry in context.get("consultation", [])
        ]
        return ArtifactDraft(
            content=content,
            metadata={
                "agent": "mock",
                "consultation_digests": consultation_digests,
            },
        )


class HttpAgent:
    """POSTs the task context as JSON and expects {content, metadata} back.

    Transport and protocol failures surface as ordinary exceptions; the
    engine owns the retry budget.
    """

    def __init__(self, url: str, timeout: float = 30.0) -> None:
        self.url = url
        self.timeout = timeout

    def invoke(self, context: dict) -> ArtifactDraft:
        request = urllib.request.Request(
            self.url,
            data=json.dumps(context).encode("utf-8"),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        with urllib.request.urlopen(request, timeout=self.timeout) as response:
            body = response.read().decode("utf-8")
        doc = json.loads(body)
        if not isinstance(doc, dict) or not isinstance(doc.get("content"), str):
            raise ValueError(f"agent at {self.url} returned no content field")
        metadata = doc.get("metadata", {})
        if not isinstance(metadata, dict):
            raise ValueError(f"agent at {self.url} returned non-object metadata")
        return ArtifactDraft(content=doc["content"], metadata=metadata)
