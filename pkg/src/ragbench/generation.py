"""Chat prompt assembly and answer generation behind pluggable providers."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Protocol, Sequence

import httpx

from . import prompts
from .errors import GenerationError, InputError, ProviderError
from .remote import post_json


@dataclass(frozen=True)
class ChatPrompt:
    system: str
    user: str


@dataclass(frozen=True)
class GeneratedAnswer:
    sample_id: str
    question: str
    article_id: str
    answer: str
    model: str
    provider: str
    strategy: str

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "question": self.question,
            "article_id": self.article_id,
            "answer": self.answer,
            "model": self.model,
            "provider": self.provider,
            "strategy": self.strategy,
        }

    @classmethod
    def from_dict(cls, row: dict) -> "GeneratedAnswer":
        return cls(
            sample_id=str(row.get("sample_id", "")),
            question=str(row.get("question", "")),
            article_id=str(row.get("article_id", "")),
            answer=str(row.get("answer", "")),
            model=str(row.get("model", "")),
            provider=str(row.get("provider", "")),
            strategy=str(row.get("strategy", "")),
        )


class ChatProvider(Protocol):
    kind: str
    model: str

    def complete(self, prompt: ChatPrompt) -> str: ...


def build_chat_prompt(question: str, article: str) -> ChatPrompt:
    """Fill the shipped chatbot template with the question and one article."""
    if not question or not article:
        raise InputError("question and article must be non-empty")
    return ChatPrompt(
        system=prompts.CHAT_SYSTEM,
        user=prompts.CHAT_USER.format(question=question, article=article),
    )


def generate_answer(
    provider: ChatProvider,
    prompt: ChatPrompt,
    sample_id: str = "",
    question: str = "",
    article_id: str = "",
    strategy: str = "",
) -> GeneratedAnswer:
    """Run one completion and wrap it with full provenance."""
    text = provider.complete(prompt).strip()
    if not text:
        raise GenerationError(f"provider {provider.model} returned an empty completion")
    return GeneratedAnswer(
        sample_id=sample_id,
        question=question,
        article_id=article_id,
        answer=text,
        model=provider.model,
        provider=provider.kind,
        strategy=strategy,
    )


class ScriptedChat:
    """Deterministic mock: first rule whose substring matches the prompt wins.

    Rules are (pattern, response) pairs matched against the concatenated
    system and user text, so scripts can key on template markers as well as
    on question text. An empty pattern matches everything.
    """

    kind = "scripted-mock"

    def __init__(
        self,
        rules: Sequence[tuple[str, str]] = (),
        default: str | None = None,
        model: str = "scripted",
    ):
        self.rules = tuple(rules)
        self.default = default
        self.model = model

    def complete(self, prompt: ChatPrompt) -> str:
        haystack = prompt.system + "\n" + prompt.user
        for pattern, response in self.rules:
            if pattern in haystack:
                return response
        if self.default is not None:
            return self.default
        raise ProviderError("no scripted rule matched and no default response is set")


class RemoteChat:
    """Client for a chat-completions-over-HTTP provider.

    Temperature defaults to 0 so evaluation runs are as repeatable as the
    backing model allows. Configure via CHAT_BASE_URL, CHAT_API_KEY,
    CHAT_MODEL (JUDGE_* variants override for judge runs).
    """

    kind = "remote"

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str = "",
        temperature: float = 0.0,
        max_attempts: int = 3,
        timeout: float = 120.0,
        client: httpx.Client | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.temperature = temperature
        self.max_attempts = max_attempts
        self._client = client or httpx.Client(timeout=timeout)

    @classmethod
    def from_env(cls, env_prefix: str = "CHAT", **kwargs) -> "RemoteChat":
        def lookup(suffix: str) -> str:
            return os.environ.get(f"{env_prefix}_{suffix}") or os.environ.get(f"CHAT_{suffix}", "")

        base_url = lookup("BASE_URL")
        model = lookup("MODEL")
        if not base_url or not model:
            raise ProviderError(f"{env_prefix}_BASE_URL and {env_prefix}_MODEL must be set")
        return cls(base_url, model, api_key=lookup("API_KEY"), **kwargs)

    def complete(self, prompt: ChatPrompt) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = post_json(
            self._client,
            f"{self.base_url}/chat/completions",
            {
                "model": self.model,
                "temperature": self.temperature,
                "messages": [
                    {"role": "system", "content": prompt.system},
                    {"role": "user", "content": prompt.user},
                ],
            },
            headers,
            max_attempts=self.max_attempts,
        )
        try:
            return str(body["choices"][0]["message"]["content"] or "")
        except (KeyError, IndexError, TypeError):
            raise ProviderError("chat response is missing choices[0].message.content") from None
