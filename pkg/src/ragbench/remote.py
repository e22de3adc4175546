"""Shared HTTP plumbing for remote embedding and chat providers."""

from __future__ import annotations

import time

import httpx

from .errors import ProviderError

RETRYABLE_STATUS = (429, 500, 502, 503, 504)


def post_json(
    client: httpx.Client,
    url: str,
    payload: dict,
    headers: dict[str, str],
    max_attempts: int = 3,
    backoff: float = 0.5,
) -> dict:
    """POST with bounded exponential backoff; raises ProviderError when spent."""
    last_error = "no attempt made"
    for attempt in range(max_attempts):
        if attempt:
            time.sleep(backoff * 2 ** (attempt - 1))
        try:
            response = client.post(url, json=payload, headers=headers)
        except httpx.HTTPError as exc:
            last_error = f"transport failure: {exc}"
            continue
        if response.status_code in RETRYABLE_STATUS:
            last_error = f"status {response.status_code}"
            continue
        if response.status_code >= 400:
            raise ProviderError(f"{url} returned status {response.status_code}: {response.text[:200]}")
        try:
            return response.json()
        except ValueError:
            raise ProviderError(f"{url} returned a non-JSON body") from None
    raise ProviderError(f"{url} failed after {max_attempts} attempts ({last_error})")
