"""Synthetic corpus generator with constructed ground truth.

Every question is embedded verbatim in its gold article, which makes the
gold article the nearest neighbour under the trigram test embedder, so
retrieval accuracy on this corpus is by construction rather than assertion.
A configurable fraction of articles gets a near-duplicate version at an
exact Levenshtein distance: the original carries a trailing pad block and
the duplicate is the same text without it, so the pair differs by one
contiguous deletion of exactly ``dup_distance`` characters. The duplicate is
shorter and therefore outranks its padded sibling for the shared question,
which is what threshold-tolerant accuracy is meant to absorb.
"""

from __future__ import annotations

import random

from .errors import InputError

_ACTIONS = (
    "request", "cancel", "update", "submit", "extend",
    "transfer", "review", "renew", "confirm", "track",
)

_OBJECTS = (
    "parental leave", "a travel expense report", "the pension plan enrollment",
    "a remote work agreement", "the health insurance option", "a relocation package",
    "overtime compensation", "the training budget", "a sabbatical",
    "the commuter allowance", "jury duty leave", "the bonus statement",
    "an equipment reimbursement", "the language course subsidy", "a shift swap",
)

_PROCESSES = (
    "self-service", "manager approval", "payroll correction", "benefits enrollment",
    "time recording", "travel desk", "onboarding", "offboarding",
)

_FILLER = (
    "policy", "applies", "within", "thirty", "days", "portal", "section", "form",
    "approval", "manager", "local", "regulations", "eligibility", "depends",
    "contract", "type", "submit", "before", "deadline", "supporting", "documents",
    "payroll", "cycle", "deduction", "statement", "available", "monthly",
    "contact", "service", "team", "details", "exceptions", "apply", "during",
    "probation", "period", "annual", "review", "prorated", "amounts",
)

_REGIONS = ("EMEA", "AMER", "APJ")
_COUNTRIES = ("DE", "US", "IN", "FR", "GB", "JP")
_ROLES = ("employee", "manager", "executive")
_COMPANIES = (("Aster Industries", "1010"), ("Borel Logistics", "2020"), ("Cadence Labs", "3030"))
_CATEGORIES = ("leave", "payroll", "benefits", "travel", "workplace")


def synthetic_records(
    n_articles: int = 1000,
    dup_fraction: float = 0.0,
    dup_distance: int = 50,
    seed: int = 0,
) -> list[dict]:
    """Corpus records (question/answer/context/metadata), ingest-ready.

    Duplicated articles appear as a second record sharing the question, so
    both versions enter the knowledge base and both carry evaluation samples.
    """
    if n_articles < 1:
        raise InputError("n_articles must be >= 1")
    if not 0.0 <= dup_fraction <= 1.0:
        raise InputError("dup_fraction must be in [0, 1]")
    if dup_distance < 2:
        raise InputError("dup_distance must be >= 2 (one space plus pad characters)")

    rng = random.Random(seed)
    n_dups = round(n_articles * dup_fraction)
    dup_indices = set(rng.sample(range(n_articles), n_dups)) if n_dups else set()

    records = []
    for i in range(n_articles):
        slug = "".join(rng.choice("abcdefghijklmnopqrstuvwxyz") for _ in range(4)) + f"{i:04d}"
        action = rng.choice(_ACTIONS)
        obj = rng.choice(_OBJECTS)
        process = rng.choice(_PROCESSES)
        company, company_code = rng.choice(_COMPANIES)

        question = f"How do I {action} {obj} for case {slug}?"
        answer = (
            f"To {action} {obj} for case {slug}, open the employee portal and "
            f"complete the {process} form."
        )
        filler = " ".join(rng.choice(_FILLER) for _ in range(14))
        base_text = f"{obj.capitalize()} policy {slug}. {question} {answer} {filler}."

        metadata = {
            "user_role": rng.choice(_ROLES),
            "company_name": company,
            "company_code": company_code,
            "region": rng.choice(_REGIONS),
            "country_code": rng.choice(_COUNTRIES),
            "faq_category": rng.choice(_CATEGORIES),
            "process_id": f"p{rng.randrange(10):02d}",
            "service_id": f"sv{rng.randrange(10):02d}",
        }
        # widen some applicability fields so filters have wildcards to honor
        for name in ("region", "country_code", "user_role"):
            if rng.random() < 0.25:
                metadata[name] = "*"

        if i in dup_indices:
            # pad block = one space + (dup_distance - 1) chars; deleting it is
            # one contiguous edit of exactly dup_distance characters
            padded = base_text + " " + "x" * (dup_distance - 1)
            records.append(
                {"id": f"q-{i:05d}a", "question": question, "answer": answer, "context": padded, "metadata": metadata}
            )
            records.append(
                {"id": f"q-{i:05d}b", "question": question, "answer": answer, "context": base_text, "metadata": metadata}
            )
        else:
            records.append(
                {"id": f"q-{i:05d}", "question": question, "answer": answer, "context": base_text, "metadata": metadata}
            )
    return records
