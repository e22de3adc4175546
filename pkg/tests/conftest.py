from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # expose tests/oracles.py

from ragbench.corpus import load_corpus
from ragbench.embedding import DeterministicEmbedder


def records_to_lines(records) -> list[str]:
    return [json.dumps(r, ensure_ascii=False) for r in records]


@pytest.fixture
def det_embedder():
    return DeterministicEmbedder(dimension=64, seed=0)


@pytest.fixture
def tiny_records():
    return [
        {
            "question": "How do I request parental leave?",
            "answer": "Submit the leave form in the portal.",
            "context": "Parental leave policy. How do I request parental leave? "
                       "Submit the leave form in the portal. Approval takes five days.",
            "metadata": {"region": "EMEA", "country_code": "DE", "user_role": "employee"},
        },
        {
            "question": "Where can I see my payslip?",
            "answer": "Open the payroll section of the portal.",
            "context": "Payslip access. Where can I see my payslip? "
                       "Open the payroll section of the portal. Statements appear monthly.",
            "metadata": {"region": "EMEA", "country_code": "DE", "user_role": "employee"},
        },
        {
            "question": "Can I carry over unused vacation days?",
            "answer": "Up to five days carry over until March.",
            "context": "Vacation carryover. Can I carry over unused vacation days? "
                       "Up to five days carry over until March. Local rules may differ.",
            "metadata": {"region": "AMER", "country_code": "US", "user_role": "manager"},
        },
    ]


@pytest.fixture
def tiny_corpus(tiny_records):
    samples, kb, skipped = load_corpus(records_to_lines(tiny_records))
    assert skipped == 0
    return samples, kb
