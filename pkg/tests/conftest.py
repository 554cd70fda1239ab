from __future__ import annotations

import random

import pytest

from textsieve.corpus import LabeledCorpus, Utterance, make_utterance


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One explicit pass/fail line per acceptance criterion."""
    lines = []
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" in nodeid and getattr(rep, "when", "call") == "call":
                word = "PASSED" if rep.passed else "FAILED"
                lines.append(f"ACCEPTANCE {word}: {nodeid.split('::')[-1]}")
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


def make_corpus(spec: dict[str, list[str]]) -> LabeledCorpus:
    """Tiny helper: {class_key: [text, ...]} with ids <class>-<i>."""
    classes = {}
    for class_key, texts in spec.items():
        classes[class_key] = [
            make_utterance(f"{class_key}-{i}", text, label=class_key)
            for i, text in enumerate(texts)
        ]
    return LabeledCorpus(classes=classes)


def random_token_list(rng: random.Random, max_len: int = 8) -> list[str]:
    words = ["alpha", "beta", "gamma", "delta", "blue", "node", "pay", "card"]
    return [rng.choice(words) for _ in range(rng.randint(0, max_len))]


@pytest.fixture
def balance_corpus() -> LabeledCorpus:
    return make_corpus(
        {
            "balance": [
                "what is my balance",
                "show my account balance",
                "how much money do i have",
                "balance on my checking account",
            ],
            "transfer": [
                "send money to alice",
                "transfer funds to savings",
                "move cash between accounts",
                "wire money to my broker",
            ],
        }
    )


@pytest.fixture
def singleton_utterance() -> Utterance:
    return make_utterance("u-0", "pay my electric bill", label="billpay")
