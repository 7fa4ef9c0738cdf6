import pytest

from stdqa.nncore import kernels


@pytest.fixture(scope="session", autouse=True)
def compiled_kernels():
    kernels.warmup()


@pytest.fixture(scope="session")
def memorized_ner():
    """The five-sentence tagger fixture trained to memorization."""
    from synth import ner_fixture
    from stdqa.nertagger import NerConfig, train_ner

    dataset = ner_fixture()
    config = NerConfig(embed_dim=16, hidden_dim=16, lr=1e-2, batch_size=8, seed=0)
    model, history = train_ner(dataset, config, epochs=200)
    return model, history, dataset


@pytest.fixture(scope="session")
def valve_sim():
    """Small similarity model trained on the safety-valve paraphrase set."""
    from synth import valve_pairs
    from stdqa.simnet import SimModelConfig, train_sim

    pairs, tokenizer = valve_pairs()
    config = SimModelConfig(
        vocab_size=tokenizer.vocab.size, embed_dim=16, hidden_dim=16,
        max_len=24, seed=5,
    )
    model, history = train_sim(pairs, config, epochs=12, batch_size=4, lr=1e-2,
                               tokenizer=tokenizer)
    return model


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "skipped"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            if outcome == "skipped" and report.when != "setup":
                continue
            if outcome != "skipped" and report.when != "call":
                continue
            label = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[outcome]
            lines.append((nodeid.split("::")[-1], label))
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, label in sorted(lines):
            terminalreporter.write_line(f"{label}: {name}")
