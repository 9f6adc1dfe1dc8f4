import numpy as np
import pytest

from zsx.catalog import Descriptor, Label, LabelCatalog
from zsx.vectors import VectorTable


def pytest_runtest_logreport(report):
    """One visible PASS/FAIL line per acceptance criterion."""
    if report.when != "call" or "test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("test_criterion_", 1)[1].split("[")[0]
    status = "PASS" if report.passed else "FAIL"
    print("[%s] criterion: %s" % (status, name))


@pytest.fixture
def mood_table():
    """2-d toy table: gloom-ish tokens on one axis, sleep-ish on the other."""
    return VectorTable(
        dim=2,
        entries={
            "sad": np.array([1.0, 0.0]),
            "gloom": np.array([1.0, 0.0]),
            "sleep": np.array([0.0, 1.0]),
            "insomnia": np.array([0.0, 1.0]),
            "tired": np.array([0.6, 0.8]),
        },
        name="mood",
    )


@pytest.fixture
def two_label_catalog():
    # Fixture labels: one real pair of symptom headers plus nothing invented.
    return LabelCatalog(
        labels=(
            Label("disturbed_sleep", "Disturbed sleep"),
            Label("low_mood", "Low mood"),
        ),
        descriptors=(
            Descriptor("insomnia", "disturbed_sleep", "DH"),
            Descriptor("sleep", "disturbed_sleep", "MH"),
            Descriptor("sad", "low_mood", "DH"),
            Descriptor("gloom", "low_mood", "MH"),
        ),
    )


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


@pytest.fixture
def table_file(tmp_path):
    return write(
        tmp_path / "vectors.txt",
        "gloom 1.0 0.0\nsad 1.0 0.0\ninsomnia 0.0 1.0\nsleep 0.0 1.0\nhunger 0.5 0.5\n",
    )


@pytest.fixture
def catalog_file(tmp_path):
    rows = [
        "disturbed_sleep\tDH\tInsomnia",
        "disturbed_sleep\tDH\tHypersomnia",
        "disturbed_sleep\tMH\tReduced sleep",
        "anhedonia\tDH\tLoss of interest",
        "anhedonia\tMH\tInability to feel",
    ]
    return write(tmp_path / "catalog.tsv", "\n".join(rows) + "\n")
