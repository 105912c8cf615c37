import numpy as np
import pytest

from hwqaoa.operators import MixerKind, get_mixer
from hwqaoa.validation import corrupt_mixer_sign, format_report, validate


def test_clean_build_passes():
    results = validate((4, 6), draws_per_n=2)
    assert [r.variant for r in results] == ["Clique-Obj", "Clique-Th", "Ring-Obj", "Ring-Th",
                                            "Grover-Obj", "Grover-Th"]
    assert all(r.passed and r.draws == 4 for r in results)
    assert all(r.max_amplitude_dev < 1e-10 for r in results)


@pytest.mark.parametrize("kind", list(MixerKind))
def test_corrupted_mixer_detected(kind):
    results = validate((4, 6), draws_per_n=2, corrupt=kind)
    for r in results:
        assert r.passed == (not r.variant.lower().startswith(kind.value))
    bad = [r for r in results if not r.passed]
    assert all(r.failures and r.max_amplitude_dev > 1e-3 for r in bad)


def test_corrupt_sign_negates_hamiltonian():
    op = get_mixer(MixerKind.RING, 6, 3)
    assert np.allclose(corrupt_mixer_sign(op).matrix(), -op.matrix(), atol=1e-12)


def test_report_lists_max_deviation():
    text = format_report(validate((4,), draws_per_n=1))
    assert "max |dpsi|" in text.splitlines()[0]
    assert len(text.splitlines()) == 7
