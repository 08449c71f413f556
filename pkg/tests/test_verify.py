import pytest

from ddkl import verify


@pytest.mark.parametrize("module", verify.MODULES)
def test_verify_module_quick(module):
    res = verify.run([module], seed=0, quick=True)
    assert res
    bad = [r for r in res if not r.passed]
    assert not bad, [(r.name, r.measured, r.tolerance) for r in bad]


def test_verify_full_denoiser_and_samplers():
    res = verify.run(["samplers", "denoiser"], seed=1)
    assert all(r.passed for r in res), [r.name for r in res if not r.passed]


def test_verify_rejects_unknown_module():
    with pytest.raises(KeyError):
        verify.run(["nope"])
