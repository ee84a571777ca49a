import pytest

from tubenv import tolerances
from tubenv.tolerances import TOL


def test_defaults():
    assert TOL.pd_threshold == 1e-9 and TOL.fence == 1e-12 and TOL.levi_flat == 1e-6 and TOL.newton == 1e-10


def test_parse_overrides():
    assert tolerances.parse_overrides(["fence=1e-10", " hull = 2e-12"]) == {"fence": 1e-10, "hull": 2e-12}
    for bad in (["nope=1"], ["fence"], ["fence=-1"], ["fence=abc"]):
        with pytest.raises(ValueError):
            tolerances.parse_overrides(bad)


def test_overridden_restores_on_error():
    with pytest.raises(RuntimeError):
        with tolerances.overridden(fence=0.5):
            assert TOL.fence == 0.5
            raise RuntimeError
    assert TOL.fence == 1e-12
