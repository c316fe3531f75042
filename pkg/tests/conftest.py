import pytest

from profiles import CASE_PROFILES, case_metric


@pytest.fixture(params=sorted(CASE_PROFILES))
def case_label(request):
    return request.param


@pytest.fixture
def case_m(case_label):
    return case_metric(case_label)
