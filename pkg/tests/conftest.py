import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci",
    derandomize=True,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
    deadline=None,
)
settings.load_profile("ci")


@pytest.fixture(autouse=True)
def _isolate_env(monkeypatch):
    # ambient overrides must not perturb the pinned-seed tests
    monkeypatch.delenv("DRLOSS_SEED", raising=False)
    monkeypatch.delenv("DRLOSS_JOBS", raising=False)
