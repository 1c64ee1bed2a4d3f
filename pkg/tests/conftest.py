"""Test-wide settings: exact arithmetic can be slow per case, so the
hypothesis deadline is disabled and example counts kept moderate."""

from hypothesis import HealthCheck, settings

settings.register_profile(
    "novatlas",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("novatlas")
