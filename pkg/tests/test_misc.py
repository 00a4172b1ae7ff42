from settings import (
    DEBUG_MODE,
    ASSERTION_ENABLED,
    PRINT_DERIVATION,
    PRINT_TRANSITIONS,
    PRINT_ECA_OUTCOMES,
    PRINT_MESSAGES,
    OCCURS_CHECK,
    DUPLICATE_OID_POLICY,
    STUB_DEFAULT,
    PROTOCOL_ALIASES,
)
from reactor.messaging.transports import TransportRegistry


def test_deploy_minimum():
    assert not DEBUG_MODE
    assert not ASSERTION_ENABLED
    assert not PRINT_DERIVATION
    assert not PRINT_TRANSITIONS
    assert not PRINT_ECA_OUTCOMES
    assert not PRINT_MESSAGES
    assert OCCURS_CHECK


def test_settings_are_consistent():
    assert DUPLICATE_OID_POLICY in ("error", "replace", "append")
    assert STUB_DEFAULT in ("succeed", "fail")
    registry = TransportRegistry(engine=None)
    for alias in PROTOCOL_ALIASES:
        assert registry.lookup(alias) is registry.lookup("tcp"), alias
