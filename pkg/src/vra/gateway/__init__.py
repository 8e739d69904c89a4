"""Multimodal chat backends behind one cached, rate-limited interface."""

from .core import AgentReply, AgentRequest, Gateway, RateLimiter, ReplyCache
from .live import API_KEY_ENV, LiveBackend, build_payload
from .mock import MockBackend, MockBehavior, MockContext, mock_invoke

__all__ = [
    "API_KEY_ENV",
    "AgentReply",
    "AgentRequest",
    "Gateway",
    "LiveBackend",
    "MockBackend",
    "MockBehavior",
    "MockContext",
    "RateLimiter",
    "ReplyCache",
    "build_payload",
    "mock_invoke",
]
