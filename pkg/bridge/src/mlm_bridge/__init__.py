"""Masked-language-model backend for the fill-mask oracle wire protocol."""

from .engine import BridgeConfig, BridgeRequestError, MaskedLMEngine

__all__ = ["BridgeConfig", "BridgeRequestError", "MaskedLMEngine"]
