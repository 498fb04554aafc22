"""Service error type carried to the wire as {error: {code, message}}."""

from __future__ import annotations


class BridgeError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
