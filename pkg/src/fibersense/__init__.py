"""Distributed fiber sensing toolkit.

Simulates phase waterfall data for a fiber with acoustic, aerial and road
segments, detects and tracks events in the stream, extracts features,
classifies them with a small decision tree, and serves the whole thing over
HTTP/WebSocket for a live console.
"""

__version__ = "0.1.0"
