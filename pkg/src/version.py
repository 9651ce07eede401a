"""
RC4Sim version, wire-protocol and store-schema management.

Version format: MAJOR.MINOR.PATCH
- MAJOR: Breaking changes
- MINOR: New features (backward compatible)
- PATCH: Bug fixes

WIRE_PROTOCOL_VERSION is the octet sent after the "RC4S" magic in the transport
handshake. Peers with a different value refuse the session.

STORE_SCHEMA_VERSION increments when the P-value store tables change. A store
written by a newer schema is refused rather than guessed at.
"""

__version__ = "1.0.0"
WIRE_PROTOCOL_VERSION = 1
STORE_SCHEMA_VERSION = 1

# Wire protocol history
PROTOCOL_CHANGELOG = {
    1: {
        "version": "1.0.0",
        "description": "Initial framing",
        "changes": [
            "5-octet handshake: magic 52 43 34 53 then version 01, echoed by the receiver",
            "frames: 4-octet big-endian length then ciphertext payload",
            "payload limit 65,536 octets; zero-length frame ends the stream",
        ]
    },
}

# Store schema history
SCHEMA_CHANGELOG = {
    1: {
        "version": "1.0.0",
        "description": "Initial schema",
        "changes": [
            "suite_runs table (corpus shape + suite parameters)",
            "pvalues table (test_name, sample_index, p_value per run)",
            "schema_version table",
        ]
    },
}


def get_version():
    """Get current RC4Sim version."""
    return __version__


def get_changelog(schema_version: int = None):
    """
    Get store changelog for a specific schema version or all versions.

    Args:
        schema_version: Specific version to get, or None for all

    Returns:
        Dictionary with changelog information
    """
    if schema_version is not None:
        return SCHEMA_CHANGELOG.get(schema_version)
    return SCHEMA_CHANGELOG
