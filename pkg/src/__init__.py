"""
RC4Sim - cycle-accurate RC4 hardware model with switching activity,
randomness assessment and an encrypted stream transport.
"""

__all__ = [
    'rc4_core',
    'hw_model',
    'activity_power',
    'randomness',
    'transport',
    'schemas',
    'errors',
    'config',
    'db',
    'crud',
    'reports',
    'web_server',
    'cli',
    'port_manager',
    'version',
]
