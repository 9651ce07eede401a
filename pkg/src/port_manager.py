"""
Endpoint parsing and free-port discovery for the transport endpoints and the
inspection server.
"""

import socket
from typing import Tuple

from .errors import InvalidArgumentError, TransportError

DEFAULT_HOST = "127.0.0.1"
DEFAULT_SERVER_PORT = 8070


def parse_endpoint(text: str, default_host: str = DEFAULT_HOST) -> Tuple[str, int]:
    """
    Split "host:port", "[v6addr]:port" or ":port" into (host, port).

    A bare port number is accepted as well and binds to default_host.
    """
    s = (text or "").strip()
    if not s:
        raise InvalidArgumentError("empty endpoint")
    if s.startswith("["):
        host, sep, rest = s[1:].partition("]")
        if not sep or not rest.startswith(":"):
            raise InvalidArgumentError(f"bad endpoint {text!r}; expected [addr]:port")
        port_text = rest[1:]
    elif ":" in s:
        host, _, port_text = s.rpartition(":")
    else:
        host, port_text = "", s
    try:
        port = int(port_text)
    except ValueError:
        raise InvalidArgumentError(f"bad port in endpoint {text!r}")
    if not 0 <= port <= 65535:
        raise InvalidArgumentError(f"port {port} out of range")
    return host or default_host, port


def format_endpoint(host: str, port: int) -> str:
    if ":" in host:
        return f"[{host}]:{port}"
    return f"{host}:{port}"


def is_port_available(port: int, host: str = DEFAULT_HOST) -> bool:
    """Check if a port is available for binding."""
    family = socket.AF_INET6 if ":" in host else socket.AF_INET
    try:
        with socket.socket(family, socket.SOCK_STREAM) as s:
            s.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            s.bind((host, port))
            return True
    except OSError:
        return False


def find_available_port(start_port: int = DEFAULT_SERVER_PORT, max_attempts: int = 100,
                        host: str = DEFAULT_HOST) -> int:
    """Find the next available port starting from start_port."""
    for i in range(max_attempts):
        port = start_port + i
        if port > 65535:
            break
        if is_port_available(port, host):
            return port
    raise TransportError(f"No available ports found in range {start_port}-{start_port + max_attempts}")
