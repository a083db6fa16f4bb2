"""Loopback gateway stream: newline-delimited record lines over TCP.

One server session replays its record list to every client that connects,
terminated by the ``#END`` marker line.  A client that loses the connection
before seeing the marker reports the records received so far plus a
truncation flag; malformed lines are counted and skipped, never fatal.
"""

from __future__ import annotations

import socket
import threading
from dataclasses import dataclass, field
from typing import Iterable

from .records import RawRecord, RejectedLine, format_record, parse_line

__all__ = ["END_MARKER", "StreamServer", "StreamResult", "serve_stream", "consume_stream"]

END_MARKER = "#END"


@dataclass
class StreamResult:
    """What a consumer got out of one session."""

    records: list[RawRecord]
    complete: bool  # True iff the #END marker arrived
    malformed: list[RejectedLine] = field(default_factory=list)


class StreamServer:
    """Replays a fixed record list to every connecting client.

    Single writer per session; every consumer independently receives the full
    sequence in order.  Use as a context manager or call :meth:`close`.
    """

    def __init__(self, records: Iterable[RawRecord], host: str = "127.0.0.1", port: int = 0):
        self._payload = ("".join(format_record(r) + "\n" for r in records) + END_MARKER + "\n").encode("utf-8")
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen()
        self._closing = threading.Event()
        self._threads: list[threading.Thread] = []
        self._acceptor = threading.Thread(target=self._accept_loop, daemon=True)
        self._acceptor.start()

    @property
    def endpoint(self) -> tuple[str, int]:
        host, port = self._sock.getsockname()[:2]
        return host, port

    def _accept_loop(self) -> None:
        while not self._closing.is_set():
            try:
                conn, _ = self._sock.accept()
            except OSError:
                return
            t = threading.Thread(target=self._serve_one, args=(conn,), daemon=True)
            t.start()
            self._threads.append(t)

    def _serve_one(self, conn: socket.socket) -> None:
        try:
            conn.sendall(self._payload)
        except OSError:
            pass
        finally:
            conn.close()

    def close(self) -> None:
        self._closing.set()
        try:
            self._sock.close()
        except OSError:
            pass
        for t in self._threads:
            t.join(timeout=5.0)

    def __enter__(self) -> "StreamServer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def serve_stream(records: Iterable[RawRecord], host: str = "127.0.0.1", port: int = 0) -> StreamServer:
    """Start a replay session; the endpoint is on the returned server."""
    return StreamServer(records, host, port)


def consume_stream(host: str, port: int, timeout: float = 30.0) -> StreamResult:
    """Read one session from an endpoint.

    Returns everything received up to ``#END``; if the connection drops or
    times out first, ``complete`` is False and the records so far are kept.
    """
    result = StreamResult(records=[], complete=False)
    try:
        conn = socket.create_connection((host, port), timeout=timeout)
    except OSError as exc:
        raise ConnectionError(f"cannot reach stream endpoint {host}:{port}: {exc}") from exc
    buffer = b""
    line_no = 0
    try:
        with conn:
            conn.settimeout(timeout)
            while True:
                try:
                    chunk = conn.recv(65536)
                except (OSError, socket.timeout):
                    return result
                if not chunk:
                    return result  # connection closed before the end marker
                buffer += chunk
                while b"\n" in buffer:
                    raw, buffer = buffer.split(b"\n", 1)
                    line_no += 1
                    line = raw.decode("utf-8", errors="replace").rstrip("\r")
                    if line == END_MARKER:
                        result.complete = True
                        return result
                    if not line.strip():
                        continue
                    try:
                        result.records.append(parse_line(line))
                    except ValueError as exc:
                        result.malformed.append(RejectedLine(line_no, line, str(exc)))
    finally:
        pass
