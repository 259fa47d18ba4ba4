"""Message ports between the coordinator and its agents.

Two backends share one port interface: in-process bounded queues, and TCP
sockets carrying newline-delimited JSON. Receiving ports expose a
non-blocking ``probe``; ``recv`` without a ready message is a protocol error.
"""

from __future__ import annotations

import json
import logging
import math
import queue
import select
import socket
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

from swarmopt.errors import AgentSpawnFailure, PortClosed, ProtocolError, WouldBlock

log = logging.getLogger(__name__)

QUEUE_CAPACITY = 4
SHUTDOWN_TIMEOUT_S = 5.0


# -- messages -----------------------------------------------------------------

@dataclass(frozen=True)
class Candidate:
    trial_id: int
    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))
        if self.trial_id < 0:
            raise ValueError(f"trial_id must be >= 0, got {self.trial_id}")
        if not all(math.isfinite(c) for c in self.coords):
            raise ValueError(f"candidate coords must be finite: {self.coords}")


@dataclass(frozen=True)
class Result:
    trial_id: int
    value: float  # +inf marks a failed evaluation
    duration_s: float

    def __post_init__(self):
        if self.trial_id < 0:
            raise ValueError(f"trial_id must be >= 0, got {self.trial_id}")
        if math.isnan(self.value) or self.value == -math.inf:
            raise ValueError(f"result value must be finite or +inf, got {self.value}")


@dataclass(frozen=True)
class Shutdown:
    pass


@dataclass(frozen=True)
class Hello:
    agent_id: Optional[int] = None


Message = Union[Candidate, Result, Shutdown, Hello]


def encode(msg: Message) -> bytes:
    """One UTF-8 JSON object terminated by a newline."""
    if isinstance(msg, Candidate):
        obj = {"type": "candidate", "trial_id": msg.trial_id, "coords": list(msg.coords)}
    elif isinstance(msg, Result):
        value = msg.value if math.isfinite(msg.value) else "inf"
        obj = {"type": "result", "trial_id": msg.trial_id, "value": value, "duration_s": msg.duration_s}
    elif isinstance(msg, Shutdown):
        obj = {"type": "shutdown"}
    elif isinstance(msg, Hello):
        obj = {"type": "hello", "agent_id": msg.agent_id}
    else:
        raise TypeError(f"not a message: {msg!r}")
    # json emits floats via repr, the shortest round-trip form
    return (json.dumps(obj, allow_nan=False, separators=(",", ":")) + "\n").encode("utf-8")


def decode(line: Union[bytes, str]) -> Message:
    if isinstance(line, bytes):
        line = line.decode("utf-8")
    try:
        obj = json.loads(line)
        kind = obj["type"]
        if kind == "candidate":
            return Candidate(int(obj["trial_id"]), tuple(obj["coords"]))
        if kind == "result":
            value = obj["value"]
            value = math.inf if value == "inf" else float(value)
            return Result(int(obj["trial_id"]), value, float(obj["duration_s"]))
        if kind == "shutdown":
            return Shutdown()
        if kind == "hello":
            agent_id = obj.get("agent_id")
            return Hello(None if agent_id is None else int(agent_id))
    except (ValueError, KeyError, TypeError) as exc:
        raise ProtocolError(f"malformed message {line!r}: {exc}") from None
    raise ProtocolError(f"unknown message type {kind!r}")


# -- ports --------------------------------------------------------------------

class InPort:
    """Receiving endpoint."""

    def probe(self) -> bool:
        raise NotImplementedError

    def recv(self) -> Message:
        raise NotImplementedError

    def wait(self, timeout: Optional[float] = None) -> bool:
        """Block until a message is ready (agent side only)."""
        raise NotImplementedError


class OutPort:
    """Sending endpoint."""

    def send(self, msg: Message) -> None:
        raise NotImplementedError

    def close(self) -> None:
        pass


class _Channel:
    def __init__(self, capacity: int = QUEUE_CAPACITY):
        self.queue: queue.Queue = queue.Queue(maxsize=capacity)
        self.closed = threading.Event()


class QueueOutPort(OutPort):
    def __init__(self, channel: _Channel):
        self._channel = channel

    def send(self, msg: Message) -> None:
        if self._channel.closed.is_set():
            raise PortClosed("channel closed")
        try:
            self._channel.queue.put_nowait(msg)
        except queue.Full:
            raise ProtocolError(f"channel over capacity {QUEUE_CAPACITY}") from None
        if isinstance(msg, Shutdown):
            self._channel.closed.set()

    def close(self) -> None:
        self._channel.closed.set()


class QueueInPort(InPort):
    def __init__(self, channel: _Channel):
        self._channel = channel
        self._held: list = []  # message taken off the queue by a blocking wait

    def probe(self) -> bool:
        if self._held or not self._channel.queue.empty():
            return True
        if self._channel.closed.is_set():
            raise PortClosed("peer closed the channel")
        return False

    def recv(self) -> Message:
        if self._held:
            return self._held.pop()
        try:
            return self._channel.queue.get_nowait()
        except queue.Empty:
            raise WouldBlock("recv called with no message ready") from None

    def wait(self, timeout: Optional[float] = None) -> bool:
        deadline = None if timeout is None else time.monotonic() + timeout
        while not self.probe():
            step = 0.1 if deadline is None else min(0.1, deadline - time.monotonic())
            if step <= 0:
                return False
            try:
                self._held.append(self._channel.queue.get(timeout=step))
            except queue.Empty:
                pass
        return True


def channel_pair() -> tuple[QueueOutPort, QueueInPort]:
    ch = _Channel()
    return QueueOutPort(ch), QueueInPort(ch)


class SocketPort(InPort, OutPort):
    """Both directions of one TCP connection, framed by newlines."""

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._buf = bytearray()
        self._eof = False
        self._shutdown_sent = False
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

    def send(self, msg: Message) -> None:
        if self._shutdown_sent:
            raise PortClosed("shutdown already sent on this connection")
        try:
            self._sock.sendall(encode(msg))
        except OSError as exc:
            raise PortClosed(f"send failed: {exc}") from exc
        if isinstance(msg, Shutdown):
            self._shutdown_sent = True

    def _fill(self, timeout: float) -> None:
        while not self._eof and b"\n" not in self._buf:
            try:
                ready, _, _ = select.select([self._sock], [], [], timeout)
            except (OSError, ValueError):
                self._eof = True
                return
            if not ready:
                return
            try:
                data = self._sock.recv(65536)
            except OSError:
                data = b""
            if not data:
                self._eof = True
                return
            self._buf += data
            timeout = 0.0

    def probe(self) -> bool:
        self._fill(0.0)
        if b"\n" in self._buf:
            return True
        if self._eof:
            raise PortClosed("peer disconnected")
        return False

    def wait(self, timeout: Optional[float] = None) -> bool:
        deadline = None if timeout is None else time.monotonic() + timeout
        while True:
            remaining = None if deadline is None else max(0.0, deadline - time.monotonic())
            self._fill(remaining if remaining is not None else 1.0)
            if self.probe():
                return True
            if deadline is not None and time.monotonic() >= deadline:
                return False

    def recv(self) -> Message:
        if b"\n" not in self._buf:
            self._fill(0.0)
            if b"\n" not in self._buf:
                raise WouldBlock("recv called with no complete message buffered")
        line, _, rest = bytes(self._buf).partition(b"\n")
        self._buf = bytearray(rest)
        return decode(line)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


@dataclass
class PortPair:
    """Coordinator-side endpoints for one agent."""

    agent_id: int
    to_agent: OutPort
    from_agent: InPort


# -- agents -------------------------------------------------------------------

Objective = Callable[[Sequence[float]], float]


def agent_loop(inbox: InPort, outbox: OutPort, objective: Objective, agent_id: int = 0) -> None:
    """Serve Candidates until Shutdown; every Candidate gets exactly one Result."""
    try:
        while True:
            inbox.wait()
            msg = inbox.recv()
            if isinstance(msg, Shutdown):
                return
            if not isinstance(msg, Candidate):
                raise ProtocolError(f"agent {agent_id} got unexpected {msg!r}")
            start = time.perf_counter()
            try:
                value = float(objective(msg.coords))
            except Exception:
                log.exception("agent %d: objective failed on %s", agent_id, msg.coords)
                value = math.inf
            if not math.isfinite(value):
                value = math.inf
            outbox.send(Result(msg.trial_id, value, time.perf_counter() - start))
    except PortClosed:
        log.debug("agent %d: coordinator went away", agent_id)
    finally:
        outbox.close()


class AgentPool:
    """Running agents plus the coordinator-side ports that reach them."""

    def __init__(self, ports: list[PortPair], threads: list[threading.Thread], cleanup=None):
        self.ports = ports
        self.threads = threads
        self._cleanup = cleanup

    def __len__(self) -> int:
        return len(self.ports)

    def shutdown(self, timeout: float = SHUTDOWN_TIMEOUT_S) -> bool:
        """Send Shutdown to every agent; True if all exited in time."""
        for pair in self.ports:
            try:
                pair.to_agent.send(Shutdown())
            except PortClosed:
                pass
        deadline = time.monotonic() + timeout
        for t in self.threads:
            t.join(max(0.0, deadline - time.monotonic()))
        alive = [t.name for t in self.threads if t.is_alive()]
        if alive:
            log.warning("agents still running after shutdown: %s", alive)
        if self._cleanup:
            self._cleanup()
        return not alive

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.shutdown()


ObjectiveFactory = Callable[[int], Objective]


def spawn_inprocess(make_objective: ObjectiveFactory, num_agents: int) -> AgentPool:
    if num_agents < 1:
        raise ValueError(f"numAgents must be >= 1, got {num_agents}")
    ports, threads = [], []
    for k in range(num_agents):
        to_out, to_in = channel_pair()
        from_out, from_in = channel_pair()
        try:
            objective = make_objective(k)
        except Exception as exc:
            raise AgentSpawnFailure(f"agent {k}: could not build objective: {exc}") from exc
        t = threading.Thread(target=agent_loop, args=(to_in, from_out, objective, k),
                             name=f"agent-{k}", daemon=True)
        t.start()
        ports.append(PortPair(k, to_out, from_in))
        threads.append(t)
    return AgentPool(ports, threads)


def parse_address(address: str) -> tuple[str, int]:
    host, sep, port = address.rpartition(":")
    if not sep:
        raise ValueError(f"address {address!r} is not host:port")
    return host or "127.0.0.1", int(port)


class TcpListener:
    """Coordinator listen socket; assigns agent identities from hello messages."""

    def __init__(self, address: str = "127.0.0.1:0"):
        host, port = parse_address(address)
        self._sock = socket.create_server((host, port))
        self.address = "%s:%d" % self._sock.getsockname()[:2]

    def accept_agents(self, num_agents: int, timeout: Optional[float] = 30.0) -> list[PortPair]:
        ports: dict[int, SocketPort] = {}
        self._sock.settimeout(timeout)
        try:
            while len(ports) < num_agents:
                try:
                    conn, _ = self._sock.accept()
                except socket.timeout:
                    raise AgentSpawnFailure(
                        f"only {len(ports)} of {num_agents} agents connected within {timeout}s"
                    ) from None
                conn.settimeout(None)
                port = SocketPort(conn)
                if not port.wait(timeout):
                    port.close()
                    raise AgentSpawnFailure("agent connected but sent no hello")
                hello = port.recv()
                if not isinstance(hello, Hello):
                    port.close()
                    raise ProtocolError(f"expected hello, got {hello!r}")
                agent_id = hello.agent_id
                if agent_id is None:
                    agent_id = min(set(range(num_agents)) - set(ports))
                if not 0 <= agent_id < num_agents or agent_id in ports:
                    port.close()
                    raise ProtocolError(f"agent id {agent_id} invalid or already taken")
                ports[agent_id] = port
        except BaseException:
            for p in ports.values():
                p.close()
            raise
        return [PortPair(k, ports[k], ports[k]) for k in sorted(ports)]

    def close(self) -> None:
        self._sock.close()


def connect_agent(address: str, agent_id: Optional[int] = None, timeout: float = 10.0) -> SocketPort:
    host, port = parse_address(address)
    sock = socket.create_connection((host, port), timeout=timeout)
    sock.settimeout(None)
    endpoint = SocketPort(sock)
    endpoint.send(Hello(agent_id))
    return endpoint


def serve_tcp_agent(address: str, objective: Objective, agent_id: Optional[int] = None) -> None:
    endpoint = connect_agent(address, agent_id)
    agent_loop(endpoint, endpoint, objective, -1 if agent_id is None else agent_id)


def spawn_tcp(make_objective: ObjectiveFactory, num_agents: int,
              address: str = "127.0.0.1:0") -> AgentPool:
    """Listen on ``address`` and start local agent threads that connect over TCP."""
    if num_agents < 1:
        raise ValueError(f"numAgents must be >= 1, got {num_agents}")
    listener = TcpListener(address)
    threads = []
    try:
        for k in range(num_agents):
            objective = make_objective(k)
            t = threading.Thread(target=serve_tcp_agent, args=(listener.address, objective, k),
                                 name=f"tcp-agent-{k}", daemon=True)
            t.start()
            threads.append(t)
        ports = listener.accept_agents(num_agents)
    except Exception as exc:
        listener.close()
        if isinstance(exc, (AgentSpawnFailure, ProtocolError)):
            raise
        raise AgentSpawnFailure(str(exc)) from exc

    def cleanup():
        for p in ports:
            p.to_agent.close()
        listener.close()

    return AgentPool(ports, threads, cleanup)


def wait_for_tcp_agents(num_agents: int, address: str, timeout: Optional[float] = None) -> AgentPool:
    """Listen and wait for externally launched agents (``swarmopt agent``)."""
    listener = TcpListener(address)
    log.info("waiting for %d agents on %s", num_agents, listener.address)
    try:
        ports = listener.accept_agents(num_agents, timeout)
    except Exception:
        listener.close()
        raise

    def cleanup():
        for p in ports:
            p.to_agent.close()
        listener.close()

    return AgentPool(ports, [], cleanup)
