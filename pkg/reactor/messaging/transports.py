# Transports move a Message into some engine's inbound queue.
#
#   self, loopback -> straight into our own queue
#   tcp            -> 4 byte big-endian length + UTF-8 RuleML <Message>
#
#   +--------+--------+--------+--------+-------------------------+
#   |        length of body (unsigned)  |  body (length bytes)    |
#   +--------+--------+--------+--------+-------------------------+
import logging
import socket
import socketserver
import struct
import threading
from retrying import retry
from settings import (
    PROTOCOL_ALIASES,
    TCP_CONNECT_RETRIES,
    TCP_RETRY_WAIT_MILLIS,
    TCP_TIMEOUT,
    TCP_MAX_FRAME,
    PRINT_MESSAGES,
)
from reactor.errors import UnknownProtocol, UnresolvableAgent, TransportError, ReactorError
from reactor.parser import format_term
from reactor.terms import Const, Str

logger = logging.getLogger("reactor.transports")

HEADER = struct.Struct(">I")


# *********************************************
# Framing
# *********************************************
def encode_frame(text):
    body = text.encode("utf-8")
    return HEADER.pack(len(body)) + body


def _read_exactly(stream, size):
    chunks, remaining = [], size
    while remaining:
        chunk = stream.recv(remaining)
        if not chunk:
            return None
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(stream, max_size=TCP_MAX_FRAME):
    # None on a clean end of stream
    header = _read_exactly(stream, HEADER.size)
    if header is None:
        return None
    (size,) = HEADER.unpack(header)
    if size > max_size:
        raise TransportError(f"frame of {size} bytes exceeds {max_size}")
    body = _read_exactly(stream, size)
    if body is None:
        raise TransportError("connection closed inside a frame")
    try:
        return body.decode("utf-8")
    except UnicodeDecodeError as err:
        raise TransportError(f"frame is not UTF-8: {err.reason}") from err


def parse_address(text):
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        return None
    return host, int(port)


# *********************************************
# Transports
# *********************************************
class LoopbackTransport:
    def __init__(self, engine):
        self.engine = engine

    def deliver(self, message):
        self.engine.post(message)
        return ("queued", self.engine.name)


def _is_connection_error(err):
    return isinstance(err, OSError)


class TcpTransport:
    def __init__(self, peers=None):
        # agent name -> (host, port)
        self.peers = dict(peers or {})

    def resolve(self, agent):
        if isinstance(agent, Const) and agent.symbol in self.peers:
            return self.peers[agent.symbol]
        if isinstance(agent, (Const, Str)):
            text = agent.symbol if isinstance(agent, Const) else agent.value
            address = parse_address(text)
            if address is not None:
                return address
        raise UnresolvableAgent(agent, "tcp")

    def deliver(self, message):
        from reactor.ruleml import message_to_xml

        address = self.resolve(message.receiver)
        frame = encode_frame(message_to_xml(message))
        try:
            self._send(address, frame)
        except OSError as err:
            raise TransportError(f"{address[0]}:{address[1]} {err}") from err
        return ("sent", f"{address[0]}:{address[1]}")

    @retry(
        stop_max_attempt_number=TCP_CONNECT_RETRIES,
        wait_fixed=TCP_RETRY_WAIT_MILLIS,
        retry_on_exception=_is_connection_error,
    )
    def _send(self, address, frame):
        with socket.create_connection(address, timeout=TCP_TIMEOUT) as connection:
            connection.sendall(frame)


class TransportRegistry:
    def __init__(self, engine, peers=None):
        loopback = LoopbackTransport(engine)
        self.transports = {
            "self": loopback,
            "loopback": loopback,
            "tcp": TcpTransport(peers),
        }
        self._warned = set()

    @property
    def tcp(self):
        return self.transports["tcp"]

    def register(self, protocol, transport):
        self.transports[protocol] = transport

    def lookup(self, protocol):
        if protocol in self.transports:
            return self.transports[protocol]
        alias = PROTOCOL_ALIASES.get(protocol)
        if alias is None:
            raise UnknownProtocol(protocol)
        if protocol not in self._warned:
            self._warned.add(protocol)
            logger.warning("protocol %s is carried over %s", protocol, alias)
        return self.transports[alias]

    def deliver(self, message):
        receipt = self.lookup(message.protocol).deliver(message)
        might_print_message("sent", message)
        return receipt


# *********************************************
# Listening side
# *********************************************
class _FrameHandler(socketserver.BaseRequestHandler):
    def handle(self):
        from reactor.ruleml import message_from_xml

        engine = self.server.engine
        while True:
            try:
                text = read_frame(self.request)
                if text is None:
                    return
                engine.post(message_from_xml(text))
            except ReactorError as err:
                logger.warning("dropping frame from %s: %s", self.client_address, err)
                return


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class TcpListener:
    def __init__(self, engine, host="127.0.0.1", port=0):
        self.server = _Server((host, port), _FrameHandler)
        self.server.engine = engine
        self._thread = None

    @property
    def address(self):
        return self.server.server_address[:2]

    def start(self):
        self._thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self._thread.start()
        logger.info("listening on %s:%s", *self.address)
        return self

    def stop(self):
        self.server.shutdown()
        self.server.server_close()


def might_print_message(direction, message):
    if not PRINT_MESSAGES:
        return

    print("=============================")
    print(f"{direction} {message.protocol} {format_term(message.xid)}")
    print(f"...from {format_term(message.sender)} to {format_term(message.receiver)}")
    print(f"...{format_term(message.performative)} {format_term(message.payload)}")
    print("=============================")
