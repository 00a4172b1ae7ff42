# Optional per-node TOML file.
#
#   [node]
#   name = "manager"
#   port = 7050
#
#   [stubs]
#   "flight.BookingSystem.book" = ["fail", "succeed"]
#   sendMessage = "succeed"
#
#   [tables.flights]
#   rows = [ { flight = "lh123", dest = "paris" } ]
#
#   [peers]
#   agent = "127.0.0.1:7051"
import logging
import attr
import toml
from settings import DEFAULT_AGENT_NAME, DEFAULT_PORT, STUB_DEFAULT
from reactor.errors import ConfigError
from reactor.messaging.transports import parse_address
from reactor.solver.stubs import StubTable, TableRegistry

logger = logging.getLogger("reactor.config")


@attr.s(frozen=True, slots=True)
class NodeConfig:
    name = attr.ib(default=DEFAULT_AGENT_NAME)
    port = attr.ib(default=DEFAULT_PORT)
    stubs = attr.ib(factory=dict)
    stub_default = attr.ib(default=STUB_DEFAULT)
    # name -> list of row dicts
    tables = attr.ib(factory=dict)
    # name -> (host, port)
    peers = attr.ib(factory=dict)

    def stub_table(self):
        return StubTable(self.stubs, self.stub_default)

    def table_registry(self):
        return TableRegistry(self.tables)

    def with_peers(self, peers):
        merged = dict(self.peers)
        merged.update(peers)
        return attr.evolve(self, peers=merged)


def parse_peers(entries, source="--peers"):
    peers = {}
    for name, text in entries.items():
        address = parse_address(text)
        if address is None:
            raise ConfigError(source, f"peer {name} needs host:port, got {text}")
        peers[name] = address
    return peers


def parse_peer_option(text):
    # name=host:port,name=host:port
    entries = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        name, sep, address = item.partition("=")
        if not sep:
            raise ConfigError("--peers", f"expected name=host:port, got {item}")
        entries[name.strip()] = address.strip()
    return parse_peers(entries)


def config_from_dict(data, source="<config>"):
    node = data.get("node", {})
    stubs = dict(data.get("stubs", {}))
    stub_default = stubs.pop("default", STUB_DEFAULT)
    tables = {}
    for name, table in data.get("tables", {}).items():
        rows = table.get("rows") if isinstance(table, dict) else table
        if not isinstance(rows, list):
            raise ConfigError(source, f"table {name} needs a rows list")
        tables[name] = rows
    try:
        config = NodeConfig(
            name=node.get("name", DEFAULT_AGENT_NAME),
            port=int(node.get("port", DEFAULT_PORT)),
            stubs=stubs,
            stub_default=stub_default,
            tables=tables,
            peers=parse_peers(data.get("peers", {}), source),
        )
        # behaviours are checked when the table is built
        config.stub_table()
    except ValueError as err:
        raise ConfigError(source, err) from err
    return config


def load_config(path=None):
    if path is None:
        return NodeConfig()
    try:
        data = toml.load(path)
    except (OSError, toml.TomlDecodeError) as err:
        raise ConfigError(path, err) from err
    logger.info("configuration read from %s", path)
    return config_from_dict(data, str(path))
