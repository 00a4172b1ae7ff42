import functools
import signal
import sys
import threading
from pathlib import Path
import click
from settings import TICK_MILLIS, PARALLELISM, DEFAULT_AGENT_NAME, DEBUG_MODE
from app import ReactorApp
from reactor.clock import ManualClock, SystemClock
from reactor.config import load_config, parse_peer_option
from reactor.eca import DaemonConfig, format_outcome
from reactor.errors import ReactorError
from reactor.messaging.reactions import Message
from reactor.messaging.transports import TcpTransport
from reactor.parser import parse_program, parse_term, format_term, format_module
from reactor.ruleml import export, import_, clauses_to_items, items_to_clauses
from reactor.terms import Const

EXIT_OK = 0
EXIT_NO_SOLUTION = 1
EXIT_ERROR = 2

RULE_SUFFIXES = (".rr",)

# --------------
# Helpers
# --------------
def exits_on_error(command):
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (ReactorError, OSError, UnicodeDecodeError) as err:
            if DEBUG_MODE:
                raise
            click.echo(f"error: {err}", err=True)
            sys.exit(EXIT_ERROR)

    return wrapper


def build_app(config_path, peers=None, clock=None, daemon_config=None, observer=None):
    config = load_config(config_path)
    if peers:
        config = config.with_peers(parse_peer_option(peers))
    return ReactorApp(
        config, clock=clock, daemon_config=daemon_config, observer=observer, output=click.echo
    )


def format_solution(solution):
    pairs = [
        f"{name}={format_term(term)}"
        for name, term in solution.by_name().items()
        if not name.startswith("_")
    ]
    return ", ".join(pairs) if pairs else "true"


# --------------
# Commands
# --------------
@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.pass_context
def cli(ctx, config_path):
    """Homogeneous reaction rule engine."""
    ctx.obj = config_path


@cli.command()
@click.argument("files", nargs=-1, type=click.Path(exists=True))
@click.option("-q", "--query", "goal", required=True, help='A goal ending in "?"')
@click.option("--all", "all_solutions", is_flag=True, help="Print every solution")
@click.pass_obj
@exits_on_error
def query(config_path, files, goal, all_solutions):
    app = build_app(config_path)
    app.load(files)
    solutions = app.query(goal, all_solutions)
    app.settle()
    for solution in solutions:
        click.echo(format_solution(solution))
    sys.exit(EXIT_OK if solutions else EXIT_NO_SOLUTION)


@cli.command()
@click.argument("files", nargs=-1, type=click.Path(exists=True))
@click.option("-n", "ticks", default=1, show_default=True, help="Daemon ticks to run")
@click.option("--tick", "tick_millis", default=TICK_MILLIS, show_default=True)
@click.option("--system-clock", is_flag=True, help="Use wall time instead of a stepped clock")
@click.pass_obj
@exits_on_error
def step(config_path, files, ticks, tick_millis, system_clock):
    clock = SystemClock() if system_clock else ManualClock(SystemClock().now())
    app = build_app(config_path, clock=clock, daemon_config=DaemonConfig(tick_millis=tick_millis))
    app.load(files)
    for _ in range(ticks):
        for outcome in app.step():
            click.echo(format_outcome(outcome))
        if not system_clock:
            clock.advance(tick_millis)


@cli.command()
@click.argument("files", nargs=-1, type=click.Path(exists=True))
@click.option("--tick", "tick_millis", default=TICK_MILLIS, show_default=True)
@click.option("--parallel", "parallelism", default=0, help="Evaluate eca rules on n threads")
@click.option("--port", default=None, type=int)
@click.option("--peers", default=None, help="name=host:port,...")
@click.pass_obj
@exits_on_error
def run(config_path, files, tick_millis, parallelism, port, peers):
    daemon_config = DaemonConfig(
        tick_millis=tick_millis,
        parallelism=parallelism or PARALLELISM,
        mode="parallel" if parallelism else "sequential",
    )
    app = build_app(
        config_path,
        peers=peers,
        daemon_config=daemon_config,
        observer=lambda outcome: click.echo(format_outcome(outcome), err=True),
    )
    app.load(files)
    host, bound = app.listen(port)
    click.echo(f"{app.engine.name} listening on {host}:{bound}", err=True)

    stopping = threading.Event()
    signal.signal(signal.SIGTERM, lambda *_: stopping.set())
    app.start()
    try:
        while not stopping.wait(0.5):
            pass
    except KeyboardInterrupt:
        pass
    finally:
        app.stop()


@cli.command()
@click.option("--to", "address", required=True, help="host:port")
@click.option("--xid", required=True)
@click.option("--performative", default="inform", show_default=True)
@click.option("--payload", required=True, help="A term")
@click.option("--protocol", default="tcp", show_default=True)
@click.option("--sender", default=DEFAULT_AGENT_NAME, show_default=True)
@exits_on_error
def send(address, xid, performative, payload, protocol, sender):
    message = Message(
        parse_term(xid),
        protocol,
        Const(sender),
        Const(address),
        Const(performative),
        parse_term(payload),
        mode="outbound",
    )
    status, where = TcpTransport().deliver(message)
    click.echo(f"{status} {where}")


@cli.command()
@click.argument("file", type=click.Path(exists=True))
@click.option("--to", "target", type=click.Choice(["ruleml", "rr"]), default=None)
@exits_on_error
def translate(file, target):
    path = Path(file)
    if target is None:
        target = "ruleml" if path.suffix in RULE_SUFFIXES else "rr"
    text = path.read_text(encoding="utf-8")
    if target == "ruleml":
        module = parse_program(text, Const(str(path)))
        if module.directives:
            click.echo(f"warning: {len(module.directives)} directives not translated", err=True)
        click.echo(export(clauses_to_items(module.clauses)))
    else:
        click.echo(format_module(items_to_clauses(import_(text))))


# --------------
# Run
# --------------
if __name__ == "__main__":
    cli()
