import argparse
import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple
from pydantic import BaseModel, ConfigDict
from src.errors import ArgumentError
from src.settings import CliConfig, Settings
from src.storage import read_json

logger = logging.getLogger(__name__)


class CommandContext(BaseModel):
    """What every command handler receives next to its parsed arguments."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    settings: Settings
    config: CliConfig
    digest: str
    raw_config: Optional[Any] = None


Handler = Callable[[argparse.Namespace, CommandContext], int]
Argument = Tuple[Tuple[str, ...], Dict[str, Any]]


class Command(NamedTuple):
    name: str
    help: str
    handler: Handler
    arguments: Tuple[Argument, ...]


def argument(*flags: str, **kwargs: Any) -> Argument:
    return flags, kwargs


class CommandRouter:
    """
   Collects subcommands the way a web router collects endpoints.

   Handlers are registered with `@router.command(...)`; `include_router` merges
   routers and `mount` turns them into argparse subparsers.
   """

    def __init__(self):
        self.commands: List[Command] = []

    def command(self, name: str, help: str, arguments: Sequence[Argument] = ()) -> Callable[[Handler], Handler]:
        def decorator(fn: Handler) -> Handler:
            self.commands.append(Command(name, help, fn, tuple(arguments)))
            return fn

        return decorator

    def include_router(self, other: "CommandRouter") -> None:
        known = {c.name for c in self.commands}
        for cmd in other.commands:
            if cmd.name in known:
                raise ValueError(f"Command {cmd.name!r} registered twice")
            self.commands.append(cmd)

    def mount(self, subparsers, parents: Sequence[argparse.ArgumentParser] = ()) -> None:
        for cmd in self.commands:
            parser = subparsers.add_parser(cmd.name, help=cmd.help, parents=list(parents))
            for flags, kwargs in cmd.arguments:
                parser.add_argument(*flags, **kwargs)
            parser.set_defaults(handler=cmd.handler)


def json_argument(value: str) -> Any:
    """Inline JSON when the value looks like JSON, otherwise a path to a JSON file."""
    text = value.strip()
    if text[:1] in ("{", "["):
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise ArgumentError(f"invalid inline JSON: {e.msg}")
    return read_json(Path(text))


def int_list(value: str) -> List[int]:
    try:
        return [int(v) for v in value.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}")
