"""
Shared behaviour of the bprx management commands: every failure is mapped
to an exit code by the central command exception handler.
"""

from django.core.management.base import BaseCommand, CommandError

from app.utils.exception_handler import command_exception_handler
from app.utils.exceptions import ConfigError


def parse_sizes(text: str):
    """'100,200,500' -> [100, 200, 500]; blank entries are ignored."""
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"--sizes must be comma-separated integers, got '{text}'")


class BprxCommand(BaseCommand):
    def handle(self, *args, **options):
        try:
            self.run(**options)
        except CommandError:
            raise
        except Exception as exc:
            code, message = command_exception_handler(exc, {"command": type(self).__module__.rsplit(".", 1)[-1]})
            raise CommandError(message, returncode=code)

    def run(self, **options):
        raise NotImplementedError
