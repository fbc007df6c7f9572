"""JSON schemas for potential specifications, run configurations and reports."""
import json
from functools import lru_cache
from importlib import resources

import jsonschema

from ..errors import SpecError


@lru_cache(maxsize=None)
def load(name: str) -> dict:
    text = resources.files(__name__).joinpath(f"{name}.json").read_text()
    return json.loads(text)


def available() -> list:
    return sorted(p.name[:-5] for p in resources.files(__name__).iterdir()
                  if p.name.endswith(".json"))


def pointer(path) -> str:
    """JSON pointer for a jsonschema error path."""
    parts = [str(p).replace("~", "~0").replace("/", "~1") for p in path]
    return "/" + "/".join(parts) if parts else ""


def validate(instance, name: str) -> None:
    """Validate against a shipped schema; raises :class:`SpecError` on failure."""
    schema = load(name)
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(instance), key=lambda e: (len(e.path), list(map(str, e.path))))
    if errors:
        err = errors[0]
        ptr = pointer(err.absolute_path)
        if err.validator == "required":
            missing = err.message.split("'")[1] if "'" in err.message else ""
            ptr = f"{ptr}/{missing}" if missing else ptr
        raise SpecError(err.message, ptr)
