"""Output helpers shared by the CSV writers."""

import contextlib


@contextlib.contextmanager
def text_out(target):
    """Yield a writable text handle for a path or an already open file."""
    if hasattr(target, "write"):
        yield target
        return
    try:
        fh = open(target, "w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {target}: {exc}") from exc
    with fh:
        yield fh
