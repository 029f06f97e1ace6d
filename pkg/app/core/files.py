"""
Text input shared by the store, ingest and schema readers.
"""

from pathlib import Path

from app.core.exceptions import ParseError

# utf-8-sig drops a leading byte-order mark and reads plain UTF-8 unchanged
TEXT_ENCODING = "utf-8-sig"


def read_text_file(path) -> str:
    """
    Read a whole UTF-8 document.

    Raises:
        ParseError: the file is not valid UTF-8
        OSError: the file cannot be opened
    """
    path = Path(path)
    try:
        return path.read_text(encoding=TEXT_ENCODING)
    except UnicodeDecodeError as e:
        raise ParseError(f"not valid UTF-8 at byte {e.start}", source=str(path))
