import math
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path

import click


def format_sig(value, digits=6):
    """Formats a number with `digits` significant digits, as used in every text output."""
    return f"{value:.{digits}g}"


def format_time(seconds):
    """Seconds to the nanosecond, without trailing zeros."""
    text = f"{seconds:.9f}".rstrip('0').rstrip('.')
    return "0" if text == "-0" else text


def parse_snr(snr_str):
    """
    Parses an SNR given on the command line.
    :param snr_str: decibels, or one of "inf"/"clean" for no noise at all
    :return: float, possibly math.inf
    """
    value = str(snr_str).strip().lower()
    if value in ("inf", "+inf", "clean"):
        return math.inf

    try:
        snr_db = float(value)
    except ValueError:
        raise click.BadParameter(
            f"SNR needs to be a number of decibels or 'clean', got {snr_str}"
        )
    if not math.isfinite(snr_db):
        raise click.BadParameter(f"SNR needs to be finite, got {snr_str}")
    return snr_db


def parse_snr_list(snr_str):
    return [parse_snr(part) for part in snr_str.split(',') if part.strip()]


def parse_name_list(value):
    """ "vowel, diphthong,semivowel" -> ("vowel", "diphthong", "semivowel") """
    if value is None:
        return ()
    return tuple(part.strip() for part in value.split(',') if part.strip())


def limit_str_length(value, max_len=50):
    max_len = max(max_len, 3)
    value = str(value) if value is not None else ""
    if len(value) > max_len:
        return f"{value[:max_len - 3]}..."
    return value


@contextmanager
def atomic_output(path, mode='w'):
    """
    Yields a file object whose content replaces `path` only if the block
    finishes without an exception.
    """
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent or Path('.')))
    os.close(fd)
    try:
        newline = '' if 'b' not in mode else None
        with open(tmp_name, mode, newline=newline) as handle:
            yield handle
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.remove(tmp_name)
        except OSError:
            pass
        raise


@contextmanager
def atomic_path(path):
    """
    Like `atomic_output`, but yields a temporary path for writers that insist
    on opening the file themselves (soundfile).
    """
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.stem}.", suffix=path.suffix,
                                    dir=str(path.parent or Path('.')))
    os.close(fd)
    try:
        yield tmp_name
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.remove(tmp_name)
        except OSError:
            pass
        raise
