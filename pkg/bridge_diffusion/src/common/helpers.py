from datetime import datetime
from functools import wraps
import json
import logging
from pathlib import Path

from dateutil.tz import tzlocal
import pandas as pd

from bridge_diffusion.src.common.constants import Constants
from bridge_diffusion.src.common.exceptions import BridgeDiffusionError

log = logging.getLogger()


def reports_errors(command):
    """
    Decorator for subcommands so that expected failures reach the entry point as a
    :class:`BridgeDiffusionError` carrying an exit code
    :param command: The subcommand function
    :return: Will re-raise a BridgeDiffusionError if one is caught
    :return: Will raise a BridgeDiffusionError for other expected errors
    """

    @wraps(command)
    def wrapper_reports_errors(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except BridgeDiffusionError as e:
            log.exception(msg=e.args)
            raise e
        except (ValueError, TypeError) as e:
            log.exception(e.args)
            raise BridgeDiffusionError(str(e))
        except OSError as e:
            log.exception(e.args)
            raise BridgeDiffusionError(f"Could not access output: {e}")

    return wrapper_reports_errors


def ensure_out_dir(out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def write_csv(rows, path, header_comments=()):
    """
    Writes records as CSV with a header row. Floats use '.' as decimal separator and
    a fixed number of significant digits, so reruns with the same seed produce
    byte-identical bodies. Optional `# key: value` comment lines (seeds, presets)
    precede the header.

    :param rows: Records to write, one mapping per row
    :type rows: :class:`list` of :class:`dict`
    :param path: Destination of the CSV file
    :param header_comments: `(key, value)` pairs written as leading comment lines
    :return: Path of the written file
    """
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as target:
        for key, value in header_comments:
            target.write(f"# {key}: {value}\n")
        pd.DataFrame(rows).to_csv(
            target, index=False, float_format="%.12g", lineterminator="\n",
        )
    log.info("Wrote %d rows to %s", len(rows), path)
    return path


def read_csv(path):
    return pd.read_csv(path, comment="#")


def write_json_report(report, path):
    """
    Writes a schema-versioned JSON report. The generation time is metadata only and is
    kept outside of the `body` so that bodies of reruns compare equal.
    """
    document = {
        "schema_version": Constants.REPORT_SCHEMA_VERSION,
        "generated_at": datetime_now_str(),
        "body": report,
    }
    path = Path(path)
    with open(path, "w", encoding="utf-8") as target:
        json.dump(document, target, indent=2, sort_keys=True)
    log.info("Wrote report to %s", path)
    return path


def datetime_now_str():
    return datetime.now(tzlocal()).isoformat(" ")
