#!/usr/bin/env python
"""
Regenerate the expected.json files of the regression corpus.

Run the checks on the corpus entries and write the verdicts obtained as the
new expected ones, keeping the notes. Review the diff before committing it.
"""

# Copyright (C) 2022 The CommCSL Team

import os
import sys
import json
import logging
from argparse import ArgumentParser, Namespace
from typing import Any, Dict

from commcsl.corpus import EXPECTED_FILE, CorpusEntry
from commcsl.corpus import actual_verdicts, load_entries

logger = logging.getLogger()
logging.basicConfig(
    level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s"
)


def main() -> int:
    opt = parse_cmdline()
    entries = load_entries(opt.corpus_dir, opt.pattern)
    if not entries:
        logger.error("no entry matching %r in %s", opt.pattern, opt.corpus_dir)
        return 1

    for entry in entries:
        update_entry(entry, dry_run=opt.dry_run)
    return 0


def update_entry(entry: CorpusEntry, dry_run: bool = False) -> None:
    logger.info("checking %s", entry.name)
    actual = actual_verdicts(entry)
    data: Dict[str, Any] = {}
    if "notes" in entry.expected:
        data["notes"] = entry.expected["notes"]
    data.update(sorted(actual.items()))

    old = {k: v for k, v in entry.expected.items() if k != "notes"}
    if old == actual:
        return
    logger.warning("%s: %s -> %s", entry.name, old, actual)
    if dry_run:
        return

    fn = os.path.join(entry.path, EXPECTED_FILE)
    with open(fn, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2)
        f.write("\n")
    logger.info("%s written", fn)


def parse_cmdline() -> Namespace:
    parser = ArgumentParser(description=__doc__)
    parser.add_argument(
        "pattern", nargs="?", default="*", help="entries to update [default: all]"
    )
    parser.add_argument(
        "--corpus-dir",
        default=os.path.join(os.path.dirname(__file__), "..", "corpus"),
        help="the corpus directory [default: %(default)s]",
    )
    parser.add_argument(
        "--dry-run",
        action="store_true",
        help="only report the entries whose verdicts changed",
    )
    return parser.parse_args()


if __name__ == "__main__":
    sys.exit(main())
