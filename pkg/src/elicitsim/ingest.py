"""Reading and writing rating files, and the cross-domain user filter."""

from __future__ import annotations

import csv
import gzip
import logging
from pathlib import Path
from typing import Iterable

from .data import Dataset, Rating, build_dataset, check_value
from .errors import (EmptyResult, MalformedRow, MissingFile, TruncatedBlock,
                     UnparsableScore)

_log = logging.getLogger(__name__)

CSV_HEADER = ("user_id", "item_id", "rating", "domain")


def _open_text(path):
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"no such file: {path}")
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8", errors="replace")
    return open(path, "r", encoding="utf-8", newline="")


def load_csv(path) -> list[Rating]:
    """Read ``user_id,item_id,rating,domain`` rows.

    Ratings must be integers 1..5; a fractional or out-of-range value raises
    ValueOutOfRange with the 1-based line number.
    """
    out = []
    with _open_text(path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return out
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise MalformedRow(1, f"expected header {','.join(CSV_HEADER)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise MalformedRow(line, f"expected 4 fields, got {len(row)}")
            user, item, text, domain = (c.strip() for c in row)
            if not user or not item or not domain:
                raise MalformedRow(line, "empty field")
            try:
                num = float(text)
            except ValueError:
                raise MalformedRow(line, f"rating {text!r} is not a number") from None
            out.append(Rating(user, item, check_value(num, line), domain))
    return out


def load_dataset(path, domain: str) -> Dataset:
    """Load a CSV and keep the rows of `domain`."""
    ratings = [r for r in load_csv(path) if r.domain == domain]
    return build_dataset(ratings, domain)


def write_csv(ratings: Iterable[Rating], path) -> None:
    """Write ratings sorted by (user, item) so equal inputs give equal bytes."""
    rows = sorted(ratings, key=lambda r: (r.domain, r.user, r.item))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow((r.user, r.item, int(r.value), r.domain))


def convert_snap(path, domain: str) -> list[Rating]:
    """Parse an Amazon SNAP review dump into ratings.

    Blocks of ``key: value`` lines are separated by blank lines; only
    ``product/productId``, ``review/userId`` and ``review/score`` are used.
    A repeated (user, item) pair keeps the last block's score.
    """
    fields = {"product/productId": "item", "review/userId": "user", "review/score": "score"}
    latest: dict[tuple[str, str], Rating] = {}
    dupes = 0

    def finish(block, line):
        nonlocal dupes
        if not block:
            return
        missing = [k for k, v in fields.items() if v not in block]
        if missing:
            raise TruncatedBlock(line, missing)
        text, sline = block["score"]
        try:
            num = float(text)
        except ValueError:
            raise UnparsableScore(sline, text) from None
        value = check_value(num, sline)
        key = (block["user"][0], block["item"][0])
        if key in latest:
            dupes += 1
            latest.pop(key)
        latest[key] = Rating(key[0], key[1], value, domain)

    block: dict = {}
    n = 0
    with _open_text(path) as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                finish(block, n - 1)
                block = {}
                continue
            key, sep, val = line.partition(":")
            name = fields.get(key.strip())
            if sep and name is not None:
                block[name] = (val.strip(), n)
    finish(block, n)
    if dupes:
        _log.warning("%s: %d duplicate (user, item) reviews, kept the last of each", path, dupes)
    return list(latest.values())


def filter_overlap(target: Dataset, auxiliary: Dataset, min_per_domain: int = 20):
    """Keep users with at least `min_per_domain` ratings in both domains."""
    t_counts = dict(zip(target.users, target.user_counts().tolist()))
    a_counts = dict(zip(auxiliary.users, auxiliary.user_counts().tolist()))
    keep = {u for u, c in t_counts.items()
            if c >= min_per_domain and a_counts.get(u, 0) >= min_per_domain}
    if not keep:
        raise EmptyResult(f"no user has {min_per_domain}+ ratings in both domains")
    t, a = target.restrict_users(keep), auxiliary.restrict_users(keep)
    _log.info("overlap filter kept %d users: %d target and %d auxiliary ratings",
              len(keep), len(t), len(a))
    return t, a


def describe(dataset: Dataset) -> str:
    return (f"{dataset.domain}: {len(dataset)} ratings, {dataset.n_users} users, "
            f"{dataset.n_items} items, density {100 * dataset.density:.2f}%")
