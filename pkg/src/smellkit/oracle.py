"""Weighted-vote merging of reviewer ballots into ground-truth labels."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .errors import ValidationError

CONFIDENCE_WEIGHTS = {
    "strongly_approve": 1.00,
    "weakly_approve": 0.66,
    "weakly_disapprove": 0.33,
    "strongly_disapprove": 0.00,
}

ANSWERS_PER_BALLOT = 3
POSITIVE_CUTOFF = 0.5


@dataclass(frozen=True)
class ReviewBallot:
    candidate_id: str
    answers: tuple[str, str, str]

    def __post_init__(self):
        if len(self.answers) != ANSWERS_PER_BALLOT:
            raise ValidationError(
                f"ballot for {self.candidate_id!r} needs exactly {ANSWERS_PER_BALLOT} answers"
            )
        for answer in self.answers:
            if answer not in CONFIDENCE_WEIGHTS:
                raise ValidationError(f"unknown confidence level: {answer!r}")


def merge_ballot(ballot: ReviewBallot) -> int:
    """Positive when the mean answer weight strictly exceeds the cutoff."""
    mean = sum(CONFIDENCE_WEIGHTS[a] for a in ballot.answers) / ANSWERS_PER_BALLOT
    return int(mean > POSITIVE_CUTOFF)


def oracle_merge(ballots: list[ReviewBallot]) -> dict[str, int]:
    labels: dict[str, int] = {}
    for ballot in ballots:
        if ballot.candidate_id in labels:
            raise ValidationError(f"duplicate ballot for candidate {ballot.candidate_id!r}")
        labels[ballot.candidate_id] = merge_ballot(ballot)
    return labels


def read_ballots(text: str) -> list[ReviewBallot]:
    """CSV with header `candidate,answer1,answer2,answer3`."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or len(header) != 4:
        raise ValidationError("ballot file needs a candidate,answer1,answer2,answer3 header")
    ballots = []
    for row in reader:
        if not row:
            continue
        if len(row) != 4:
            raise ValidationError(f"ballot row needs 4 columns, got {len(row)}: {row!r}")
        ballots.append(ReviewBallot(candidate_id=row[0], answers=(row[1], row[2], row[3])))
    return ballots


def write_labels(labels: dict[str, int]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(("candidate", "label"))
    for candidate in sorted(labels):
        writer.writerow((candidate, labels[candidate]))
    return buf.getvalue()
