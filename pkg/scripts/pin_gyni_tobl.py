"""Regenerate the pinned TOBL optimum of the guess-your-neighbour functional.

Solves the exact rational LP from scratch, verifies the attaining box is a
certified TOBL member and an NSBL non-member, and writes the golden file
consumed by the reproduction pipeline.  Run from the repository root:

    python3 scripts/pin_gyni_tobl.py
"""

import json
import pathlib

from boxlab import bell, membership
from boxlab.model import Partition
from boxlab.schemas import box_to_model

OUT = pathlib.Path(__file__).resolve().parent.parent / "src" / "boxlab" / "data" / "gyni_tobl_golden.json"


def main():
    part = Partition((0,), (1, 2))
    gyni = bell.gyni()
    value, attainer, _ = bell.max_over_set(gyni, membership.TOBL, part, mode="rational")
    tobl = membership.check_tobl(attainer, part, mode="rational")
    nsbl = membership.check_nsbl(attainer, part, mode="rational")
    if not tobl.is_member or nsbl.verdict != membership.NON_MEMBER:
        raise SystemExit("attaining box failed certification; refusing to pin")
    payload = {
        "functional": "gyni",
        "class": membership.TOBL,
        "partition": "1|2,3",
        "value": str(value),
        "attainer": box_to_model(attainer).model_dump(by_alias=True),
    }
    OUT.write_text(json.dumps(payload, indent=2) + "\n")
    print(f"pinned value {value} -> {OUT}")


if __name__ == "__main__":
    main()
