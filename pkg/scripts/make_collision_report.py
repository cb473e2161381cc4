#!/usr/bin/env python3
"""Write the hashed-vocabulary collision report as a JSON artifact.

The embedding hashes words into a fixed number of buckets, so some distinct
vocabulary words share a dimension. This report enumerates every shared
bucket and flags the pairs where both words can appear in the same template
slot (the only collisions that could blur two descriptions).
"""

import argparse
import json
import sys
from pathlib import Path

from swarmreid.language import vocabulary_collision_report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out", nargs="?", type=Path,
                        default=Path("collision_report.json"))
    args = parser.parse_args(argv)

    report = vocabulary_collision_report()
    args.out.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"{args.out}: {report['word_count']} words, "
          f"{len(report['bucket_collisions'])} shared buckets, "
          f"{len(report['aligned_collisions'])} slot-aligned pairs")
    return 0


if __name__ == "__main__":
    sys.exit(main())
