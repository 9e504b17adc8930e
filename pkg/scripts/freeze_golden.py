"""Recompute and store the golden state hashes for scenarios/.

Run only after an intentional behaviour change; the manifest is what the
determinism tests compare against.
"""

import json
import sys
from pathlib import Path

from makersim import load_config, run

ROOT = Path(__file__).resolve().parent.parent / "scenarios"

CORPUS = [
    ("walkthrough", "config.json", 0),
    ("depreciation", "config.json", 0),
    ("crash_walk", "config.json", 7),
    ("crash_walk", "config.json", 8),
    ("governance_shutdown", "config.json", 0),
    ("fuzz_mixed", "fuzz_config.json", 0),
    ("fuzz_crash_shutdown", "fuzz_config.json", 0),
]


def main() -> int:
    entries = []
    for name, config, seed in CORPUS:
        result = run((ROOT / f"{name}.jsonl").read_text(), load_config(ROOT / config), seed=seed)
        entries.append({"scenario": f"{name}.jsonl", "config": config, "seed": seed, "state_hash": result.state_hash})
        print(f"{name} seed={seed} {result.state_hash}")
    (ROOT / "golden.json").write_text(json.dumps(entries, indent=2) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
