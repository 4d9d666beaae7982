"""Run the quick config through the CLI and print the metric verdicts."""
import json
import sys
from pathlib import Path

from prodhardy.cli import main

HERE = Path(__file__).resolve().parent


def show(out_dir: Path) -> None:
    for rep in json.loads((out_dir / "metrics.json").read_text()):
        print(f"[{rep['suite']}]")
        for m in rep["metrics"]:
            flag = "ok " if m["passed"] else "BAD"
            print(f"  {flag} {m['name']:<32} {m['value']:.4g}")


if __name__ == "__main__":
    name = sys.argv[1] if len(sys.argv) > 1 else "quick"
    code = main(["run", str(HERE / "configs" / f"{name}.yaml")])
    show(HERE / "out" / name)
    sys.exit(code)
