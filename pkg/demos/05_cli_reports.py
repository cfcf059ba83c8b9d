"""Drive the command-line interface and look at the written reports."""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

here = Path(__file__).parent / "configs"
out = Path(tempfile.mkdtemp())


def cli(*args):
    proc = subprocess.run([sys.executable, "-m", "rigidity_lab", *args], capture_output=True, text=True)
    print("$ rigidity-lab", " ".join(args), "->", proc.returncode)
    print(proc.stdout.strip())
    return proc.returncode


cli("list-suites")
cli("verify", str(here / "green_sphere.cfg"), "--out", str(out))
cli("sweep", str(here / "deficit_sweep.cfg"), "--param", "kappa", "--values", "0.01,0.1,1", "--format", "csv",
    "--out", str(out))
for p in sorted(out.iterdir()):
    print(p.name)
report = json.loads(next(out.glob("green-*.json")).read_text())
print({o["name"]: o["verdict"] for o in report["outcomes"]})
