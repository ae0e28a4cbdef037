"""
Problem files and the command line
==================================

Problems round-trip through a small text format, and every library entry
point has a CLI command.  ``run`` takes the argument list, so the same
calls work from Python.
"""
# %%
import tempfile
from pathlib import Path

from congestfair import load_fixture, serialize
from congestfair.cli import run

text = serialize(load_fixture("split_beta"))
print(text)

# %%
path = Path(tempfile.mkdtemp()) / "split_beta.cfp"
path.write_text(text)
run(["solve-frac", str(path)])

# %%
run(["verify-t1", str(path), "--format", "machine"])

# %%
# exit code 3 when an enumeration hits its limit
mirror = path.with_name("mirror.cfp")
mirror.write_text(serialize(load_fixture("mirror")))
print("exit", run(["topfair", "enumerate", str(mirror), "--limit", "100"]))
