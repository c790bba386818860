import subprocess
import sys

import pytest

from ipsorder import coupling as cp
from ipsorder.cli import main
from ipsorder.core import LocalConfiguration
from ipsorder.models import load

GOOD = "family: two-species-exclusion\nr1: 1\nr2: 1\nr3: 3/2\nr4: 3/2\nr5: 1\n"
BAD = "family: two-species-exclusion\nr1: 1\nr2: 1\nr3: 1/2\nr4: 3/2\nr5: 1\n"
ETA, XI = "0,0,2,0,1,2,0", "0,1,2,1,1,2,0"


@pytest.fixture
def models(tmp_path):
    good, bad = tmp_path / "good.yaml", tmp_path / "bad.yaml"
    good.write_text(GOOD)
    bad.write_text(BAD)
    return str(good), str(bad)


def test_check_attractive(models, capsys):
    good, bad = models
    assert main(["check", "--attractive", "-m", good]) == 0
    assert "holds" in capsys.readouterr().out
    assert main(["check", "--attractive", "-m", bad]) == 1
    out = capsys.readouterr().out
    assert "fails" in out and "condition: c" in out


def test_check_pair(models):
    good, _ = models
    assert main(["check", "-m", good, "-m", good]) == 0


def test_usage_errors(models, tmp_path):
    good, _ = models
    assert main(["check", "--attractive", "-m", str(tmp_path / "missing.yaml")]) == 2
    assert main(["check", "-m", good]) == 2
    assert main(["check", "--attractive", "-m", good, "--budget", "0"]) == 2
    assert main(["nonsense"]) == 2
    assert main(["simulate", "-m", good, "--length", "8", "--time", "1"]) == 2
    assert main(["couple", "--attractive", "-m", good, "--eta", "1,1,1", "--xi", "0,1,1"]) == 2


def test_couple_writes_a_valid_table(models, tmp_path, capsys):
    good, _ = models
    out = tmp_path / "table.csv"
    assert main(["couple", "--attractive", "-m", good, "--eta", ETA, "--xi", XI, "--out", str(out)]) == 0
    assert "V4 total rate: pass" in capsys.readouterr().out
    m = load(good).model
    eta = LocalConfiguration.line([int(t) for t in ETA.split(",")], 2)
    xi = LocalConfiguration.line([int(t) for t in XI.split(",")], 2)
    around = [(0,), (-1,), (1,)]
    table = cp.read_csv(out.read_text(), eta, xi, around)
    assert cp.validate_coupling(table, m, m, sites=around, touching=(0,)).ok
    assert main(["couple", "--attractive", "-m", good, "--eta", ETA, "--xi", XI,
                 "--validate-only", str(out)]) == 0


def test_validate_only_accepts_joint_moves_alone(models, tmp_path):
    good, _ = models
    full = tmp_path / "full.csv"
    assert main(["couple", "--attractive", "-m", good, "--eta", ETA, "--xi", XI, "--out", str(full)]) == 0
    lines = full.read_text().splitlines()
    joint = [lines[0]] + [row for row in lines[1:] if not row.startswith("-,") and ",-," not in row]
    assert len(joint) > 1
    part = tmp_path / "joint.csv"
    part.write_text("\n".join(joint) + "\n")
    assert main(["couple", "--attractive", "-m", good, "--eta", ETA, "--xi", XI,
                 "--validate-only", str(part)]) == 0
    # inflating one joint rate breaks a marginal
    broken = tmp_path / "broken.csv"
    head, first, *rest = joint
    cells = first.split(",")
    cells[2] = "100/1"
    broken.write_text("\n".join([head, ",".join(cells), *rest]) + "\n")
    assert main(["couple", "--attractive", "-m", good, "--eta", ETA, "--xi", XI,
                 "--validate-only", str(broken)]) == 1


def test_reproduce(capsys):
    assert main(["reproduce", "--example", "two-species"]) == 0
    assert main(["reproduce", "--example", "nonconservative"]) == 0
    assert main(["reproduce", "--example", "two-species", "--perturb"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_simulate_is_reproducible(models, tmp_path):
    good, _ = models
    a, b = tmp_path / "a.log", tmp_path / "b.log"
    args = ["simulate", "-m", good, "-m", good, "--seed", "9", "--length", "8", "--time", "3",
            "--init", "0,1,2,1,0,1,2,0", "--init2", "1,1,2,1,1,2,2,0"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.with_name("a.log.summary").read_bytes() == b.with_name("b.log.summary").read_bytes()
    assert "order violations: 0" in a.with_name("a.log.summary").read_text()
    assert main(args + ["--inject-violation", "1"]) == 1


def test_module_entry_point(models):
    good, _ = models
    done = subprocess.run([sys.executable, "-m", "ipsorder", "check", "--attractive", "-m", good],
                          capture_output=True, text=True)
    assert done.returncode == 0
    assert "holds" in done.stdout
