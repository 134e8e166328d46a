"""Shared fixture: real artifacts produced by the latsurf command line.

The figure tests run against files written by the actual producer,
not hand-built stand-ins, so any schema drift between the two
packages fails here.  Configurations are scaled down (coarse grids,
few radii, large eta) to keep the whole artifact set under a minute;
the renderers never see the configuration, only the files.
"""

import shutil
import subprocess

import pytest


def run_latsurf(args, cwd):
    proc = subprocess.run(["latsurf"] + [str(a) for a in args],
                          cwd=cwd, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def artifact_dir(tmp_path_factory):
    if shutil.which("latsurf") is None:
        pytest.fail("the latsurf command line tool is not on PATH")
    root = tmp_path_factory.mktemp("artifacts")
    run_latsurf(["surface", "--a", "2.5", "--n", "24",
                 "--out", "mesh.npz"], root)
    run_latsurf(["gamma", "--a", "2.5", "--n", "24",
                 "--out", "gamma.json"], root)
    run_latsurf(["decay", "--a", "2.5", "--n", "24",
                 "--omega", "0.2,0.4,1.0", "--omega", "1,0,0",
                 "--r-min", "8", "--r-max", "120", "--n-radii", "6",
                 "--envelope", "4", "--out", "decay.csv"], root)
    run_latsurf(["denom", "--kind", "one", "--alpha", "3.0",
                 "--eta", "0.5", "--eta", "0.25", "--eta", "0.125",
                 "--n", "16", "--n-max", "64", "--out", "sweep_one.csv",
                 "--fit-out", "fit_one.json"], root)
    run_latsurf(["denom", "--kind", "two", "--alpha", "3.0",
                 "--eta", "0.5", "--eta", "0.25", "--eta", "0.125",
                 "--n", "16", "--n-max", "64", "--q", "0.5,-0.5,0.0",
                 "--out", "sweep_two.csv", "--fit-out", "fit_two.json"],
                root)
    run_latsurf(["diagnostics", "--a", "2.5", "--n", "16",
                 "--omega", "0.2,0.4,1.0", "--depth", "4", "--j-max", "6",
                 "--out", "diag.csv"], root)
    return root
