import json
import math

import numpy as np

from regenrates.cli import main

IID_BODY = """
master_seed = 20240601

[model]
kind = "iid"
values = [-1.0, 1.0]
probs = [0.5, 0.5]

[plan]
n_blocks = 500
n_streams = 4
delta = 1.0

[sweep]
ns = [16, 64, 256]
mode = "exact"
center = 0.0
"""


def write_config(tmp_path, body, name="exp.toml"):
    path = tmp_path / name
    path.write_text(body, encoding="utf-8")
    return str(path)


def test_simulate_writes_blocks_and_estimates(tmp_path):
    cfg = write_config(tmp_path, IID_BODY)
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    header = (out / "blocks.csv").read_bytes().split(b"\r\n")[0]
    assert header == b"stream,index,length,sum,abs_sum"
    payload = json.loads((out / "estimates.json").read_text())
    assert abs(payload["mu_hat"]) < 0.2
    assert payload["tau_bar"] == 1.0
    assert payload["n_blocks"] == 500


def test_runs_are_byte_identical(tmp_path):
    cfg = write_config(tmp_path, IID_BODY)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
        assert main(["rates", "--config", cfg, "--out", str(out)]) == 0
        outs.append(out)
    for artifact in ("blocks.csv", "estimates.json", "rates.csv", "fit.json"):
        assert (outs[0] / artifact).read_bytes() == (outs[1] / artifact).read_bytes()


def test_seed_override_changes_blocks(tmp_path):
    cfg = write_config(tmp_path, IID_BODY)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--out", str(a)]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(b), "--seed", "99"]) == 0
    assert (a / "blocks.csv").read_bytes() != (b / "blocks.csv").read_bytes()


def test_thread_count_does_not_change_artifacts(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, IID_BODY)
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["simulate", "--config", cfg, "--out", str(a), "--threads", "1"]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(b), "--threads", "4"]) == 0
    monkeypatch.setenv("REGEN_RATES_THREADS", "3")
    assert main(["simulate", "--config", cfg, "--out", str(c)]) == 0
    assert (a / "blocks.csv").read_bytes() == (b / "blocks.csv").read_bytes()
    assert (a / "blocks.csv").read_bytes() == (c / "blocks.csv").read_bytes()


def test_rates_exact_slope(tmp_path):
    cfg = write_config(tmp_path, IID_BODY)
    out = tmp_path / "out"
    assert main(["rates", "--config", cfg, "--out", str(out)]) == 0
    fit = json.loads((out / "fit.json").read_text())
    assert abs(fit["slope"] + 0.5) < 0.05
    rows = (out / "rates.csv").read_text().strip().split("\n")
    assert rows[0].strip() == "n,distance,dkw_bound,n_paths,mode"
    assert len(rows) == 4


def test_schema_violation_exits_2(tmp_path):
    cfg = write_config(tmp_path, IID_BODY.replace("n_blocks = 500", "n_blocks = 1"))
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_unknown_key_exits_2(tmp_path):
    cfg = write_config(tmp_path, IID_BODY + "\n[plan.extra]\nfoo = 1\n")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_missing_sweep_section_exits_2(tmp_path):
    body = IID_BODY.split("[sweep]")[0]
    cfg = write_config(tmp_path, body)
    assert main(["rates", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_degenerate_model_rates_exit_3(tmp_path):
    body = """
master_seed = 5

[model]
kind = "markov"
transition = [[0.0, 1.0], [1.0, 0.0]]
f = [0.0, 1.0]
anchor = 0

[plan]
n_blocks = 100

[sweep]
ns = [4, 8, 16]
mode = "exact"
"""
    cfg = write_config(tmp_path, body)
    assert main(["rates", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_llt_rows_and_n1_identity(tmp_path):
    body = """
master_seed = 1

[llt]
n_values = [1, 16, 64]

[llt.law]
v_values = [0.0, 1.0]
w_values = [0.0, 1.0]
probs = [[0.25, 0.25], [0.25, 0.25]]
"""
    cfg = write_config(tmp_path, body)
    out = tmp_path / "out"
    assert main(["llt", "--config", cfg, "--out", str(out)]) == 0
    rows = (out / "llt.csv").read_text().strip().split("\n")
    assert rows[0].strip() == "n,sup_llt,sup_semilocal,argmax_x,argmax_y,weighted_llt,weighted_semilocal"
    data = [r.strip().split(",") for r in rows[1:]]
    assert [d[0] for d in data] == ["1", "16", "64"]
    # the n=1 row is the direct single-law comparison
    from regenrates.lattice import LatticeJointLaw, semilocal_discrepancy

    law = LatticeJointLaw.from_product([0.0, 1.0], [0.5, 0.5], [0.0, 1.0], [0.5, 0.5])
    direct = semilocal_discrepancy(law, 1)
    assert math.isclose(float(data[0][2]), direct.sup_weighted_semilocal, rel_tol=1e-12)
    # sup columns positive, and decreasing in the rate-weighted form over 16 -> 64
    sups = [float(d[2]) for d in data]
    assert all(s > 0 for s in sups)
    assert sups[0] > sups[1] > sups[2]
    weighted = [float(d[6]) for d in data[1:]]
    assert weighted[0] > weighted[1] > 0


def test_llt_singular_law_exits_3(tmp_path):
    body = """
master_seed = 1

[llt]
n_values = [4, 8, 16]

[llt.law]
v_values = [-1.0, 1.0]
w_values = [-1.0, 1.0]
probs = [[0.5, 0.0], [0.0, 0.5]]
"""
    cfg = write_config(tmp_path, body)
    assert main(["llt", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_rwre_analytics_artifact(tmp_path):
    body = """
master_seed = 7

[rwre]
truncation = 500

[rwre.site_law]
kind = "two_point"
p1 = 0.75
p2 = 0.75
q = 1.0
"""
    cfg = write_config(tmp_path, body)
    out = tmp_path / "out"
    assert main(["rwre", "--config", cfg, "--out", str(out)]) == 0
    payload = json.loads((out / "analytics.json").read_text())
    assert payload["kappa"] == "inf"
    assert abs(payload["v_P"] - 0.5) < 1e-12
    assert payload["delta_recommended"] == 1.0


def test_rwre_not_transient_exits_3(tmp_path):
    body = """
master_seed = 7

[rwre]
[rwre.rho_law]
kind = "finite"
values = [2.0]
probs = [1.0]
"""
    cfg = write_config(tmp_path, body)
    out = tmp_path / "out"
    assert main(["rwre", "--config", cfg, "--out", str(out)]) == 3
    payload = json.loads((out / "analytics.json").read_text())
    assert payload["error"] == "NotTransient"
    assert payload["E_log_rho"] > 0


def test_rwre_sweep_emits_rates(tmp_path):
    body = """
master_seed = 42

[rwre]
truncation = 500

[rwre.site_law]
kind = "two_point"
p1 = 0.75
p2 = 0.75
q = 1.0

[rwre.sweep]
model = "hitting"
ns = [32, 64, 128]
n_paths = 400
n_blocks = 2000
horizon = 8192
"""
    cfg = write_config(tmp_path, body)
    out = tmp_path / "out"
    assert main(["rwre", "--config", cfg, "--out", str(out)]) == 0
    rows = (out / "rates.csv").read_text().strip().split("\n")
    assert len(rows) == 4
    fit = json.loads((out / "fit.json").read_text())
    assert fit["sup_constant"] > 0


def test_mixing_artifacts(tmp_path):
    body = """
master_seed = 3

[mixing]
transition = [[0.7, 0.3], [0.5, 0.5]]
n_values = [1, 2, 3]
p = 4.0
lambda = 3.0
"""
    cfg = write_config(tmp_path, body)
    out = tmp_path / "out"
    assert main(["mixing", "--config", cfg, "--out", str(out)]) == 0
    rows = (out / "mixing.csv").read_text().strip().split("\n")
    assert rows[0].strip() == "n,alpha"
    alphas = [float(r.strip().split(",")[1]) for r in rows[1:]]
    assert np.allclose(alphas, [0.234375 * 0.2**n for n in (1, 2, 3)], atol=1e-12)
    exponent = json.loads((out / "mixing.json").read_text())
    assert exponent["exponent"] == 0.25


def test_missing_config_file_exits_2(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "absent.toml")]) == 2
