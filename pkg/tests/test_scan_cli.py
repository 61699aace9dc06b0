import json
import os

import numpy as np
import pytest

from rhombstab import cli
from rhombstab.central_config import U_MIN, U_MAX, DomainError
from rhombstab.monodromy import autonomous_spectrum
from rhombstab.scan import (ScanConfig, StabilityGrid, config_hash,
                            default_output_path, read_grid, run_scan,
                            verify_claims, write_output)


def small_config(tmp_path, name="scan.csv", **overrides):
    settings = dict(u_range=(0.9, 1.1), e_range=(0.0, 0.2), grid=(3, 3),
                    blocks=("xi",), output_path=str(tmp_path / name))
    settings.update(overrides)
    return ScanConfig(**settings)


def test_small_grid_all_hyperbolic(tmp_path):
    grid = run_scan(small_config(tmp_path), force=True)
    assert len(grid.rows) == 9
    assert grid.complete
    for row in grid.rows:
        assert row.classification == "hyperbolic"
        assert row.hyperbolic_pairs == 2
        assert row.residual < 1e-9


def test_row_ordering_row_major(tmp_path):
    config = small_config(tmp_path, blocks=("xi", "eta"))
    grid = run_scan(config, force=True)
    keys = [(row.u, row.e, row.block) for row in grid.rows]
    expected = [(float(u), float(e), b)
                for u in config.u_values() for e in config.e_values()
                for b in config.blocks]
    assert keys == expected


def test_degenerate_circular_grid_matches_autonomous_oracle(tmp_path):
    config = small_config(tmp_path, u_range=(0.8, 1.2), e_range=(0.0, 0.0),
                          grid=(2, 2), blocks=("xi", "eta"))
    grid = run_scan(config, force=True)
    for row in grid.rows:
        spec = autonomous_spectrum(row.u)
        roots = spec.xi_roots if row.block == "xi" else spec.eta_roots
        want = np.sort_complex(np.exp(2.0 * np.pi * roots))
        got = np.sort_complex(np.array(row.eigenvalues))
        assert np.abs(want - got).max() < 1e-9


def test_determinism_and_worker_independence(tmp_path):
    c1 = small_config(tmp_path, name="w1.csv", workers=1)
    c2 = small_config(tmp_path, name="w2.csv", workers=2)
    run_scan(c1, force=True)
    first = (tmp_path / "w1.csv").read_bytes()
    run_scan(c1, force=True)
    assert (tmp_path / "w1.csv").read_bytes() == first
    run_scan(c2, force=True)
    assert (tmp_path / "w2.csv").read_bytes() == first


def test_csv_round_trip(tmp_path):
    config = small_config(tmp_path, blocks=("xi", "eta"))
    grid = run_scan(config, force=True)
    back = read_grid(config.output_path, config)
    assert back is not None
    assert back.rows == grid.rows


def test_json_round_trip(tmp_path):
    config = small_config(tmp_path, name="scan.json", format="json",
                          blocks=("xi", "full"))
    grid = run_scan(config, force=True)
    back = read_grid(config.output_path, config)
    assert back is not None
    assert back.rows == grid.rows
    doc = json.loads((tmp_path / "scan.json").read_text())
    assert doc["hash"] == config_hash(config)


def test_empty_and_single_row_output(tmp_path):
    config = small_config(tmp_path, name="empty.csv")
    write_output(StabilityGrid(config=config, rows=()), str(tmp_path / "empty.csv"))
    lines = (tmp_path / "empty.csv").read_text().splitlines()
    assert len(lines) == 1 and lines[0].startswith("u,e,block,re_lambda_1")

    grid = run_scan(config, force=True)
    write_output(StabilityGrid(config=config, rows=grid.rows[:1]),
                 str(tmp_path / "one.csv"))
    assert len((tmp_path / "one.csv").read_text().splitlines()) == 2


def test_cache_reuse_without_force(tmp_path, monkeypatch):
    config = small_config(tmp_path)
    first = run_scan(config, force=True)
    # poison the point worker; a cache hit never calls it
    monkeypatch.setattr("rhombstab.scan._point_rows",
                        lambda args: (_ for _ in ()).throw(RuntimeError("recomputed")))
    again = run_scan(config, force=False)
    assert again.rows == first.rows


def test_config_hash_covers_physics_only(tmp_path):
    base = small_config(tmp_path)
    same = small_config(tmp_path, name="other.csv", workers=4)
    other = small_config(tmp_path, grid=(3, 4))
    assert config_hash(base) == config_hash(same)
    assert config_hash(base) != config_hash(other)


def test_default_output_path_env(tmp_path, monkeypatch):
    monkeypatch.setenv("RHOMBSTAB_OUTPUT_DIR", str(tmp_path / "cache"))
    config = ScanConfig(u_range=(0.9, 1.0), e_range=(0.0, 0.1), grid=(2, 2))
    assert default_output_path(config).startswith(str(tmp_path / "cache"))


def test_config_validation():
    with pytest.raises(DomainError):
        ScanConfig(u_range=(0.2, 1.0), e_range=(0.0, 0.5), grid=(3, 3))
    with pytest.raises(DomainError):
        ScanConfig(u_range=(0.8, 1.2), e_range=(0.0, 0.999), grid=(3, 3))
    with pytest.raises(ValueError):
        ScanConfig(u_range=(0.8, 1.2), e_range=(0.0, 0.5), grid=(1, 3))
    with pytest.raises(ValueError):
        ScanConfig(u_range=(0.8, 1.2), e_range=(0.0, 0.5), grid=(2, 2),
                   blocks=("kepler",))


def test_verify_claims_quick(tmp_path):
    report = verify_claims(grid_shape=(3, 3), e_max=0.5, force=True,
                           output_dir=str(tmp_path))
    labels = [item.label for item in report.items]
    assert labels == list("abcdefg")
    assert report.passed
    assert all(line.startswith("[PASS]") for line in report.lines())


def test_cli_coeffs_json(capsys):
    assert cli.main(["coeffs", "--u", "0.8", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["psi1"] + payload["psi2"] == pytest.approx(3.0, abs=1e-10)
    assert payload["critical"]["u1"] == pytest.approx(0.606169, abs=1e-4)
    assert set(payload) >= {"phi1", "phi2", "dphi1", "dpsi2"}


def test_cli_monodromy_json(capsys):
    assert cli.main(["monodromy", "--u", "0.8", "--e", "0.3", "--block", "xi"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["classification"] == "hyperbolic"
    assert payload["hyperbolic_pairs"] == 2
    assert payload["residual"] < 1e-9
    assert len(payload["eigenvalues"]) == 4


def test_cli_index_json(capsys):
    assert cli.main(["index", "--op", "Abeta", "--beta", "6.75", "--e", "0.44",
                     "--omega", "0.5"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["morse_index"] == 0
    assert payload["nullity"] == 0
    assert payload["min_eigenvalue"] > 0.0


def test_cli_scan_with_config_file(tmp_path, capsys):
    conf = tmp_path / "scan.conf"
    conf.write_text("u_min = 0.9\nu_max = 1.0\nnu = 2\nne = 2\n"
                    "e_max = 0.1\nblocks = xi,eta\n"
                    f"output = {tmp_path / 'out.csv'}\n")
    # CLI --ne overrides the file's ne = 2
    assert cli.main(["scan", "--config", str(conf), "--ne", "3", "--force"]) == 0
    out = (tmp_path / "out.csv").read_text().splitlines()
    assert len(out) == 1 + 2 * 3 * 2


def test_cli_exit_codes(tmp_path):
    assert cli.main(["scan", "--u-min", "0.2", "--u-max", "1.0",
                     "--nu", "2", "--ne", "2",
                     "--output", str(tmp_path / "bad.csv")]) == 2
    assert cli.main(["index", "--op", "scriptA", "--e", "0.5"]) == 2
    assert cli.main(["config", "--u", "2.5"]) == 2


def test_cli_config_dump(capsys):
    assert cli.main(["config", "--u", "0.8", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["residual"] < 1e-11
    assert payload["orthonormality_residual"] < 1e-13
    assert np.array(payload["reduction_matrix"]).shape == (8, 8)
