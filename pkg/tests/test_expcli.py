import hashlib
import json
from pathlib import Path

import pytest

from diracgap import expcli
from diracgap.expcli import (
    SuiteError,
    ValidationError,
    compute_run,
    config_hash,
    main,
    parse_config,
    render_svg,
    run_experiment,
    scaling_suite,
    serialize_config,
)
from diracgap.shift import Staircase
from diracgap.zeta import AffineMap, ZeroTable, load_zero_table

REDUCED = '{"M": 8, "N_kappa": 41, "n_bands": 4, "N_P": 5, "N_H": 5, "K": 5, "T": 40.0}'


@pytest.fixture(scope="module")
def reduced_run():
    return compute_run(parse_config(REDUCED))


def tree_bytes(directory):
    return {p.name: p.read_bytes() for p in sorted(Path(directory).iterdir())}


def test_empty_document_gives_defaults():
    cfg = parse_config("{}")
    assert cfg.potential.cosine_coefficients == (2.0,)
    assert cfg.potential.period == 1.0
    assert (cfg.M, cfg.N_kappa, cfg.n_bands, cfg.gap_index) == (32, 201, 8, 0)
    assert (cfg.N_P, cfg.N_H, cfg.epsilon, cfg.seed) == (20, 20, 0.35, 12345)
    assert (cfg.mode, cfg.alpha, cfg.K, cfg.T) == ("iid_uniform", 0.5, 20, 80.0)
    assert parse_config("") == cfg


def test_assumption_named_rejections():
    with pytest.raises(ValidationError, match="Assumption B"):
        parse_config('{"epsilon": -1}')
    with pytest.raises(ValidationError, match="Assumption B"):
        parse_config('{"epsilon": 0}')
    with pytest.raises(ValidationError, match="Assumption C"):
        parse_config('{"potential": {"sine_coefficients": [1.0]}}')
    with pytest.raises(ValidationError, match="Assumption C"):
        parse_config('{"potential": {"period": -2.0}}')
    with pytest.raises(ValidationError, match="Assumption G"):
        parse_config('{"alpha": 0.0}')


def test_structural_rejections():
    for doc, frag in [
        ('{"N_H": 0}', "N_H"),
        ('{"N_P": 0}', "N_P"),
        ('{"N_kappa": 200}', "odd"),
        ('{"M": 2, "n_bands": 5}', "n_bands"),
        ('{"M": 0}', "M must"),
        ('{"mode": "gaussian"}', "mode"),
        ('{"K": 1}', "K"),
        ('{"T": -3}', "T"),
        ('{"seed": -1}', "seed"),
        ('{"unknown_key": 1}', "unknown"),
        ('{"potential": {"foo": 1}}', "unknown potential"),
        ("[1,2]", "object"),
        ("{not json", "JSON"),
    ]:
        with pytest.raises(ValidationError, match=frag):
            parse_config(doc)


def test_config_round_trip():
    for doc in ("{}", REDUCED, '{"mode": "constant_one", "epsilon": 7.5, "t_max": 4.0}'):
        cfg = parse_config(doc)
        assert parse_config(serialize_config(cfg)) == cfg
    a = config_hash(parse_config("{}"))
    b = config_hash(parse_config('{"seed": 54321}'))
    assert a != b


def test_run_experiment_writes_full_artifact_set(tmp_path, reduced_run):
    arts = expcli.write_artifacts(reduced_run, tmp_path / "run")
    assert sorted(arts.paths) == sorted(expcli.ARTIFACT_NAMES)
    for name in expcli.ARTIFACT_NAMES:
        assert (tmp_path / "run" / name).is_file()
    spectrum_csv = (tmp_path / "run" / "spectrum.csv").read_text().splitlines()
    assert spectrum_csv[0] == "k,lambda_k,multiplicity"
    assert len(spectrum_csv) > 1  # nonempty spectrum
    assert reduced_run.all_checks_pass


def test_manifest_hashes_and_config_echo(tmp_path, reduced_run):
    arts = expcli.write_artifacts(reduced_run, tmp_path / "m")
    manifest = json.loads((tmp_path / "m" / "manifest.json").read_text())
    assert manifest["config_hash"] == config_hash(reduced_run.config)
    assert manifest["version"] == expcli.VERSION
    assert parse_config(json.dumps(manifest["config"])) == reduced_run.config
    for name, digest in manifest["artifact_hashes"].items():
        assert hashlib.sha256((tmp_path / "m" / name).read_bytes()).hexdigest() == digest
    assert sorted(manifest["artifact_hashes"]) == sorted(
        n for n in expcli.ARTIFACT_NAMES if n != "manifest.json"
    )


def test_reruns_are_byte_identical(tmp_path):
    cfg = parse_config(REDUCED)
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")


def test_failed_run_removes_partial_artifacts(tmp_path, reduced_run, monkeypatch):
    calls = {"n": 0}
    original = expcli._write_json

    def failing(path, obj):
        calls["n"] += 1
        if calls["n"] >= 2:
            raise OSError("disk full (simulated)")
        original(path, obj)

    monkeypatch.setattr(expcli, "_write_json", failing)
    out = tmp_path / "broken"
    with pytest.raises(OSError, match="disk full"):
        expcli.write_artifacts(reduced_run, out)
    assert list(out.iterdir()) == []


def test_csv_float_format_is_17_digits(tmp_path, reduced_run):
    arts = expcli.write_artifacts(reduced_run, tmp_path / "fmt")
    line = (tmp_path / "fmt" / "bands.csv").read_text().splitlines()[1]
    _, kappa, energy = line.split(",")
    assert float(kappa) == reduced_run.bands.grid.nodes[0]
    assert float(energy) == reduced_run.bands.bands[0, 0]  # round-trips exactly


def test_suite_single_row_matches_standalone(tmp_path):
    cfg = parse_config(REDUCED)
    path = scaling_suite("N_H", [5], cfg, tmp_path)
    rows = path.read_text().splitlines()
    assert rows[0] == "axis_value,MAE,max_abs,E_step"
    d = compute_run(cfg).diagnostics
    assert rows[1] == f"5,{d.mae:.17g},{d.max_abs:.17g},{d.e_step:.17g}"


def test_suite_aborts_naming_value(tmp_path):
    cfg = parse_config(REDUCED)
    with pytest.raises(SuiteError, match="N_P=0"):
        scaling_suite("N_P", [5, 0], cfg, tmp_path)
    with pytest.raises(ValidationError):
        scaling_suite("M", [8], cfg, tmp_path)
    with pytest.raises(ValidationError):
        scaling_suite("N_P", [], cfg, tmp_path)


def test_zero_mass_run_degrades_gracefully(tmp_path):
    cfg = parse_config(
        '{"M": 8, "N_kappa": 41, "n_bands": 4, "N_P": 5, "N_H": 5, "K": 5,'
        ' "T": 40.0, "mode": "constant_one", "epsilon": 50.0}'
    )
    result = compute_run(cfg)
    assert len(result.spectrum) == 0  # mass ~ 2^-51 stays inside the margin
    assert result.krein.gap < 1e-9
    assert "insufficient-spectrum" in result.diagnostics.flags
    assert result.all_checks_pass
    arts = run_experiment(cfg, tmp_path / "zm")
    assert (tmp_path / "zm" / "staircase.svg").is_file()


def test_small_constant_mass_shifts_unperturbed_positions():
    cfg = parse_config(
        '{"M": 8, "N_kappa": 41, "n_bands": 4, "N_P": 5, "N_H": 5, "K": 2,'
        ' "T": 40.0, "mode": "constant_one", "epsilon": 6.0}'
    )
    result = compute_run(cfg)
    mass = float(result.shifts.values[0])
    assert 0 < mass < 0.01
    # jump locations are exactly |E - E* + mass| for the surviving fibers
    for lam, fibers in zip(result.spectrum.positive_values, result.spectrum.provenance):
        n, j, m = fibers[0]
        v = result.bands.bands[n, j] - result.e_star + mass
        assert abs(lam - abs(v)) < 1e-10


def test_svg_empty_staircase():
    zeros = load_zero_table("embedded")
    svg = render_svg(Staircase(locations=(), weights=()), zeros, AffineMap(1.0, 0.0), 80.0)
    assert svg.count("<polyline") == 2
    assert "svg" in svg and "zero staircase" in svg


def test_svg_identical_jump_sets_overlap():
    zeros = ZeroTable(ordinates=(14.0, 21.0, 25.0))
    model = Staircase(locations=(14.0, 21.0, 25.0), weights=(1, 1, 1))
    svg = render_svg(model, zeros, AffineMap(1.0, 0.0), 30.0)
    points = [ln.split('points="')[1].split('"')[0]
              for ln in svg.splitlines() if "polyline" in ln]
    assert len(points) == 2
    assert points[0] == points[1]


def test_svg_deterministic(reduced_run):
    zeros = reduced_run.zeros
    one = render_svg(reduced_run.staircase, zeros, reduced_run.affine, 40.0)
    two = render_svg(reduced_run.staircase, zeros, reduced_run.affine, 40.0)
    assert one == two


def test_cli_bands_and_run(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(REDUCED)
    assert main(["bands", "--config", str(cfg_path), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "bands.csv").is_file()
    assert (tmp_path / "b" / "gaps.csv").is_file()
    assert main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "r")]) == 0
    assert (tmp_path / "r" / "manifest.json").is_file()


def test_cli_verify_and_plot(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(REDUCED)
    assert main(["verify", "--config", str(cfg_path)]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") >= 10
    assert "FAIL" not in out
    assert main(["plot", "--config", str(cfg_path), "--out", str(tmp_path / "p")]) == 0
    assert (tmp_path / "p" / "staircase.svg").is_file()


def test_cli_suite(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(REDUCED)
    assert main(["suite", "--config", str(cfg_path), "--axis", "N_H",
                 "--values", "5,6", "--out", str(tmp_path / "s")]) == 0
    rows = (tmp_path / "s" / "suite_N_H.csv").read_text().splitlines()
    assert len(rows) == 3


def test_cli_bad_inputs(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"epsilon": -2}')
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert main(["verify", "--config", str(tmp_path / "missing.json")]) == 2
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(REDUCED)
    assert main(["suite", "--config", str(cfg_path), "--axis", "N_P",
                 "--values", "5,zzz", "--out", str(tmp_path / "s2")]) == 2


def test_checks_cover_spec_contract(reduced_run):
    names = {c.name for c in reduced_run.checks}
    assert {
        "trace_agreement", "chiral_anticommutator", "chiral_pairing",
        "krein_identity", "norm_bounds", "spectrum_symmetric",
        "staircase_odd", "diagnostics_finite",
    } <= names


@pytest.mark.parametrize("name,doc", [
    ("two-harmonic", '{"potential": {"period": 1.0, "cosine_coefficients": [2.0, 0.8]},'
                     ' "M": 16, "N_kappa": 81, "n_bands": 6, "N_P": 8, "N_H": 8, "K": 5, "T": 40.0}'),
    ("period-2", '{"potential": {"period": 2.0, "cosine_coefficients": [3.0]},'
                 ' "M": 16, "N_kappa": 81, "n_bands": 6, "N_P": 8, "N_H": 8, "K": 5, "T": 40.0}'),
    ("second-gap", '{"M": 16, "N_kappa": 81, "n_bands": 6, "gap_index": 1,'
                   ' "N_P": 8, "N_H": 8, "K": 5, "T": 40.0}'),
    ("third-gap", '{"M": 16, "N_kappa": 81, "n_bands": 6, "gap_index": 2,'
                  ' "N_P": 8, "N_H": 8, "K": 5, "T": 40.0}'),
    ("wide-window", '{"M": 16, "N_kappa": 81, "n_bands": 6, "N_P": 8, "N_H": 8,'
                    ' "alpha": 5.0, "K": 5, "T": 40.0}'),
    ("narrow-window", '{"M": 16, "N_kappa": 81, "n_bands": 6, "N_P": 8, "N_H": 8,'
                      ' "alpha": 0.05, "K": 5, "T": 40.0}'),
    ("sixteen-bands", '{"M": 32, "N_kappa": 81, "n_bands": 16, "N_P": 8, "N_H": 8,'
                      ' "K": 5, "T": 40.0}'),
])
def test_non_default_configurations_stay_green(name, doc):
    result = compute_run(parse_config(doc))
    failed = [c.name for c in result.checks if not c.passed]
    assert failed == [], f"{name}: {failed}"
    assert len(result.spectrum) >= result.config.K


def test_narrow_window_trace_is_noise_floor_limited():
    # At alpha = 0.05 every fiber value is >= ~1 away from zero, so the
    # trace is ~1e-174 while the Fourier-side integrand is O(1): relative
    # agreement is unattainable in float64 and the check must fall back to
    # the quadrature noise floor.
    doc = ('{"M": 16, "N_kappa": 81, "n_bands": 6, "N_P": 8, "N_H": 8,'
           ' "alpha": 0.05, "K": 5, "T": 40.0}')
    result = compute_run(parse_config(doc))
    trace = result.trace
    assert abs(trace.theta_fiber) < 1e-50
    assert trace.rel_gap > 1e-6  # relative resolution genuinely lost
    assert trace.abs_gap <= 1e-12 * trace.l1_mass
