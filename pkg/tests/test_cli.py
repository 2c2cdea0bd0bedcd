import gzip
import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from prfsnn.cli import data as datamod
from prfsnn.cli.bench import BENCH_HEADER, bench, speedups
from prfsnn.cli.config import ConfigError, config_dict, load_config, parse_config
from prfsnn.cli.equiv import EquivConfig, run_equivalence_suite
from prfsnn.cli.main import main
from prfsnn.cli.report import emit_report, read_report, render
from prfsnn.cli.data import (
    IMAGE_MAGIC,
    LABEL_MAGIC,
    IdxFormatError,
    SplitMix64,
    fisher_yates_permutation,
    ingest_mnist,
    read_idx,
    write_idx,
)

REPO = Path(__file__).resolve().parents[1]


# reference outputs of the published C implementation
@pytest.mark.parametrize(
    "seed,expected",
    [
        (0, [16294208416658607535, 7960286522194355700, 487617019471545679]),
        (42, [13679457532755275413, 2949826092126892291, 5139283748462763858]),
        (1234567, [6457827717110365317, 3203168211198807973, 9817491932198370423]),
    ],
)
def test_splitmix64_reference_values(seed, expected):
    rng = SplitMix64(seed)
    assert [rng.next() for _ in expected] == expected


def test_fisher_yates_reference_and_determinism():
    assert fisher_yates_permutation(10, 42).tolist() == [0, 9, 5, 8, 6, 4, 7, 2, 1, 3]
    p = fisher_yates_permutation(784, 42)
    assert p[:8].tolist() == [555, 714, 764, 491, 127, 154, 8, 12]
    assert np.array_equal(p, fisher_yates_permutation(784, 42))
    assert sorted(p.tolist()) == list(range(784))
    assert not np.array_equal(p, fisher_yates_permutation(784, 43))


@pytest.fixture
def idx_pair(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, (6, 28, 28), dtype=np.uint8)
    labels = np.arange(6, dtype=np.uint8)
    write_idx(tmp_path / "train-images-idx3-ubyte.gz", images)
    write_idx(tmp_path / "train-labels-idx1-ubyte", labels)
    return tmp_path, images, labels


def test_ingest_plain_and_gzip(idx_pair):
    root, images, labels = idx_pair
    ds = ingest_mnist(root / "train-images-idx3-ubyte.gz", root / "train-labels-idx1-ubyte")
    assert ds.x.shape == (6, 784)
    np.testing.assert_array_equal(ds.x[2], images[2].reshape(-1) / 255.0)
    np.testing.assert_array_equal(ds.y, labels)
    assert ds.x.min() >= 0 and ds.x.max() <= 1
    perm = fisher_yates_permutation(784, 42)
    pds = ingest_mnist(root / "train-images-idx3-ubyte.gz", root / "train-labels-idx1-ubyte", permute_seed=42)
    np.testing.assert_array_equal(pds.x, ds.x[:, perm])


def test_gzip_detected_by_magic_not_name(tmp_path):
    arr = np.arange(12, dtype=np.uint8).reshape(3, 4)
    write_idx(tmp_path / "plain.bin", arr, compress=True)
    assert (tmp_path / "plain.bin").read_bytes()[:2] == b"\x1f\x8b"
    np.testing.assert_array_equal(read_idx(tmp_path / "plain.bin", 0x802), arr)


def test_idx_errors(tmp_path, idx_pair):
    root, _, _ = idx_pair
    with pytest.raises(IdxFormatError, match="bad magic"):
        read_idx(root / "train-labels-idx1-ubyte", IMAGE_MAGIC)
    raw = gzip.decompress((root / "train-images-idx3-ubyte.gz").read_bytes())
    (tmp_path / "short").write_bytes(raw[:-10])
    with pytest.raises(IdxFormatError, match="truncated body"):
        read_idx(tmp_path / "short", IMAGE_MAGIC)
    (tmp_path / "tiny").write_bytes(raw[:9])
    with pytest.raises(IdxFormatError, match="truncated header"):
        read_idx(tmp_path / "tiny", IMAGE_MAGIC)
    (tmp_path / "badgz").write_bytes(gzip.compress(raw)[:50])
    with pytest.raises(IdxFormatError, match="gzip"):
        read_idx(tmp_path / "badgz", IMAGE_MAGIC)
    write_idx(tmp_path / "labels5", np.zeros(5, np.uint8))
    with pytest.raises(IdxFormatError, match="labels"):
        ingest_mnist(root / "train-images-idx3-ubyte.gz", tmp_path / "labels5")


def test_data_dir_env_override(monkeypatch, tmp_path):
    monkeypatch.delenv(datamod.DATA_ENV, raising=False)
    assert datamod.data_dir() == Path("data")
    assert datamod.data_dir("x") == Path("x")
    monkeypatch.setenv(datamod.DATA_ENV, str(tmp_path))
    assert datamod.data_dir("x") == tmp_path


def test_bundled_subset_is_readable():
    images, labels = datamod.find_mnist(REPO / "data")
    x = read_idx(images, IMAGE_MAGIC)
    y = read_idx(labels, LABEL_MAGIC)
    assert x.shape == (5000, 28, 28) and y.shape == (5000,)
    assert np.bincount(y).tolist() == [500] * 10


def test_report_csv_and_round_trip(tmp_path):
    recs = [{"a": 1, "b": 0.1, "c": True, "d": None, "e": "x"}, {"a": 2, "b": 1e-300, "c": False, "d": None, "e": "y"}]
    text = render(recs, "csv")
    assert text.splitlines()[0] == "a,b,c,d,e"
    for fmt in ("csv", "json"):
        path = tmp_path / f"r.{fmt}"
        emit_report(recs, fmt, path)
        assert read_report(path) == recs
    with pytest.raises(ValueError):
        render([], "csv")
    with pytest.raises(ValueError):
        render([{"a": 1}, {"b": 2}], "csv")
    with pytest.raises(OSError):
        emit_report(recs, "csv", tmp_path / "missing" / "r.csv")


def test_bench_header_and_repeats():
    recs = bench([4, 8], batch=2, channels=3, repeats=3)
    text = render([r.as_dict() for r in recs], "csv")
    assert text.splitlines()[0] == ",".join(BENCH_HEADER) == "seq_len,batch,channels,mode,phase,ms,repeats"
    assert {(r.mode, r.phase) for r in recs} == {
        (m, p) for m in ("sequential", "parallel") for p in ("forward", "backward", "total")
    }
    assert all(r.ms > 0 and r.repeats == 3 for r in recs)
    assert set(speedups(recs)) == {4, 8}
    with pytest.raises(ValueError):
        bench([4], repeats=2)


def test_config_validation(tmp_path):
    cfg = parse_config({"seed": 7, "train": {"width": 16, "delta_range": [0.1, 0.5]}})
    assert cfg.seed == 7 and cfg.train.width == 16 and cfg.train.delta_range == (0.1, 0.5)
    assert parse_config(config_dict(cfg)) == cfg
    bad = [
        {"nonsense": {}},
        {"train": {"widht": 3}},
        {"train": {"width": "wide"}},
        {"bench": {"repeats": 2}},
        {"seed": -1},
        {"seed": 1 << 64},
        {"task": {"name": "cifar"}},
        {"simulate": {"neuron": "lif", "mode": "deploy"}},
        {"train": {"delta_range": [1.0, 0.1]}},
        {"freq": {"tau": 0.05, "delta": 0.1}},
        [1, 2],
    ]
    for raw in bad:
        with pytest.raises(ConfigError):
            parse_config(raw)
    (tmp_path / "bad.yaml").write_text("train: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.yaml")


def test_shipped_configs_parse():
    for path in sorted((REPO / "configs").glob("*.yaml")):
        load_config(path)


def test_equivalence_suite_and_bug_mode():
    cfg = EquivConfig(cases=20, max_T=64, seed=3)
    good = run_equivalence_suite(cfg)
    assert good.passed and len(good.records()) == 40
    bad = run_equivalence_suite(EquivConfig(cases=20, max_T=64, seed=3, inject_bug=True))
    assert not bad.passed
    summary = bad.summary()
    assert summary["first_failing_seed"] is not None


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    summary = json.loads(err.strip().splitlines()[-1]) if code != 2 else None
    return code, out, err, summary


def test_cli_equiv_bytes_deterministic(capsys, tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"e{i}.csv"
        code, _, _, summary = run_cli(capsys, "equiv", "--cases", "10", "--seed", "5", "--out", str(path))
        assert code == 0 and summary["passed"] is True
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    code, _, _, summary = run_cli(capsys, "equiv", "--cases", "10", "--inject-bug")
    assert code == 1 and summary["passed"] is False


def test_cli_simulate_modes_agree(capsys, tmp_path):
    cfgfile = tmp_path / "c.yaml"
    traces = {}
    for mode in ("sequential", "parallel", "deploy"):
        cfgfile.write_text(yaml.safe_dump({"simulate": {"neuron": "prf", "mode": mode, "T": 50, "N": 2}}))
        code, out, _, _ = run_cli(capsys, "simulate", "--config", str(cfgfile), "--seed", "1", "--format", "json")
        assert code == 0
        traces[mode] = json.loads(out)
    spikes = {m: [r["spike"] for r in v] for m, v in traces.items()}
    assert spikes["sequential"] == spikes["parallel"] == spikes["deploy"]
    assert set(traces["sequential"][0]) == {"t", "batch", "channel", "input", "potential", "potential_imag", "spike"}


def test_cli_freq_energy_variance(capsys):
    code, out, _, s = run_cli(capsys, "freq")
    assert code == 0 and s["peak_at_theta"] and s["peak_near_tau"]
    assert out.splitlines()[0] == "omega,magnitude,closed_form,discrete"
    code, _, _, s = run_cli(capsys, "energy")
    assert code == 0 and s["ratio"] <= 0.05
    code, _, _, s = run_cli(capsys, "variance", "--seed", "2")
    assert code == 0 and s["z_score"] <= 3


def test_cli_train_checkpoint_and_stats(capsys, tmp_path):
    cfgfile = tmp_path / "t.yaml"
    cfgfile.write_text(
        yaml.safe_dump(
            {
                "task": {"name": "impulse", "n_train": 40, "n_test": 20, "length": 32},
                "train": {"model": "sdtcm", "depth": 1, "width": 4, "n_classes": 2, "batch_size": 20, "epochs": 2},
                "stats": {"n_samples": 10},
            }
        )
    )
    ck = tmp_path / "m.npz"
    code, out, _, s = run_cli(capsys, "train", "--config", str(cfgfile), "--checkpoint", str(ck))
    assert code == 0 and s["epochs"] == 2 and ck.exists()
    assert out.splitlines()[0].startswith("epoch,")
    code, out, _, s = run_cli(capsys, "stats", "--config", str(cfgfile), "--checkpoint", str(ck))
    assert code == 0 and 0 <= s["average"] <= 1
    assert out.splitlines()[-1].startswith("average,")
    spikes = tmp_path / "s.npz"
    np.savez(spikes, a=np.array([1, 0, 0, 0]), b=np.ones(3))
    code, out, _, s = run_cli(capsys, "stats", "--spikes", str(spikes))
    assert s["average"] == pytest.approx(0.625)


def test_cli_errors_exit_2(capsys, tmp_path, monkeypatch):
    assert main(["bench", "--repeats", "2", "--seq-lens", "4"]) == 2
    assert main(["simulate", "--config", str(tmp_path / "missing.yaml")]) == 2
    assert main(["simulate", "--seed", "-3"]) == 2
    monkeypatch.setenv(datamod.DATA_ENV, str(tmp_path))
    cfgfile = tmp_path / "m.yaml"
    cfgfile.write_text("task: {name: smnist}\ntrain: {n_classes: 10}\n")
    assert main(["train", "--config", str(cfgfile)]) == 2
    err = capsys.readouterr().err
    assert "PRFSNN_DATA" in err
