import numpy as np
import pytest

from cscgi import __version__
from cscgi.cli import main
from cscgi.io_formats import load_checkpoint, load_patterns, load_pgm


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_version(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0
    assert out.strip() == __version__


def test_usage_paths(capsys):
    code, out, _ = run(capsys, "-h")
    assert code == 0 and "usage" in out
    code, _, _ = run(capsys)
    assert code == 2
    code, _, err = run(capsys, "no-such-command")
    assert code == 2 and "unknown command" in err


def test_gen_data_clean(tmp_path, capsys):
    out = tmp_path / "blocks.npz"
    code, _, _ = run(capsys, "gen-data", "--count", "8", "--image-size", "60",
                     "--block-size", "20", "--out", str(out))
    assert code == 0
    data = np.load(out)
    assert data["inputs"].shape == (8, 400)
    assert (tmp_path / "blocks.npz.manifest.txt").exists()


def test_gen_data_config_file_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("count = 5\nimage-size = 60\n")
    out = tmp_path / "b.npz"
    code, _, _ = run(capsys, "gen-data", "--config", str(cfg),
                     "--count", "3", "--out", str(out))
    assert code == 0
    assert np.load(out)["inputs"].shape[0] == 3  # flag beats config file


def test_gen_data_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("bogus = 1\n")
    code, _, err = run(capsys, "gen-data", "--config", str(cfg),
                       "--out", str(tmp_path / "x.npz"))
    assert code == 1 and "bogus" in err


def acquire_tiny(tmp_path, capsys, frames=10):
    pats = tmp_path / "p.cgi"
    bucks = tmp_path / "b.cgi"
    code, _, _ = run(capsys, "acquire", "--image-size", "60",
                     "--frames", str(frames), "--seed", "4",
                     "--out-patterns", str(pats), "--out-buckets", str(bucks))
    assert code == 0
    return pats, bucks


def test_acquire_reconstruct_metrics(tmp_path, capsys):
    pats, bucks = acquire_tiny(tmp_path, capsys)
    assert load_patterns(pats).count == 10
    img = tmp_path / "cgi.pgm"
    code, _, _ = run(capsys, "reconstruct", "--algo", "cgi",
                     "--patterns", str(pats), "--buckets", str(bucks),
                     "--out", str(img))
    assert code == 0
    assert load_pgm(img).pixels.shape == (60, 60)
    code, out, _ = run(capsys, "metrics", "--ref", str(img), "--test", str(img))
    assert code == 0
    assert "psnr_db = inf" in out and "ssim = 1.0" in out


def test_reconstruct_frame_prefix(tmp_path, capsys):
    pats, bucks = acquire_tiny(tmp_path, capsys)
    a, b = tmp_path / "a.pgm", tmp_path / "b.pgm"
    for out, extra in ((a, ["--frames", "6"]), (b, [])):
        code, _, _ = run(capsys, "reconstruct", "--algo", "cgi",
                         "--patterns", str(pats), "--buckets", str(bucks),
                         "--out", str(out), *extra)
        assert code == 0
    assert a.read_bytes() != b.read_bytes()


def test_reconstruct_corrupt_input_fails_cleanly(tmp_path, capsys):
    bad = tmp_path / "bad.cgi"
    bad.write_bytes(b"garbage")
    code, _, err = run(capsys, "reconstruct", "--algo", "cgi",
                       "--patterns", str(bad), "--buckets", str(bad),
                       "--out", str(tmp_path / "x.pgm"))
    assert code == 1 and "error:" in err
    assert not (tmp_path / "x.pgm").exists()  # no partial outputs


def test_reconstruct_network_requires_model(tmp_path, capsys):
    pats, bucks = acquire_tiny(tmp_path, capsys)
    code, _, err = run(capsys, "reconstruct", "--algo", "cscnn",
                       "--patterns", str(pats), "--buckets", str(bucks),
                       "--out", str(tmp_path / "x.pgm"))
    assert code == 1 and "--model" in err


def test_train_tiny_and_deterministic(tmp_path, capsys):
    data = tmp_path / "d.npz"
    run(capsys, "gen-data", "--count", "4", "--image-size", "60",
        "--block-size", "20", "--out", str(data))
    outs = []
    for name in ("m1.csnn", "m2.csnn"):
        out = tmp_path / name
        code, _, _ = run(capsys, "train", "--data", str(data),
                         "--block-size", "20", "--epochs", "1",
                         "--learning-rate", "1e-4", "--out", str(out))
        assert code == 0
        assert (tmp_path / (name + ".loss.csv")).read_text().startswith(
            "epoch,loss\n")
        assert (tmp_path / (name + ".manifest.txt")).exists()
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    params = load_checkpoint(tmp_path / "m1.csnn")
    assert params.compression_width == 100


def test_compare_deterministic_rerun_from_manifest(tmp_path, capsys):
    d1, d2, d3 = (tmp_path / n for n in ("run1", "run2", "run3"))
    base = ["compare", "--image-size", "60", "--frames", "5,10",
            "--algos", "cgi,cs", "--cs-iterations", "3", "--seed", "2",
            "--deterministic"]
    code, out1, _ = run(capsys, *base, "--out-dir", str(d1))
    assert code == 0
    assert out1.startswith("algorithm,frames,psnr_db,ssim,wall_ms")
    code, out2, _ = run(capsys, *base, "--out-dir", str(d2))
    assert code == 0
    assert (d1 / "results.csv").read_bytes() == (d2 / "results.csv").read_bytes()
    # replay from the manifest the first run wrote
    code, out3, _ = run(capsys, "compare", "--config",
                        str(d1 / "manifest.txt"), "--out-dir", str(d3))
    assert code == 0
    assert (d3 / "results.csv").read_bytes() == (d1 / "results.csv").read_bytes()
    for n in (5, 10):
        assert (d3 / f"cgi_{n:04d}.pgm").exists()
        assert (d3 / f"cs_{n:04d}.pgm").exists()


def test_compare_missing_model_errors(tmp_path, capsys):
    code, _, err = run(capsys, "compare", "--image-size", "60",
                       "--frames", "5", "--algos", "cgi,cscnn",
                       "--out-dir", str(tmp_path))
    assert code == 1 and "--model" in err


def test_compare_output_dir_from_environment(tmp_path, capsys, monkeypatch):
    env_dir = tmp_path / "from_env"
    monkeypatch.setenv("CSCGI_OUTPUT_DIR", str(env_dir))
    code, _, _ = run(capsys, "compare", "--image-size", "60", "--frames", "5",
                     "--algos", "cgi", "--deterministic")
    assert code == 0
    assert (env_dir / "results.csv").exists()
