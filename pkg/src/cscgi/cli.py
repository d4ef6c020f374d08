"""Command-line interface: gen-data, train, acquire, reconstruct, compare, metrics.

Every subcommand accepts `--config FILE` (line-oriented `key = value` text,
the same format the reproducibility manifests use) to pre-set its flags;
explicit command-line flags win over the config file.  Every run writes a
manifest capturing the resolved parameters, seeds, and versions.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .compressed_sensing import BlockGrid, cs_gi_reconstruct
from .experiment import (ALGORITHMS, ExperimentConfig, build_denoising_set,
                         build_mixed_set,
                         cgi_estimate, comparison_csv, config_from_mapping,
                         config_to_manifest, load_scene, network_estimate,
                         parse_config_text, run_comparison, _SEED_TRAIN)
from .ghost_optics import acquire, generate_patterns
from .io_formats import (load_buckets, load_checkpoint, load_patterns,
                         load_pgm, save_buckets, save_checkpoint,
                         save_patterns, save_pgm)
from .neural_reconstructor import TrainingConfig, init_params, train
from .quality_metrics import psnr, ssim
from .scenes import generate_dataset


def _manifest_from_args(args, keys, command: str) -> str:
    lines = [f"command = {command}",
             f"cscgi_version = {__version__}",
             f"numpy_version = {np.__version__}",
             f"python_version = {sys.version.split()[0]}"]
    for key in keys:
        lines.append(f"{key} = {getattr(args, key)}")
    return "\n".join(lines) + "\n"


def _apply_config_file(parser, argv, aliases=None):
    """Reparse with config-file values as defaults so flags take precedence."""
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            mapping = parse_config_text(fh.read())
        known = {a.dest for a in parser._actions}
        overrides = {}
        for key, value in mapping.items():
            dest = key.replace("-", "_")
            dest = (aliases or {}).get(dest, dest)
            if dest in ("command", "cscgi_version", "numpy_version",
                        "python_version", "config"):
                continue
            if dest not in known:
                raise ValueError(f"unknown config key {key!r}")
            overrides[dest] = value
        parser.set_defaults(**overrides)
        args = parser.parse_args(argv)
    return args


def _int_list(text) -> tuple:
    if isinstance(text, (tuple, list)):
        return tuple(text)
    return tuple(int(v) for v in str(text).split(",") if v)


def _str_list(text) -> tuple:
    if isinstance(text, (tuple, list)):
        return tuple(text)
    return tuple(v.strip() for v in str(text).split(",") if v.strip())


def _resolve_out_dir(flag_value) -> str:
    if flag_value:
        return flag_value
    return os.environ.get("CSCGI_OUTPUT_DIR", "runs")


def _build_set(mode, count, grid, frame_counts, seed, noise_sigma):
    if mode == "clean":
        return generate_dataset(count, grid, seed=seed)
    if mode == "denoise":
        return build_denoising_set(count, grid, frame_counts, seed=seed,
                                   noise_sigma=noise_sigma)
    return build_mixed_set(count, grid, frame_counts, seed=seed,
                           noise_sigma=noise_sigma)


def cmd_gen_data(argv):
    parser = argparse.ArgumentParser(prog="cscgi gen-data")
    parser.add_argument("--config")
    parser.add_argument("--count", type=int, default=1000)
    parser.add_argument("--image-size", type=int, default=200)
    parser.add_argument("--block-size", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--mode", choices=["clean", "denoise", "mixed"],
                        default="clean")
    parser.add_argument("--frames", default="100,200,300,400",
                        help="frame counts for denoise/mixed mode")
    parser.add_argument("--noise-sigma", type=float, default=0.0)
    parser.add_argument("--out", required=True)
    args = _apply_config_file(parser, argv)
    grid = BlockGrid(args.image_size, args.image_size, args.block_size)
    data = _build_set(args.mode, args.count, grid, _int_list(args.frames),
                      args.seed, args.noise_sigma)
    np.savez(args.out, inputs=data.inputs, targets=data.targets,
             provenance=data.provenance)
    with open(args.out + ".manifest.txt", "w") as fh:
        fh.write(_manifest_from_args(
            args, ["count", "image_size", "block_size", "seed", "mode",
                   "frames", "noise_sigma", "out"], "gen-data"))
    print(f"wrote {len(data)} blocks to {args.out}")
    return 0


def cmd_train(argv):
    parser = argparse.ArgumentParser(prog="cscgi train")
    parser.add_argument("--config")
    parser.add_argument("--mr", type=float, default=0.25)
    parser.add_argument("--train-size", type=int, default=1000)
    parser.add_argument("--image-size", type=int, default=200)
    parser.add_argument("--block-size", type=int, default=20)
    parser.add_argument("--mode", choices=["clean", "denoise", "mixed"],
                        default="mixed")
    parser.add_argument("--frames", default="100,200,300,400")
    parser.add_argument("--noise-sigma", type=float, default=0.0)
    parser.add_argument("--epochs", type=int, default=60)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--learning-rate", type=float, default=3e-5)
    parser.add_argument("--optimizer", choices=["sgd", "sgd-momentum"],
                        default="sgd-momentum")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--data", help="reuse a gen-data .npz instead of "
                                       "generating the training set")
    parser.add_argument("--out", required=True)
    args = _apply_config_file(parser, argv)
    grid = BlockGrid(args.image_size, args.image_size, args.block_size)
    if args.data:
        loaded = np.load(args.data)
        from .neural_reconstructor import TrainingSet
        data = TrainingSet(inputs=loaded["inputs"], targets=loaded["targets"],
                           provenance=str(loaded["provenance"]))
    else:
        data = _build_set(args.mode, args.train_size, grid,
                          _int_list(args.frames), args.seed, args.noise_sigma)
    width = int(round(args.mr * args.block_size * args.block_size))
    params = init_params(width, seed=args.seed, block_size=args.block_size)
    config = TrainingConfig(learning_rate=args.learning_rate,
                            batch_size=args.batch_size, epochs=args.epochs,
                            seed=args.seed + _SEED_TRAIN,
                            optimizer=args.optimizer)
    params, history = train(params, data, config)
    save_checkpoint(args.out, params)
    with open(args.out + ".loss.csv", "w") as fh:
        fh.write("epoch,loss\n")
        for epoch, value in enumerate(history):
            fh.write(f"{epoch},{value!r}\n")
    with open(args.out + ".manifest.txt", "w") as fh:
        fh.write(_manifest_from_args(
            args, ["mr", "train_size", "image_size", "block_size", "mode",
                   "frames", "noise_sigma", "epochs", "batch_size",
                   "learning_rate", "optimizer", "seed", "out"], "train"))
    print(f"trained {args.epochs} epochs, final loss {history[-1]:.6f}, "
          f"checkpoint {args.out}")
    return 0


def cmd_acquire(argv):
    parser = argparse.ArgumentParser(prog="cscgi acquire")
    parser.add_argument("--config")
    parser.add_argument("--scene", default="builtin",
                        help="'builtin' or a P5 graymap path")
    parser.add_argument("--image-size", type=int, default=200)
    parser.add_argument("--frames", type=int, default=400)
    parser.add_argument("--kind", choices=["binary", "gaussian-intensity"],
                        default="binary")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--noise-sigma", type=float, default=0.0)
    parser.add_argument("--out-patterns", required=True)
    parser.add_argument("--out-buckets", required=True)
    args = _apply_config_file(parser, argv)
    scene = load_scene(ExperimentConfig(scene=args.scene,
                                        image_size=args.image_size,
                                        frame_counts=(args.frames,)))
    patterns = generate_patterns(args.frames, scene.width, scene.height,
                                 kind=args.kind, seed=args.seed)
    buckets = acquire(scene, patterns, args.noise_sigma,
                      rng=np.random.default_rng(args.seed))
    save_patterns(args.out_patterns, patterns)
    save_buckets(args.out_buckets, buckets, patterns.width, patterns.height)
    with open(args.out_buckets + ".manifest.txt", "w") as fh:
        fh.write(_manifest_from_args(
            args, ["scene", "image_size", "frames", "kind", "seed",
                   "noise_sigma", "out_patterns", "out_buckets"], "acquire"))
    print(f"acquired {args.frames} frames")
    return 0


def cmd_reconstruct(argv):
    parser = argparse.ArgumentParser(prog="cscgi reconstruct")
    parser.add_argument("--config")
    parser.add_argument("--algo", choices=ALGORITHMS, required=True)
    parser.add_argument("--patterns", required=True)
    parser.add_argument("--buckets", required=True)
    parser.add_argument("--frames", type=int,
                        help="use only the first N frames")
    parser.add_argument("--model", help="checkpoint for dl/cscnn")
    parser.add_argument("--cs-lambda", type=float, default=0.05)
    parser.add_argument("--cs-iterations", type=int, default=500)
    parser.add_argument("--out", required=True)
    args = _apply_config_file(parser, argv)
    patterns = load_patterns(args.patterns)
    buckets = load_buckets(args.buckets)
    if args.frames is not None:
        from .experiment import _prefix
        patterns, buckets = _prefix(patterns, buckets, args.frames)
    if args.algo in ("dl", "cscnn"):
        if not args.model:
            raise ValueError(f"--model is required for algo {args.algo!r}")
        params = load_checkpoint(args.model)
        prelim = cgi_estimate(patterns, buckets)
        grid = BlockGrid(patterns.width, patterns.height, params.block_size)
        image = network_estimate(params, prelim, grid)
    elif args.algo == "cs":
        image = cs_gi_reconstruct(patterns, buckets, args.cs_lambda,
                                  args.cs_iterations)
    else:
        image = cgi_estimate(patterns, buckets)
    save_pgm(args.out, image)
    print(f"wrote {args.out}")
    return 0


def cmd_compare(argv):
    parser = argparse.ArgumentParser(prog="cscgi compare")
    parser.add_argument("--config", help="config file or an earlier manifest")
    parser.add_argument("--scene", default="builtin")
    parser.add_argument("--image-size", type=int, default=200)
    parser.add_argument("--block-size", type=int, default=20)
    parser.add_argument("--frames", default="100,200,300,400")
    parser.add_argument("--algos", default="cgi,cs,dl,cscnn")
    parser.add_argument("--mr", type=float, default=0.25)
    parser.add_argument("--train-size", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--noise-sigma", type=float, default=0.0)
    parser.add_argument("--cs-lambda", type=float, default=0.05)
    parser.add_argument("--cs-iterations", type=int, default=500)
    parser.add_argument("--model", help="CS-CNN checkpoint")
    parser.add_argument("--dl-model", help="DL-arm checkpoint (C = N)")
    parser.add_argument("--deterministic", action="store_true",
                        help="write wall_ms as 0 so re-runs are bit-identical")
    parser.add_argument("--out-dir",
                        help="default 'runs', or $CSCGI_OUTPUT_DIR")
    # manifests spell these two under their config-dataclass names
    args = _apply_config_file(parser, argv,
                              aliases={"frame_counts": "frames",
                                       "algorithms": "algos"})
    if isinstance(args.deterministic, str):  # came from a config file
        args.deterministic = args.deterministic.lower() in ("1", "true", "yes")
    config = ExperimentConfig(
        scene=args.scene, image_size=args.image_size,
        block_size=args.block_size, frame_counts=_int_list(args.frames),
        mr=args.mr, train_size=args.train_size, seed=args.seed,
        noise_sigma=args.noise_sigma, algorithms=_str_list(args.algos),
        cs_lambda=args.cs_lambda, cs_iterations=args.cs_iterations,
        deterministic=args.deterministic)
    models = {}
    if "cscnn" in config.algorithms:
        if not args.model:
            raise ValueError("--model is required when 'cscnn' is requested")
        models["cscnn"] = load_checkpoint(args.model)
    if "dl" in config.algorithms:
        if not args.dl_model:
            raise ValueError("--dl-model is required when 'dl' is requested")
        models["dl"] = load_checkpoint(args.dl_model)
    out_dir = _resolve_out_dir(args.out_dir)
    os.makedirs(out_dir, exist_ok=True)
    record = run_comparison(config, models, out_dir=out_dir)
    csv_text = comparison_csv(record)
    with open(os.path.join(out_dir, "results.csv"), "w") as fh:
        fh.write(csv_text)
    manifest = config_to_manifest(config, "compare")
    if args.model:
        manifest += f"model = {args.model}\n"
    if args.dl_model:
        manifest += f"dl_model = {args.dl_model}\n"
    with open(os.path.join(out_dir, "manifest.txt"), "w") as fh:
        fh.write(manifest)
    sys.stdout.write(csv_text)
    return 0


def cmd_metrics(argv):
    parser = argparse.ArgumentParser(prog="cscgi metrics")
    parser.add_argument("--config")
    parser.add_argument("--ref", required=True, help="reference P5 graymap")
    parser.add_argument("--test", required=True, help="image under test")
    args = _apply_config_file(parser, argv)
    ref = load_pgm(args.ref)
    test = load_pgm(args.test)
    print(f"psnr_db = {psnr(ref, test)!r}")
    print(f"ssim = {ssim(ref, test)!r}")
    return 0


_COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "acquire": cmd_acquire,
    "reconstruct": cmd_reconstruct,
    "compare": cmd_compare,
    "metrics": cmd_metrics,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help"):
        print("usage: cscgi {" + ",".join(_COMMANDS) + "} [options]\n"
              "       cscgi <command> --help for per-command options")
        return 0 if argv else 2
    if argv[0] == "--version":
        print(__version__)
        return 0
    command = argv[0]
    if command not in _COMMANDS:
        print(f"error: unknown command {command!r}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[command](argv[1:])
    except (ValueError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
