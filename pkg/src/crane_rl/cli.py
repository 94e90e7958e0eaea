"""Command-line pipeline: gen-data, train-actuator, train-forward, train-policy, eval-track.

Exit status: 0 success, 2 usage, 3 config error, 4 I/O or parse error,
5 validation bound exceeded (artifacts are still written).
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, child_rng, child_seed, load_config
from .datasets import (
    CsvParseError,
    ensure_dir,
    generate_actuator_log,
    generate_fk_dataset,
    read_actuator_csv,
    read_fk_csv,
    write_actuator_csv,
    write_fk_csv,
)
from .ddpg import DdpgAgent, train
from .evaluation import export_valve_commands, make_trajectory, track
from .nn import ModelFormatError, load_model, save_model
from .surrogate import monotone_on_grid, train_actuator_net, train_forward_net, write_report

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_BOUND = 0, 3, 4, 5

log = logging.getLogger("crane_rl")


class BoundViolation(RuntimeError):
    pass


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(path: Path, entries: dict[str, object], files: list[Path]) -> None:
    lines = [f"crane_rl_version = {__version__}"]
    lines += [f"{k} = {v}" for k, v in entries.items()]
    lines += [f"file.{f.name} = sha256:{_sha256(f)}" for f in files]
    path.write_text("\n".join(lines) + "\n")


def cmd_gen_data(args) -> int:
    cfg = load_config(args.config)
    out = ensure_dir(args.out_dir)
    noise = cfg.noise()
    files = []
    for joint in (2, 3):
        name = f"actuator_j{joint}"
        log_ = generate_actuator_log(cfg.geometry(joint), cfg["data.n_sweeps"], noise, child_rng(args.seed, name))
        files.append(out / f"{name}.csv")
        write_actuator_csv(log_, files[-1])
    fk = generate_fk_dataset(cfg.chain(), cfg["data.fk_samples"], noise, child_rng(args.seed, "fk_dataset"))
    files.append(out / "fk_dataset.csv")
    write_fk_csv(fk, files[-1])
    write_manifest(out / "manifest.txt", {
        "command": "gen-data",
        "root_seed": args.seed,
        "seed.actuator_j2": child_seed(args.seed, "actuator_j2"),
        "seed.actuator_j3": child_seed(args.seed, "actuator_j3"),
        "seed.fk_dataset": child_seed(args.seed, "fk_dataset"),
        "config_hash": cfg.digest(),
        "params_hash.plant": cfg.digest(("plant", "cyl")),
        "params_hash.noise": cfg.digest(("noise", "data")),
    }, files)
    for f in files:
        print(f)
    return EXIT_OK


def cmd_train_actuator(args) -> int:
    cfg = load_config(args.config)
    data = read_actuator_csv(args.log)
    geom = cfg.geometry(args.joint)
    res = train_actuator_net(data, args.joint, child_rng(args.seed, f"actuator_net{args.joint}"),
                             cfg.actuator_settings(), geometry=geom)
    out = Path(args.out)
    ensure_dir(out.parent)
    save_model(res.model, out)
    report_files = write_report(res.report, out.with_suffix(".report.csv"))
    chain = cfg.chain()
    lo, hi = chain.lower[args.joint - 1], chain.upper[args.joint - 1]
    mono = monotone_on_grid(res.model, lo, hi, increasing=geom.sign > 0)
    with report_files[-1].open("a") as fh:
        fh.write(f"monotone_on_limits {int(mono)}\n")
    rmse = float(res.report.rmse[0])
    print(f"actuator net {args.joint}: held-out rmse {rmse:.6g} m, monotone {mono}")
    if rmse > cfg["actuator.max_rmse"]:
        raise BoundViolation(f"held-out RMSE {rmse:.6g} m exceeds {cfg['actuator.max_rmse']} m")
    return EXIT_OK


def cmd_train_forward(args) -> int:
    cfg = load_config(args.config)
    data = read_fk_csv(args.data)
    res = train_forward_net(data, child_rng(args.seed, "forward_net"), cfg.forward_settings(), chain=cfg.chain())
    out = Path(args.out)
    ensure_dir(out.parent)
    save_model(res.model, out)
    write_report(res.report, out.with_suffix(".report.csv"), ("x", "y", "z"))
    worst = res.report.max_abs_err
    print("forward net: held-out max abs error (m) " + " ".join(f"{v:.6g}" for v in worst))
    if np.any(worst > cfg["forward.max_abs_err"]):
        raise BoundViolation(f"held-out max error {worst.tolist()} exceeds {cfg['forward.max_abs_err']} m")
    return EXIT_OK


def cmd_train_policy(args) -> int:
    cfg = load_config(args.config)
    fk = load_model(args.fk_model)
    out = ensure_dir(args.out_dir)
    feedback = args.feedback == "on"
    dcfg = cfg.ddpg(feedback)
    agent = DdpgAgent.create(dcfg, child_rng(args.seed, "agent_init"))
    written = []

    def checkpoint(episode, actor):
        p = out / f"actor_ep{episode:05d}.mlp"
        save_model(actor, p)
        written.append(p)

    result = train(cfg.env(), agent, fk, dcfg, child_rng(args.seed, "training"), checkpoint_fn=checkpoint)
    rewards = out / "episode_rewards.csv"
    rewards.write_text("episode,reward\n" + "".join(
        f"{i},{r:.17g}\n" for i, r in enumerate(result.episode_rewards, start=1)))
    final = out / "actor_final.mlp"
    save_model(result.agent.actor, final)
    write_manifest(out / "manifest.txt", {
        "command": "train-policy",
        "root_seed": args.seed,
        "feedback": args.feedback,
        "seed.agent_init": child_seed(args.seed, "agent_init"),
        "seed.training": child_seed(args.seed, "training"),
        "config_hash": cfg.digest(),
        "fk_model": f"sha256:{_sha256(Path(args.fk_model))}",
    }, [rewards, final, *written])
    tail = result.episode_rewards[-min(40, len(result.episode_rewards)):]
    print(f"trained {len(result.episode_rewards)} episodes, mean reward of last {len(tail)}: {np.mean(tail):.6g}")
    return EXIT_OK


def cmd_eval_track(args) -> int:
    cfg = load_config(args.trajectory_config)
    actor = load_model(args.actor)
    net2, net3 = load_model(args.actuator2), load_model(args.actuator3)
    out = ensure_dir(args.out_dir)
    env = cfg.env()
    waypoints = make_trajectory(cfg.trajectory(), env.chain)
    report = track(actor, env, waypoints, rng=child_rng(args.seed, "track_start"),
                   steps_per_waypoint=cfg["track.steps_per_waypoint"], settle_steps=cfg["track.settle_steps"])
    report.write(out / "tracking.csv", out / "tracking_summary.txt")
    export_valve_commands(report.joints, net2, net3, env.chain).write(out / "valve_commands.csv")
    print("tracking rmse (m) " + " ".join(f"{v:.6g}" for v in report.rmse))
    print("tracking max abs error (m) " + " ".join(f"{v:.6g}" for v in report.max_abs_err))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crane-rl", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_flag="--config"):
        sp.add_argument(config_flag, default=None,
                        help="config file or preset name (desk, paper); falls back to $CRANE_RL_CONFIG")
        sp.add_argument("--seed", type=int, default=0, help="root seed")

    sp = sub.add_parser("gen-data", help="synthesize actuator logs and the FK dataset")
    common(sp)
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(func=cmd_gen_data)

    sp = sub.add_parser("train-actuator", help="train actuator network 2 or 3")
    common(sp)
    sp.add_argument("--log", required=True)
    sp.add_argument("--joint", type=int, choices=(2, 3), required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_train_actuator)

    sp = sub.add_parser("train-forward", help="train the forward-kinematics network")
    common(sp)
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_train_forward)

    sp = sub.add_parser("train-policy", help="train a DDPG policy with or without action feedback")
    common(sp)
    sp.add_argument("--fk-model", required=True)
    sp.add_argument("--feedback", choices=("on", "off"), default="on")
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(func=cmd_train_policy)

    sp = sub.add_parser("eval-track", help="track a trajectory with a frozen actor")
    common(sp, "--trajectory-config")
    sp.add_argument("--actor", required=True)
    sp.add_argument("--actuator2", required=True)
    sp.add_argument("--actuator3", required=True)
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(func=cmd_eval_track)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, CsvParseError, ModelFormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except BoundViolation as exc:
        print(f"validation bound exceeded: {exc}", file=sys.stderr)
        return EXIT_BOUND


if __name__ == "__main__":
    sys.exit(main())
