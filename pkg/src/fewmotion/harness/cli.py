"""Command-line interface.

Subcommands: dataset-gen, pretrain, tune, generate, animate, edit, eval,
grad-check, ablate. Every run writes a JSON run record into --out.
Exit codes: 0 success, 1 validation/usage error, 2 numerical abort.

--config supplies defaults from a JSON file; explicit flags win. The
optional "model" and "schedule" sections map to ModelSpec fields and
make_schedule arguments.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys

import numpy as np

from ..errors import DivergenceError, NonFiniteError, ValidationError
from ..data import (MOTION_KINDS, MotionSetManifest, gen_first_frames,
                    gen_motion_set, gen_still_set, load_clip, tokenize,
                    untokenize, SHAPES, COLORS, BACKGROUNDS)
from ..data.vocab import DEFAULT_BACKGROUND, VOCAB_SIZE, MAX_TOKENS
from ..data.render import render_frame
from ..diffusion import SamplerConfig, PostprocessFlags, make_schedule
from ..model import ModelSpec, load_checkpoint
from ..pipeline import (GenerationRequest, TrainConfig, animate_image,
                        edit_video, generate, pretrain_image, tune_motion,
                        evaluate_image_loss)
from .ablate import ABLATION_MODES, run_ablation
from .gradsuite import full_suite
from .media import export_media
from .metrics import evaluate, frame_consistency
from .runrecord import Stopwatch, write_record


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(ValidationError):
    pass


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _model_spec(cfg: dict) -> ModelSpec:
    spec = ModelSpec(**cfg.get("model", {}))
    spec.validate()
    return spec


def _schedule(cfg: dict, T=None, ddim=None):
    s = dict(cfg.get("schedule", {}))
    if T is not None:
        s["T"] = T
    if ddim is not None:
        s["ddim_count"] = ddim
    s.setdefault("T", 1000)
    s.setdefault("beta_start", 1e-4)
    s.setdefault("beta_end", 0.02)
    s.setdefault("ddim_count", 50)
    return make_schedule(s["T"], s["beta_start"], s["beta_end"], s["ddim_count"])


def _sampler(args) -> SamplerConfig:
    return SamplerConfig(
        num_inference_steps=args.steps,
        shared_alpha=args.alpha,
        seed=args.seed,
        eta=getattr(args, "eta", 0.0),
        postprocess=PostprocessFlags(adain=not args.no_adain,
                                     hist_match=not args.no_hist_match),
    )


def _load_video_checkpoint(path):
    model, sched, header = load_checkpoint(path)
    if not model.is_video:
        raise ValidationError(f"{path} holds an image model; tune it first")
    if sched is None:
        raise ValidationError(f"{path} carries no schedule")
    return model, sched, header


def _render_from_prompt(prompt: str, resolution: int, seed: int) -> np.ndarray:
    """First frame from the data renderer when no file is given."""
    ids = tokenize(prompt)
    words = untokenize(ids).split()
    shape = next((w for w in words if w in SHAPES), "circle")
    color = next((w for w in words if w in COLORS), "red")
    bg = next((w for w in words if w in BACKGROUNDS), DEFAULT_BACKGROUND)
    rng = np.random.default_rng(seed)
    scale = resolution / 48.0
    size = float(rng.uniform(4.5 * scale, 7.5 * scale))
    r = size * 1.56 + 1.0
    cx = float(rng.uniform(r, resolution - r))
    cy = float(rng.uniform(r, resolution - r))
    frame, _ = render_frame(resolution, shape, color, bg, cx, cy, size)
    return frame


# ------------------------------------------------------------------ commands

def cmd_dataset_gen(args, cfg):
    man = gen_motion_set(args.kind, args.clips, args.frames, args.resolution,
                         args.seed, args.out)
    arts = [os.path.join(args.out, "manifest.json")] + \
        [os.path.join(args.out, c.dir) for c in man.clips]
    return {"clips": len(man.clips), "motion": man.motion,
            "heldout_combos": man.split["heldout"]}, arts


def cmd_pretrain(args, cfg):
    spec = _model_spec(cfg)
    sched = _schedule(cfg, T=args.T, ddim=args.ddim)
    images, tokens, _ = gen_still_set(args.stills, args.resolution, args.seed)
    n_hold = max(8, args.stills // 10)
    train_x, train_t = images[:-n_hold], tokens[:-n_hold]
    hold_x, hold_t = images[-n_hold:], tokens[-n_hold:]
    tc = TrainConfig(stage="pretrain", learning_rate=args.lr, steps=args.steps,
                     batch=args.batch, seed=args.seed, log_every=args.log_every,
                     checkpoint_every=args.checkpoint_every)
    out_path = os.path.join(args.out, "pretrained.lamp")
    os.makedirs(args.out, exist_ok=True)
    model, hist = pretrain_image(train_x, train_t, spec, sched, tc,
                                 out_path=out_path,
                                 log=print if args.verbose else None)
    heldout_loss = evaluate_image_loss(model, hold_x, hold_t, sched, seed=args.seed)
    metrics = {
        "loss_initial": hist.initial_loss, "loss_final": hist.final_loss,
        "loss_smoothed_initial": hist.smoothed_initial(),
        "loss_smoothed_final": hist.smoothed_final(),
        "heldout_loss": heldout_loss,
        "loss_curve": hist.losses[::max(1, len(hist.losses) // 200)],
        "params": model.registry.param_count(),
    }
    return metrics, [out_path]


def cmd_tune(args, cfg):
    manifest = MotionSetManifest.load(os.path.join(args.dataset, "manifest.json"))
    base, sched, _ = load_checkpoint(args.base)
    if base.is_video:
        raise ValidationError("tune: base checkpoint must be an image model")
    if sched is None:
        sched = _schedule(cfg)
    tc = TrainConfig(stage=args.stage, learning_rate=args.lr, steps=args.steps,
                     clip_length=args.clip_length or manifest.frames,
                     seed=args.seed, log_every=args.log_every,
                     checkpoint_every=args.checkpoint_every,
                     first_frame_cond=not args.no_first_frame_cond)
    from ..model import inflate_to_video
    model = inflate_to_video(base)
    if args.kernel_mode != "shifted":
        model.flags = dataclasses.replace(model.flags, kernel_mode=args.kernel_mode)
    if args.no_temporal_spatial:
        model.flags = dataclasses.replace(model.flags, temporal_conv=False)
    out_path = os.path.join(args.out, "tuned.lamp")
    os.makedirs(args.out, exist_ok=True)
    prompt = args.motion_prompt or manifest.motion.replace("_", " ")
    model, hist = tune_motion(manifest, args.dataset, prompt, model, sched, tc,
                              out_path=out_path,
                              log=print if args.verbose else None)
    metrics = {
        "loss_initial": hist.initial_loss, "loss_final": hist.final_loss,
        "loss_smoothed_initial": hist.smoothed_initial(),
        "loss_smoothed_final": hist.smoothed_final(),
        "loss_curve": hist.losses[::max(1, len(hist.losses) // 200)],
        "trainable_fraction": model.registry.trainable_fraction(),
    }
    return metrics, [out_path]


def _generate_common(args, cfg, first_frame, model, sched, header):
    req = GenerationRequest(first_frame=first_frame, tokens=tokenize(args.prompt),
                            sampler=_sampler(args), length=args.length)
    video = generate(model, sched, req,
                     resolution=header["meta"].get("resolution"))
    arts = export_media(video, os.path.join(args.out, "frames"), "png_dir")
    arts.append(export_media(video, os.path.join(args.out, "video.gif"), "gif")[0])
    hashes = {os.path.basename(p): _sha256(p) for p in arts}
    return video, {"consistency": frame_consistency(video),
                   "artifact_hashes": hashes}, arts


def cmd_generate(args, cfg):
    model, sched, header = _load_video_checkpoint(args.checkpoint)
    res = header["meta"].get("resolution")
    if args.first_frame:
        from ..data import load_image
        ff = load_image(args.first_frame, res)
    else:
        ff = _render_from_prompt(args.prompt, res, args.seed)
    os.makedirs(args.out, exist_ok=True)
    _, metrics, arts = _generate_common(args, cfg, ff, model, sched, header)
    return metrics, arts


def cmd_animate(args, cfg):
    model, sched, header = _load_video_checkpoint(args.checkpoint)
    res = header["meta"].get("resolution")
    os.makedirs(args.out, exist_ok=True)
    video = animate_image(args.image, args.prompt, model, sched, _sampler(args),
                          length=args.length, resolution=res)
    arts = export_media(video, os.path.join(args.out, "frames"), "png_dir")
    arts.append(export_media(video, os.path.join(args.out, "video.gif"), "gif")[0])
    hashes = {os.path.basename(p): _sha256(p) for p in arts}
    return {"consistency": frame_consistency(video),
            "artifact_hashes": hashes}, arts


def cmd_edit(args, cfg):
    model, sched, header = _load_video_checkpoint(args.checkpoint)
    res = header["meta"].get("resolution")
    template = load_clip(args.template)
    from ..data import load_image
    edited = load_image(args.edited_first_frame, res)
    os.makedirs(args.out, exist_ok=True)
    video = edit_video(template, edited, args.prompt, model, sched,
                       _sampler(args), inversion_steps=args.inversion_steps,
                       inversion_strength=args.strength, resolution=res)
    arts = export_media(video, os.path.join(args.out, "frames"), "png_dir")
    arts.append(export_media(video, os.path.join(args.out, "video.gif"), "gif")[0])
    hashes = {os.path.basename(p): _sha256(p) for p in arts}
    return {"consistency": frame_consistency(video),
            "artifact_hashes": hashes}, arts


def _heldout_eval_inputs(header, n, seed, kind):
    meta = header["meta"]
    combos = [tuple(c) for c in meta.get("heldout_combos", [])]
    if not combos:
        raise ValidationError("checkpoint meta lacks heldout_combos; "
                              "was it tuned on a generated motion set?")
    res = meta["resolution"]
    frames, tokens, prompts = gen_first_frames(combos, n, res, seed, motion=kind)
    return frames, tokens, prompts, res


def cmd_eval(args, cfg):
    model, sched, header = _load_video_checkpoint(args.checkpoint)
    kind = args.kind or header["meta"].get("motion")
    if kind not in MOTION_KINDS:
        raise ValidationError(f"eval: unknown motion kind {kind!r}")
    if args.clips:
        videos = [load_clip(d) for d in args.clips]
    else:
        frames, tokens, _, _ = _heldout_eval_inputs(header, args.n, args.seed, kind)
        videos = []
        length = args.length or header["meta"].get("clip_length", 16)
        for i, (ff, tok) in enumerate(zip(frames, tokens)):
            s = dataclasses.replace(_sampler(args), seed=args.seed + i)
            req = GenerationRequest(first_frame=ff, tokens=tok, sampler=s,
                                    length=length)
            videos.append(generate(model, sched, req))
    report = evaluate(videos, kind, config={"n": len(videos), "kind": kind})
    return report.to_dict(), []


def cmd_grad_check(args, cfg):
    if args.all or not args.op:
        reports = full_suite(seeds=range(args.seeds), eps=args.eps)
    else:
        from ..numerics.gradcheck import primitive_cases, grad_check
        cases = [c for c in primitive_cases() if args.op in c.name]
        if not cases:
            raise ValidationError(f"grad-check: no primitive matches {args.op!r}")
        reports = [grad_check(c.fn, c.input_shapes, seed=s, eps=args.eps,
                              name=f"{c.name} (seed {s})", init=c.init)
                   for c in cases for s in range(args.seeds)]
    worst = max(r.max_rel_err for r in reports)
    failures = [r for r in reports if not r.passed]
    for r in reports:
        print(r)
    print(f"{len(reports)} checks, {len(failures)} failures, worst rel err {worst:.3e}")
    if failures:
        raise NonFiniteError(f"grad-check: {len(failures)} gradient checks failed")
    return {"checks": len(reports), "failures": 0, "worst_rel_err": worst}, []


def cmd_ablate(args, cfg):
    model, sched, header = _load_video_checkpoint(args.checkpoint)
    kind = args.kind or header["meta"].get("motion")
    modes = ABLATION_MODES if args.mode == "all" else tuple(args.mode.split(","))
    frames, tokens, _, _ = _heldout_eval_inputs(header, args.n, args.seed, kind)
    length = args.length or header["meta"].get("clip_length", 16)
    results = run_ablation(model, sched, frames, tokens, kind, _sampler(args),
                           length, modes=modes,
                           seeds=[args.seed + i for i in range(len(frames))])
    table = {}
    for mode, rep in results.items():
        table[mode] = {"consistency": rep.consistency,
                       "motion_accuracy": rep.motion_accuracy,
                       "diversity": rep.diversity}
        print(f"{mode:22s} consistency={rep.consistency:.4f} "
              f"motion_accuracy={rep.motion_accuracy:.3f} "
              f"diversity={rep.diversity:.4f}")
    return {"modes": table}, []


# --------------------------------------------------------------------- main

def build_parser() -> _Parser:
    p = _Parser(prog="fewmotion",
                description="Few-shot motion learning for pixel-space video diffusion")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=True):
        sp.add_argument("--config", default=None, help="JSON config file")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", required=out_required, default=None)
        sp.add_argument("--verbose", action="store_true")

    sp = sub.add_parser("dataset-gen", help="render a synthetic motion set")
    common(sp)
    sp.add_argument("--kind", required=True, choices=sorted(MOTION_KINDS))
    sp.add_argument("--clips", type=int, default=8)
    sp.add_argument("--frames", type=int, default=16)
    sp.add_argument("--resolution", type=int, default=48)
    sp.set_defaults(func=cmd_dataset_gen)

    sp = sub.add_parser("pretrain", help="pretrain the image model on stills")
    common(sp)
    sp.add_argument("--stills", type=int, default=400)
    sp.add_argument("--resolution", type=int, default=48)
    sp.add_argument("--steps", type=int, default=3000)
    sp.add_argument("--batch", type=int, default=8)
    sp.add_argument("--lr", type=float, default=2e-3)
    sp.add_argument("--T", type=int, default=None)
    sp.add_argument("--ddim", type=int, default=None)
    sp.add_argument("--log-every", type=int, default=100)
    sp.add_argument("--checkpoint-every", type=int, default=0)
    sp.set_defaults(func=cmd_pretrain)

    sp = sub.add_parser("tune", help="few-shot motion tuning of a pretrained model")
    common(sp)
    sp.add_argument("--dataset", required=True, help="motion set directory")
    sp.add_argument("--base", required=True, help="pretrained image checkpoint")
    sp.add_argument("--steps", type=int, default=3000)
    sp.add_argument("--lr", type=float, default=3e-5)
    sp.add_argument("--clip-length", type=int, default=None)
    sp.add_argument("--stage", choices=("tune_motion", "tune_edit"),
                    default="tune_motion")
    sp.add_argument("--motion-prompt", default=None)
    sp.add_argument("--kernel-mode", choices=("shifted", "centered", "strict_two"),
                    default="shifted")
    sp.add_argument("--no-first-frame-cond", action="store_true")
    sp.add_argument("--no-temporal-spatial", action="store_true")
    sp.add_argument("--log-every", type=int, default=100)
    sp.add_argument("--checkpoint-every", type=int, default=0)
    sp.set_defaults(func=cmd_tune)

    def sampling(sp):
        sp.add_argument("--steps", type=int, default=25)
        sp.add_argument("--alpha", type=float, default=0.2)
        sp.add_argument("--eta", type=float, default=0.0)
        sp.add_argument("--length", type=int, default=None)
        sp.add_argument("--no-adain", action="store_true")
        sp.add_argument("--no-hist-match", action="store_true")

    sp = sub.add_parser("generate", help="first-frame-conditioned video generation")
    common(sp)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--prompt", required=True)
    sp.add_argument("--first-frame", default=None,
                    help="PNG path; rendered from the prompt when omitted")
    sampling(sp)
    sp.set_defaults(func=cmd_generate, length=16)

    sp = sub.add_parser("animate", help="animate an external image")
    common(sp)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--image", required=True)
    sp.add_argument("--prompt", required=True)
    sampling(sp)
    sp.set_defaults(func=cmd_animate, length=16)

    sp = sub.add_parser("edit", help="re-render a single-clip motion with a new first frame")
    common(sp)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--template", required=True, help="template clip directory")
    sp.add_argument("--edited-first-frame", required=True)
    sp.add_argument("--prompt", required=True)
    sp.add_argument("--strength", type=float, default=1.0)
    sp.add_argument("--inversion-steps", type=int, default=None)
    sampling(sp)
    sp.set_defaults(func=cmd_edit)

    sp = sub.add_parser("eval", help="score generated videos on held-out first frames")
    common(sp)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--kind", default=None)
    sp.add_argument("--n", type=int, default=8)
    sp.add_argument("--clips", nargs="*", default=None,
                    help="score existing clip directories instead of generating")
    sampling(sp)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("grad-check", help="finite-difference gradient verification")
    common(sp)
    sp.add_argument("--all", action="store_true")
    sp.add_argument("--op", default=None)
    sp.add_argument("--seeds", type=int, default=5)
    sp.add_argument("--eps", type=float, default=1e-5)
    sp.set_defaults(func=cmd_grad_check)

    sp = sub.add_parser("ablate", help="sample-time ablation sweep")
    common(sp)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--mode", default="all",
                    help=f"'all' or comma list of {', '.join(ABLATION_MODES)}")
    sp.add_argument("--kind", default=None)
    sp.add_argument("--n", type=int, default=6)
    sampling(sp)
    sp.set_defaults(func=cmd_ablate)
    return p


def _load_config(argv) -> dict:
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            with open(argv[i + 1]) as f:
                return json.load(f)
        if a.startswith("--config="):
            with open(a.split("=", 1)[1]) as f:
                return json.load(f)
    return {}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        cfg = _load_config(argv)
        flat = {k: v for k, v in cfg.items() if not isinstance(v, dict)}
        if flat:
            for action in parser._subparsers._group_actions:
                for sp in action.choices.values():
                    sp.set_defaults(**{k: v for k, v in flat.items()})
        args = parser.parse_args(argv)
        with Stopwatch() as sw:
            metrics, artifacts = args.func(args, cfg)
        out_dir = args.out or "."
        record = write_record(out_dir, args.command, _echo_config(args), args.seed,
                              metrics, artifacts, sw.duration)
        print(f"run record: {record}")
        return 0
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValidationError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"validation error: {e}", file=sys.stderr)
        return 1
    except (NonFiniteError, DivergenceError, FloatingPointError) as e:
        print(f"numerical abort: {e}", file=sys.stderr)
        return 2


def _echo_config(args) -> dict:
    skip = {"func", "config"}
    return {k: v for k, v in vars(args).items()
            if k not in skip and not callable(v)}


if __name__ == "__main__":
    sys.exit(main())
