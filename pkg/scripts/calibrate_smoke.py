"""Smoke-tier calibration: pretrain quality, tuned-vs-untrained motion.

Writes checkpoints and a JSON summary under .cache/calib so results can
be inspected and reused while iterating on configs.
"""

import dataclasses
import json
import os
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from fewmotion.data import gen_motion_set, gen_still_set, gen_first_frames, MotionSetManifest
from fewmotion.diffusion import SamplerConfig, make_schedule, shared_noise_init, LatentSequence, ddim_sample
from fewmotion.model import ModelSpec, inflate_to_video, apply_freeze_policy, save_checkpoint, load_checkpoint
from fewmotion.pipeline import (TrainConfig, pretrain_image, tune_motion, generate,
                                GenerationRequest, evaluate_image_loss)
from fewmotion.harness.metrics import evaluate, extract_foreground, motion_accuracy
from fewmotion.data.vocab import tokenize, unconditional

ROOT = os.path.join(os.path.dirname(__file__), "..", ".cache", "calib")
os.makedirs(ROOT, exist_ok=True)

RES = 32
L = 8
T = 400
DDIM = 12
SPEC = ModelSpec(base_width=16, channel_mults=(1, 2, 4), attn_levels=(2,),
                 num_res_blocks=1, norm_groups=8, num_heads=4)
PRETRAIN_STEPS = int(os.environ.get("CAL_PRETRAIN_STEPS", 2500))
TUNE_STEPS = int(os.environ.get("CAL_TUNE_STEPS", 1400))
TUNE_LR = float(os.environ.get("CAL_TUNE_LR", 3e-4))

summary = {}
t_start = time.time()


def log(msg):
    print(f"[{time.time()-t_start:7.1f}s] {msg}", flush=True)


sched = make_schedule(T, 1e-4, 0.02, DDIM)

# ---------------------------------------------------------------- pretrain
pre_path = os.path.join(ROOT, "pretrained.lamp")
if os.path.exists(pre_path) and not os.environ.get("CAL_FORCE"):
    model, sched2, _ = load_checkpoint(pre_path)
    log("loaded cached pretrained model")
else:
    images, tokens, _ = gen_still_set(300, RES, seed=11)
    tc = TrainConfig(stage="pretrain", learning_rate=2e-3, steps=PRETRAIN_STEPS,
                     batch=8, seed=11, log_every=200)
    model, hist = pretrain_image(images[:-30], tokens[:-30], SPEC, sched, tc,
                                 out_path=pre_path, log=log)
    summary["pretrain"] = {"initial": hist.smoothed_initial(20),
                           "final": hist.smoothed_final(100)}
    summary["pretrain_heldout"] = evaluate_image_loss(model, images[-30:], tokens[-30:], sched, 5)
    log(f"pretrain done {summary['pretrain']}")

# sample quality: detector fire rate over 50 unconditional-ish samples
fire = 0
nsamples = 50
for i in range(nsamples):
    rng = np.random.default_rng(1000 + i)
    prompts = ["red circle dark", "green square light", "blue triangle gradient",
               "yellow circle dark", "magenta square dark", "cyan triangle light"]
    tok = tokenize(prompts[i % len(prompts)])
    x = rng.standard_normal((1, 3, RES, RES)).astype(np.float32)
    # plain image DDIM sampling
    steps = sched.ddim_steps
    for j in range(len(steps) - 1, -1, -1):
        t = int(steps[j]); t_prev = int(steps[j - 1]) if j > 0 else 0
        eps = model(x, t, tok[None]).data
        ab_t, ab_p = float(sched.abar(t)), float(sched.abar(t_prev))
        x0 = (x - np.sqrt(1 - ab_t) * eps) / np.sqrt(ab_t)
        x = (np.sqrt(ab_p) * x0 + np.sqrt(1 - ab_p) * eps).astype(np.float32)
    mask, area = extract_foreground(x[0])
    if area >= 4.0:
        fire += 1
summary["detector_rate"] = fire / nsamples
log(f"pretrain sample detector rate: {fire}/{nsamples}")

# ------------------------------------------------------------------- tune
ds_dir = os.path.join(ROOT, "motion_set")
if not os.path.exists(os.path.join(ds_dir, "manifest.json")):
    man = gen_motion_set("slide_right", 4, L, RES, seed=21, out_dir=ds_dir)
else:
    man = MotionSetManifest.load(os.path.join(ds_dir, "manifest.json"))

video = inflate_to_video(model)
apply_freeze_policy(video.registry)

# untrained baseline on held-out first frames
combos = [tuple(c) for c in man.split["heldout"]]
frames, toks, _ = gen_first_frames(combos, 12, RES, seed=31, motion="slide_right")

def eval_model(m, tag, n=12):
    vids = []
    for i in range(n):
        cfg = SamplerConfig(num_inference_steps=DDIM, shared_alpha=0.2, seed=500 + i)
        req = GenerationRequest(first_frame=frames[i], tokens=toks[i], sampler=cfg, length=L)
        vids.append(generate(m, sched, req))
    rep = evaluate(vids, "slide_right")
    disp = []
    for v in vids:
        from fewmotion.harness.metrics import track_foreground
        tr = track_foreground(v)
        xs = [r[0] for r in tr if r[4]]
        disp.append(xs[-1] - xs[0] if len(xs) >= 2 else float("nan"))
    log(f"{tag}: motion_acc={rep.motion_accuracy:.3f} consistency={rep.consistency:.3f} "
        f"mean_disp={np.nanmean(disp):.2f}px")
    return rep, disp

rep0, disp0 = eval_model(video, "untrained baseline")
summary["baseline"] = {"motion_accuracy": rep0.motion_accuracy,
                       "consistency": rep0.consistency,
                       "mean_disp": float(np.nanmean(disp0))}

tuned_path = os.path.join(ROOT, "tuned.lamp")
tc = TrainConfig(stage="tune_motion", learning_rate=TUNE_LR, steps=TUNE_STEPS,
                 clip_length=L, seed=33, log_every=100)
video, hist = tune_motion(man, ds_dir, "slide right", video, sched, tc,
                          out_path=tuned_path, log=log)
summary["tune"] = {"initial": hist.smoothed_initial(20), "final": hist.smoothed_final(100)}
log(f"tune done {summary['tune']}")

rep1, disp1 = eval_model(video, "tuned")
summary["tuned"] = {"motion_accuracy": rep1.motion_accuracy,
                    "consistency": rep1.consistency,
                    "mean_disp": float(np.nanmean(disp1)),
                    "pos_disp_frac": float(np.mean(np.array(disp1) > 0))}

with open(os.path.join(ROOT, "summary.json"), "w") as f:
    json.dump(summary, f, indent=1)
log(f"SUMMARY: {json.dumps(summary)}")
