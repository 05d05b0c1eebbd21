"""Few-shot motion-pattern learning for pixel-space video diffusion.

Subpackages:
  numerics   autodiff primitives and the finite-difference checker
  diffusion  noise schedules, losses, DDIM sampling and inversion
  model      image UNet, video inflation, freeze policy, checkpoints
  data       synthetic moving-shape clips, prompts, frame IO
  pipeline   training stages, generation / animation / editing
  harness    metrics, ablations, media export, CLI
"""

__version__ = "0.1.0"
