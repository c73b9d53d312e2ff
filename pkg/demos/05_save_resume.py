"""Checkpoint a half-trained learner, reload it, and finish the stream.

State lives entirely in seeds, sums, and solved weights, so a reloaded
learner continues exactly where the original stopped and ends bit-identical.
"""

import tempfile
from pathlib import Path

import numpy as np

from anacp import (
    LearnerConfig,
    SynthSpec,
    build_learner,
    generate_synthetic,
    learn_task,
    load_learner,
    make_task_stream,
    predict,
    save_learner,
)

spec = SynthSpec(dim=24, num_classes=12, n_per_class=60, mean_scale=1.0, seed=4)
train, test = generate_synthetic(spec)
stream = make_task_stream(train, test, 4, seed=0)
config = LearnerConfig(method="anacp", rp_dim=128, heads=2, replay_per_class=50)

learner = build_learner(config)
for task in stream.tasks[:2]:
    learn_task(learner, task)

with tempfile.TemporaryDirectory() as tmp:
    path = save_learner(learner, Path(tmp) / "halfway.npz")
    print(f"checkpoint written after 2/4 tasks: {path.stat().st_size / 1024:.0f} KiB")
    resumed = load_learner(path)

for tail in (learner, resumed):
    for task in stream.tasks[2:]:
        learn_task(tail, task)

original = predict(learner, test.features)
restored = predict(resumed, test.features)
print(f"predictions identical after resume: {np.array_equal(original, restored)}")
print(f"final accuracy: {100 * np.mean(original == test.labels):.2f}")
