"""Sweep the main knobs: heads, projection width, replay budget, repulsion.

Mirrors the usual ablation table at desk scale. Expect wider projections and
more heads to help a little, replay count to matter only weakly, and the
repulsion toggle to show up on the clustered benchmark more than on an
easy one.
"""

from anacp import LearnerConfig, SynthSpec, generate_synthetic, make_task_stream, run_stream

spec = SynthSpec(dim=48, num_classes=16, n_per_class=100, mean_scale=0.45, seed=2)
train, test = generate_synthetic(spec)
stream = make_task_stream(train, test, 4, seed=0)


def a_last(**kw):
    settings = dict(method="anacp", rp_dim=256, heads=3, replay_per_class=100)
    settings.update(kw)
    return run_stream(LearnerConfig(**settings), stream).a_last


print("heads:")
for h in (1, 3, 5):
    print(f"  H={h}:  a_last {a_last(heads=h):.2f}")

print("projection width:")
for d in (64, 256, 512):
    print(f"  D={d}:  a_last {a_last(rp_dim=d):.2f}")

print("replay per class:")
for r in (20, 50, 100):
    print(f"  R={r}:  a_last {a_last(replay_per_class=r):.2f}")

print("repulsion:")
for flag in (True, False):
    print(f"  separation {'on ' if flag else 'off'}:  a_last {a_last(use_repulsion=flag):.2f}")

print("classifier:")
for cls in ("elm", "ncm"):
    print(f"  {cls}:  a_last {a_last(classifier=cls):.2f}")
