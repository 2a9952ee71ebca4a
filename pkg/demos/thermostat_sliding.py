"""Thermostat demo: chattering collapses into a slide along the setpoint.

The tree is Seq[Fal[above_setpoint?, heat], cool].  Below the setpoint the
check fails and the heater drives the temperature up; above it the check
succeeds and the cooler drives it down.  Both vector fields point at the
surface x = T, so once the state reaches it the executor detects the
chatter and switches to the blended sliding field, which pins the
temperature to the setpoint exactly.
"""

import math

from ctbt import IntegratorConfig, dsl, integrate

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None


def describe(traj, label):
    print(f"--- {label} ---")
    print(f"start x = {traj.samples[0].x[0]:.2f}, "
          f"end x = {traj.samples[-1].x[0]:.6f} at t = {traj.duration:.2f}")
    for e in traj.events:
        if e.kind == "SlideEnter":
            print(f"  sliding starts at t = {e.t:.3f} "
                  f"between leaves {e.info['pair']}")
    switches = traj.events_of("Switch")
    print(f"  {len(switches)} discrete switches before the slide")
    t_slide = traj.events_of("SlideEnter")[0].t
    worst = max(abs(s.x[0] - 21.0) for s in traj.samples
                if s.t >= t_slide + 0.05)
    print(f"  after settling, |x - 21| stays below {worst:.2e}")


def main():
    model = dsl.load(dsl.resolve_model_path("thermostat.btm"))
    cfg = IntegratorConfig(dt=0.01, t_end=6.0)

    cold = integrate(model.plant, model.bt, [19.0], cfg, model_name="thermostat")
    hot = integrate(model.plant, model.bt, [24.0], cfg, model_name="thermostat")
    describe(cold, "starting 2 degrees below")
    describe(hot, "starting 3 degrees above")

    if plt is not None:
        fig, ax = plt.subplots(figsize=(7, 4))
        for traj, label in ((cold, "from 19"), (hot, "from 24")):
            ax.plot([s.t for s in traj.samples],
                    [s.x[0] for s in traj.samples], label=label)
        ax.axhline(21.0, color="k", lw=0.5, ls="--")
        ax.set_xlabel("t")
        ax.set_ylabel("temperature")
        ax.legend()
        fig.tight_layout()
        fig.savefig("thermostat_sliding.png", dpi=120)
        print("wrote thermostat_sliding.png")


if __name__ == "__main__":
    main()
