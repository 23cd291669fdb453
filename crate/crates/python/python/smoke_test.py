"""Quick check that the extension imports and agrees with known values."""

import math

import energy_capture as ec


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main():
    close(ec.characteristic_value("a", 1, 1.0), 1.85910807, 1e-7)
    close(ec.characteristic_value("b", 1, 0.1), 0.9, 5e-3)
    try:
        ec.characteristic_value("b", 0, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("b0 accepted")

    m = ec.monodromy(0.5, 2.0)
    close(m[0][0] * m[1][1] - m[0][1] * m[1][0], 1.0, 1e-9)
    assert ec.classify(0.05, 1.0)[0] == "unstable"
    assert ec.classify(0.0, 0.5)[0] == "stable"
    assert ec.growth_rate(0.2, 1.0) > ec.growth_rate(0.2, 4.0) > 1.0

    system, grid, x0_max = ec.preset("experiment1")
    assert len(grid) == 30 and x0_max == 3.5
    close(system.lambda1 ** 2, 0.1, 1e-12)
    z2 = ec.activating_intervals(system, 2, x0_max)
    close(z2[0].x0_range[0], 0.36, 0.02)
    close(ec.first_stability_threshold(system), 0.066, 0.004)

    traj = ec.simulate(system.with_x0(0.4), t_end=400.0)
    assert traj.max_relative_drift < 1e-6
    t = traj.column("t")
    y = traj.column("y")
    close(y[0], 0.4, 0.0)
    close(t[-1], 400.0, 1e-9)
    verdict = traj.detect()
    assert verdict.capture == "z2", verdict
    close(verdict.max_amplitude[1], 0.16, 0.04)

    flat = ec.ModeSystem(1.0, math.sqrt(0.1), math.sqrt(0.9), epsilon=0.0, x0=1.0)
    quiet = ec.simulate(flat, t_end=50.0)
    assert max(abs(v) for v in quiet.column("z1")) == 0.0

    rows = ec.sweep_preset("experiment1", t_end=400.0)
    assert all(r[3] in ("agree", "excused") for r in rows), rows
    print(f"smoke test passed: {len(rows)} sweep rows, {len(traj)} samples")


if __name__ == "__main__":
    main()
