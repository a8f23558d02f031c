import hashlib
import json
import math

import pytest


def canonical(config: dict) -> tuple:
    text = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return text, hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_view(run_dir, view, config, header, rows, results=None):
    """Write one view's CSV (and JSON when results is given) the way the
    producer does: two comment lines, then the table."""
    text, sha = canonical(config)
    lines = ["# config %s" % text, "# config_sha256 %s" % sha,
             ",".join(header)]
    lines += [",".join(str(c) for c in row) for row in rows]
    (run_dir / (view + ".csv")).write_text("\n".join(lines) + "\n")
    if results is not None:
        doc = {"config": config, "config_sha256": sha, "results": results}
        (run_dir / (view + ".json")).write_text(
            json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return sha


@pytest.fixture
def run_dir(tmp_path):
    d = tmp_path / "run"
    d.mkdir()
    base = {"model": "pierrehumbert", "T": 10.0, "seed": 3}

    rows = [[10.0, m, 40, 1.5 + 0.01 * m, 0.05, 1.4 + 0.01 * m,
             1.6 + 0.01 * m, 3] for m in (10, 20, 30, 40)]
    write_view(d, "lyapunov", dict(base, subcommand="lyapunov"),
               ("T", "m", "n_samples", "lambda1", "stderr", "ci_lo", "ci_hi",
                "seed"), rows,
               results={"lambda1": 1.54, "stderr": 0.05, "ci_lo": 1.44,
                        "ci_hi": 1.64})

    rows = [[m, 1.1 * 0.4 ** m, 0.01] for m in range(8)]
    write_view(d, "correlations", dict(base, subcommand="correlations"),
               ("m", "c_m", "stderr"), rows,
               results={"lambda_hat": 0.4, "r2": 0.99, "window_len": 6})

    rows = [[0, 2.2, 0.0, ""], [1, 1.1, 25.1, ""], [2, 0.55, 50.2, 0.7],
            [3, 0.27, 75.3, 0.9]]
    write_view(d, "mix", dict(base, subcommand="mix"),
               ("m", "mix_scale", "grad_norm_l1_cum", "eta_hat_running"),
               rows,
               results={"slope": -0.7, "r2": 0.95, "eta_hat": 0.9,
                        "xi_hat": 0.04, "no_mixing": False})

    rows = []
    for cq, cp in ((0.0, 0.0), (0.0, math.pi)):
        for k in range(3):
            r = 0.1 * 2.0 ** (-k)
            for j in range(4):
                ang = j * math.pi / 2.0
                rows.append([cq, cp, r, ang, cq + r * math.cos(ang),
                             cp + r * math.sin(ang), 5.0,
                             0.8 + 0.02 * j, 0.01, 500, 0])
    write_view(d, "drift", dict(base, subcommand="drift"),
               ("center_q", "center_p", "radius", "angle", "q", "p",
                "v_start", "ratio", "stderr", "n", "n_clipped"), rows,
               results={"beta": 0.2, "K": 1.5708, "T_star": 21.0,
                        "empirical_alpha": 0.86, "lambda_hat": None,
                        "r2": None})
    return d
