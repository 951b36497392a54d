"""Regenerates the hand-checked portable model documents under models/."""

import json
import pathlib

import numpy as np

OUT = pathlib.Path(__file__).resolve().parent.parent / "models"


def r(v):
    return float(np.round(v, 6))


def ann(name, box, layers):
    dims = [len(layers[0]["weights"][0])] + [len(l["bias"]) for l in layers]
    return {
        "format_version": "1",
        "kind": "ann",
        "name": name,
        "input_dim": dims[0],
        "output_dim": dims[-1],
        "input_box": box,
        "payload": layers,
    }


def dense(rng, n_in, n_out, act, scale):
    return {
        "weights": [[r(v) for v in row] for row in rng.normal(0.0, scale, (n_out, n_in))],
        "bias": [r(v) for v in rng.normal(0.0, 0.5, n_out)],
        "activation": act,
    }


def gp(name, box, X, y, w, sf2=1.0, sn2=0.0, m0=0.0):
    return {
        "format_version": "1",
        "kind": "gp",
        "name": name,
        "input_dim": len(box),
        "output_dim": 1,
        "input_box": box,
        "payload": {
            "X": [[r(v) for v in row] for row in X],
            "y": [r(v) for v in y],
            "lengthscales": w,
            "signal_variance": sf2,
            "noise_variance": sn2,
            "prior_mean": m0,
        },
    }


def main():
    docs = {}
    docs["identity_1d"] = ann("identity_1d", [[-1.0, 2.0]],
                              [{"weights": [[1.0]], "bias": [0.0], "activation": "identity"}])
    docs["relu_shift"] = ann("relu_shift", [[-1.0, 1.0]],
                             [{"weights": [[1.0]], "bias": [0.0], "activation": "relu"},
                              {"weights": [[1.0]], "bias": [-0.5], "activation": "identity"}])

    rng = np.random.default_rng(11)
    docs["tanh_1_8_1"] = ann("tanh_1_8_1", [[-2.0, 2.0]],
                             [dense(rng, 1, 8, "tanh", 1.5), dense(rng, 8, 1, "identity", 1.0)])
    rng = np.random.default_rng(12)
    docs["tanh_2_4_1"] = ann("tanh_2_4_1", [[-1.5, 1.5], [-1.5, 1.5]],
                             [dense(rng, 2, 4, "tanh", 1.5), dense(rng, 4, 1, "identity", 1.0)])
    rng = np.random.default_rng(13)
    docs["relu_1_6_1"] = ann("relu_1_6_1", [[-2.0, 2.0]],
                             [dense(rng, 1, 6, "relu", 1.5), dense(rng, 6, 1, "identity", 1.0)])
    rng = np.random.default_rng(14)
    docs["relu_2_4_4_1"] = ann("relu_2_4_4_1", [[-1.0, 1.0], [-1.0, 1.0]],
                               [dense(rng, 2, 4, "relu", 1.5), dense(rng, 4, 4, "relu", 1.0),
                                dense(rng, 4, 1, "identity", 1.0)])

    docs["gp_n1"] = gp("gp_n1", [[-3.0, 3.0]], [[0.0]], [1.0], [1.0])
    docs["gp_n1_neg"] = gp("gp_n1_neg", [[-3.0, 3.0]], [[0.0]], [-1.0], [1.0])
    docs["gp_n3"] = gp("gp_n3", [[-2.0, 2.0]], [[-1.2], [0.1], [1.3]], [0.4, -0.8, 0.2], [1.5])
    rng = np.random.default_rng(15)
    X = ((np.arange(10) + 0.5) / 10.0 + rng.uniform(-0.03, 0.03, 10)).reshape(10, 1)
    docs["gp_n10_1d"] = gp("gp_n10_1d", [[0.0, 1.0]], X, np.sin(6.0 * X[:, 0]) + 0.3 * X[:, 0], [4.0],
                           sn2=1e-6)
    rng = np.random.default_rng(16)
    X = rng.uniform(0.0, 1.0, (10, 2))
    y = np.sin(4.0 * X[:, 0]) * np.cos(3.0 * X[:, 1]) + 0.5 * X[:, 1]
    docs["gp_n10_2d"] = gp("gp_n10_2d", [[0.0, 1.0], [0.0, 1.0]], X, y, [3.0, 3.0], sn2=1e-6)

    docs["trees_2d"] = {
        "format_version": "1",
        "kind": "tree_ensemble",
        "name": "trees_2d",
        "input_dim": 2,
        "output_dim": 1,
        "input_box": [[0.0, 1.0], [0.0, 1.0]],
        "payload": [
            [{"split": {"feature": 0, "threshold": 0.5, "left": 1, "right": 2}},
             {"split": {"feature": 1, "threshold": 0.3, "left": 3, "right": 4}},
             {"leaf": {"value": 1.0}},
             {"leaf": {"value": -2.0}},
             {"leaf": {"value": 0.5}}],
            [{"split": {"feature": 1, "threshold": 0.6, "left": 1, "right": 2}},
             {"leaf": {"value": 0.25}},
             {"split": {"feature": 0, "threshold": 0.2, "left": 3, "right": 4}},
             {"leaf": {"value": -1.0}},
             {"leaf": {"value": 2.0}}],
        ],
    }
    docs["crs_2d"] = {
        "format_version": "1",
        "kind": "crs",
        "name": "crs_2d",
        "input_dim": 2,
        "output_dim": 1,
        "input_box": [[0.0, 2.0], [0.0, 1.0]],
        "payload": {"regions": [
            {"A": [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]], "d": [1.0, 0.0, 1.0, 0.0],
             "c": [1.0, -0.5], "e": 0.25},
            {"A": [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]], "d": [2.0, -1.0, 1.0, 0.0],
             "c": [-2.0, 1.0], "e": 3.0},
        ]},
    }
    OUT.mkdir(exist_ok=True)
    for name, doc in docs.items():
        (OUT / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main()
