"""Build the vendored penguin and hawk dataset files.

The upstream sources are not reachable from this environment, so the
shipped CSVs are seeded synthetic stand-ins drawn from class-conditional
normals calibrated to the published per-species summary statistics of the
originals. The pipeline mirrors the real preparation: complete cases only,
categoricals integer-coded, all features standardized over the full data
before the train/test split, then written as pre-split files.

Run from the repository root:

    python3 scripts/make_vendored_datasets.py
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "src" / "bayesmlp" / "datasets"
SEED = 20250810

# class -> (count, per-sex (mean, sd) of the continuous measurements);
# sex dimorphism carries much of the species separation in the original
PENGUIN_SPECIES = {
    # (female stats, male stats) for bill_length_mm, bill_depth_mm,
    # flipper_length_mm, body_mass_g
    "Adelie": (
        146,
        {
            "female": [(37.26, 2.03), (17.62, 0.94), (187.8, 5.60), (3369.0, 269.0)],
            "male": [(40.39, 2.28), (19.07, 1.02), (192.4, 6.60), (4043.0, 347.0)],
        },
    ),
    "Chinstrap": (
        68,
        {
            "female": [(46.57, 3.11), (17.59, 0.78), (191.7, 5.80), (3527.0, 285.0)],
            "male": [(51.09, 1.56), (19.25, 0.76), (199.9, 5.98), (3939.0, 362.0)],
        },
    ),
    "Gentoo": (
        119,
        {
            "female": [(45.56, 2.05), (14.24, 0.54), (212.7, 3.90), (4680.0, 282.0)],
            "male": [(49.47, 2.67), (15.72, 0.74), (221.5, 5.70), (5485.0, 313.0)],
        },
    ),
}
PENGUIN_ISLANDS = {
    "Adelie": (["Biscoe", "Dream", "Torgersen"], [0.30, 0.38, 0.32]),
    "Chinstrap": (["Dream"], [1.0]),
    "Gentoo": (["Biscoe"], [1.0]),
}
ISLAND_LEVELS = ["Biscoe", "Dream", "Torgersen"]
SEX_LEVELS = ["female", "male"]

HAWK_SPECIES = {
    # wing_mm, weight_g, culmen_mm, hallux_mm, tail_mm
    "CH": (68, [(244.0, 25.0), (420.0, 80.0), (17.3, 1.7), (19.7, 2.1), (200.0, 15.0)]),
    "RT": (570, [(380.5, 28.0), (1090.0, 170.0), (26.9, 2.0), (30.5, 3.2), (222.0, 14.0)]),
    "SS": (253, [(185.0, 20.0), (148.0, 40.0), (11.9, 1.2), (13.5, 1.6), (146.7, 11.0)]),
}
HAWK_AGE_ADULT_PROB = {"CH": 0.42, "RT": 0.38, "SS": 0.34}
AGE_LEVELS = ["I", "A"]


def _standardize(matrix: np.ndarray) -> np.ndarray:
    return (matrix - matrix.mean(axis=0)) / matrix.std(axis=0)


def _write(path: Path, header, rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _split_write(name, feature_names, label_column, matrix, labels, n_train, rng, manifest_extra):
    order = rng.permutation(len(labels))
    matrix, labels = matrix[order], [labels[i] for i in order]
    sets = {"train": slice(0, n_train), "test": slice(n_train, None)}
    for role, sl in sets.items():
        rows = [
            [*(f"{v:.17g}" for v in x), y]
            for x, y in zip(matrix[sl], labels[sl])
        ]
        _write(OUT / f"{name}_{role}.csv", [*feature_names, label_column], rows)
    manifest = {
        "dataset": name,
        "feature_columns": list(feature_names),
        "label_column": label_column,
        "standardized": True,
        **manifest_extra,
    }
    (OUT / f"{name}_manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"{name}: {n_train} train / {len(labels) - n_train} test rows")


def make_penguins(rng: np.random.Generator):
    features, labels = [], []
    for species, (count, by_sex) in PENGUIN_SPECIES.items():
        islands, island_probs = PENGUIN_ISLANDS[species]
        for _ in range(count):
            sex_name = rng.choice(SEX_LEVELS)
            cont = [rng.normal(mu, sd) for mu, sd in by_sex[sex_name]]
            sex = SEX_LEVELS.index(sex_name)
            island = ISLAND_LEVELS.index(rng.choice(islands, p=island_probs))
            features.append([*cont, float(sex), float(island)])
            labels.append(species)
    matrix = _standardize(np.array(features))
    _split_write(
        "penguins",
        ["bill_length", "bill_depth", "flipper_length", "body_mass", "sex", "island"],
        "species",
        matrix,
        labels,
        223,
        rng,
        {
            "label_mapping": {"Adelie": 1, "Chinstrap": 2, "Gentoo": 3},
            "provenance": {
                "note": "seeded synthetic stand-in; upstream source unreachable "
                "from the build environment",
                "seed": SEED,
                "raw_encodings": {
                    "sex": {"kind": "categorical", "levels": SEX_LEVELS},
                    "island": {"kind": "categorical", "levels": ISLAND_LEVELS},
                },
            },
        },
    )


def make_hawks(rng: np.random.Generator):
    features, labels = [], []
    for species, (count, stats) in HAWK_SPECIES.items():
        adult_p = HAWK_AGE_ADULT_PROB[species]
        for _ in range(count):
            cont = [rng.normal(mu, sd) for mu, sd in stats]
            age = float(rng.uniform() < adult_p)
            features.append([age, *cont])
            labels.append(species)
    matrix = _standardize(np.array(features))
    _split_write(
        "hawks",
        ["age", "wing", "weight", "culmen", "hallux", "tail"],
        "species",
        matrix,
        labels,
        596,
        rng,
        {
            "label_mapping": {"CH": 1, "RT": 2, "SS": 3},
            "provenance": {
                "note": "seeded synthetic stand-in; upstream source unreachable "
                "from the build environment",
                "seed": SEED,
                "raw_encodings": {"age": {"kind": "categorical", "levels": AGE_LEVELS}},
            },
        },
    )


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)
    make_penguins(rng)
    make_hawks(rng)
