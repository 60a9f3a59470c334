"""Regenerates the score parity fixtures from default_catalog.json.

Scores are computed with exact rational arithmetic and rounded once.
"""
import json
import random
from fractions import Fraction
from pathlib import Path

HERE = Path(__file__).parent
MIN_NOISE = Fraction(1, 10**10)


def main():
    catalog = json.loads((HERE / "default_catalog.json").read_text())
    rng = random.Random(20240611)
    clients, expected = [], []
    for i in range(50):
        selections = {}
        num = Fraction(0)
        den = Fraction(0)
        for factor in catalog["factors"]:
            option = rng.choice(factor["options"])
            selections[factor["id"]] = option["label"]
            w = Fraction(factor["weight"])
            num += w * Fraction(option["score"])
            den += w
        score = min(max(num / den, Fraction(0)), Fraction(1))
        client_id = f"hospital_{i:02d}"
        clients.append({"client_id": client_id, "selections": selections, "score": float(score)})
        expected.append({"client_id": client_id, "score": float(score),
                         "eta": float((1 - score) + MIN_NOISE)})
    profiles = {"catalog_version": catalog["version"], "clients": clients}
    (HERE / "score_parity_profiles.json").write_text(json.dumps(profiles, indent=2) + "\n")
    (HERE / "score_parity_expected.json").write_text(json.dumps(expected, indent=2) + "\n")


if __name__ == "__main__":
    main()
