#!/usr/bin/env python3
"""Build a synthetic 165-episode dataset with replica-shaped statistics.

A dry-run stand-in for the conditional replica checks: ratings span
5.5..9.7 with std near 0.64, most mass in [8.0, 9.0), a weak dependence on
the script's topic mixture and viewers (correlations well under 0.45), 51
distinct directors, and scripts drawn from three topic pools. Usage:

    python3 tools/make_pseudo_replica.py /tmp/replica
    ARROW_REPLICA_DIR=/tmp/replica pytest tests/test_acceptance.py -v -s
"""

import csv
import sys
from pathlib import Path

import numpy as np

POOL_A = [f"strike{i}" for i in range(120)]
POOL_B = [f"kin{i}" for i in range(120)]
POOL_C = [f"heart{i}" for i in range(120)]
SHARED = [f"city{i}" for i in range(200)]

SEASON_SIZES = [23, 23, 23, 23, 23, 23, 17, 10]  # 165 episodes
N = sum(SEASON_SIZES)


def tuned_ratings(rng, mixes, viewers):
    """Weak topic/viewer signal plus noise and a shallow low tail.

    Scans the noise scale until the sample std lands near 0.64 with most
    of the mass in [8.0, 9.0); the 5.5 and 9.7 extremes are planted.
    """
    signal = 0.55 * (mixes[:, 0] - 1 / 3) - 0.35 * (mixes[:, 2] - 1 / 3)
    signal = signal + 0.10 * (viewers - viewers.mean())
    for scale in np.arange(0.35, 0.65, 0.01):
        values = 8.45 + signal + rng.standard_normal(N) * scale
        tail = rng.random(N) < 0.05
        values[tail] -= rng.uniform(0.4, 1.4, tail.sum())
        values = np.clip(np.round(values, 1), 6.0, 9.6)
        values[0] = 5.5
        values[1] = 9.7
        std = values.std(ddof=1)
        frac = np.mean((values >= 8.0) & (values < 9.0))
        if abs(std - 0.64) <= 0.04 and frac > 0.52:
            return values
    raise SystemExit("could not tune ratings; adjust the generator")


def tuned_viewers(rng):
    for scale in np.arange(0.6, 1.2, 0.02):
        values = np.exp(rng.normal(0.55, scale * 0.45, N))
        values = np.clip(np.round(values, 2), 0.63, 4.13)
        values[0] = 0.62
        values[1] = 4.14
        if abs(values.std(ddof=1) - 0.86) <= 0.04:
            return values
    raise SystemExit("could not tune viewers; adjust the generator")


def main():
    target = Path(sys.argv[1] if len(sys.argv) > 1 else "/tmp/pseudo_replica")
    (target / "scripts").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(991)

    mixes = rng.dirichlet((1.2, 1.2, 1.2), size=N)
    viewers = tuned_viewers(rng)
    ratings = tuned_ratings(rng, mixes, viewers)
    directors = [f"Director {i:02d}" for i in range(51)]

    rows = []
    index = 0
    for season, size in enumerate(SEASON_SIZES, start=1):
        for episode in range(1, size + 1):
            episode_id = f"S{season:02d}E{episode:02d}"
            director = directors[index % 51] if index < 102 else directors[rng.integers(51)]
            reviews = int(rng.integers(150, 4000))
            rows.append([
                episode_id, season, episode, f"Episode {index:03d}", director,
                viewers[index], ratings[index], reviews,
            ])

            mix = mixes[index]
            words = []
            for _ in range(1200):
                u = rng.random()
                if u < 0.25:
                    words.append(SHARED[rng.integers(len(SHARED))])
                else:
                    pool = (POOL_A, POOL_B, POOL_C)[rng.choice(3, p=mix)]
                    words.append(pool[rng.integers(len(pool))])
            text = "PREVIOUSLY ON THE SERIES: recap lines here.\n\n" + " ".join(words) + "\n"
            (target / "scripts" / f"s{season:02d}e{episode:02d}.txt").write_text(
                text, encoding="utf-8"
            )
            index += 1

    with open(target / "metadata.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "episode_id", "season", "episode", "title", "director",
            "viewers_millions", "imdb_rating", "review_count",
        ])
        writer.writerows(rows)
    print(f"wrote 165-episode pseudo replica under {target}")
    print(f"  rating std {ratings.std(ddof=1):.3f}, "
          f"in [8,9): {np.mean((ratings >= 8) & (ratings < 9)):.0%}, "
          f"viewers std {viewers.std(ddof=1):.3f}")


if __name__ == "__main__":
    main()
