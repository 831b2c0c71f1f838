#!/usr/bin/env python3
"""Regenerate the bundled synthetic fixtures (fixtures/).

Thirty episodes of an invented show, scripts drawn from three topic word
pools so the topic model has real structure to find, plus metadata whose
ratings carry a weak signal from the topic mixture. Deterministic: rerunning
this script reproduces the checked-in files byte for byte.
"""

import csv
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

ACTION = [
    "harbor", "smuggler", "dock", "badge", "chase", "warehouse", "siren",
    "detective", "stakeout", "informant", "arrest", "pursuit", "cargo",
    "patrol", "evidence", "suspect", "alley", "rooftop", "ambush", "holster",
]
FAMILY = [
    "dinner", "letter", "sister", "promise", "memory", "garden", "birthday",
    "apology", "photograph", "kitchen", "holiday", "reunion", "forgiveness",
    "heirloom", "porch", "mother", "brother", "recipe", "blanket", "lullaby",
]
ROMANCE = [
    "dance", "wedding", "kiss", "flower", "moonlight", "serenade", "proposal",
    "sweetheart", "devotion", "embrace", "courtship", "ballad", "perfume",
    "valentine", "longing", "whisper", "darling", "romance", "candle", "vow",
]
POOLS = [ACTION, FAMILY, ROMANCE]

# character names and verbs shared by every episode; inflected forms exercise
# the lemma rules, and the stopword-ish fillers exercise removal
SHARED = [
    "mara", "quinn", "doyle", "vesper", "protect", "secret", "truth", "night",
    "city", "friend", "trust", "believe",
]
INFLECTED = ["working", "worked", "works", "families", "running", "stopped", "chasing"]
FILLER = "the and you to of it we oh is that was in for on".split()

DIRECTORS = [
    "Ann Roy", "Ben Ito", "Cara Voss", "Dev Malik",
    "Eva Lund", "Finn Hart", "Gia Chen", "Hal Ortiz",
]

TITLE_WORDS = [
    "Undertow", "Driftwood", "Breakwater", "Crosswind", "Ember", "Falling Tide",
    "Gull's Rest", "Half Light", "Ironside", "Jetty", "Keelhaul", "Landfall",
    "Mooring", "Northward", "Old Wounds", "Pierside", "Quayside", "Rip Current",
    "Saltmarsh", "Tidewater", "Undercurrent", "Vantage", "Watchtower", "Anchor",
    "Ballast", "Castaway", "Deadrise", "Ebb", "Flotsam", "Gale",
]

BOILERPLATE = "PREVIOUSLY ON HARBOR CITY: the story so far, as told each week.\n\n"


def make_script(rng, mix):
    words = []
    for _ in range(140):
        pool = POOLS[rng.choice(3, p=mix)]
        choice = rng.random()
        if choice < 0.55:
            words.append(pool[rng.integers(len(pool))])
        elif choice < 0.75:
            words.append(SHARED[rng.integers(len(SHARED))])
        elif choice < 0.85:
            words.append(INFLECTED[rng.integers(len(INFLECTED))])
        else:
            words.append(FILLER[rng.integers(len(FILLER))])
    lines = [" ".join(words[i: i + 10]).capitalize() + "." for i in range(0, len(words), 10)]
    return BOILERPLATE + "\n".join(lines) + "\n"


def main():
    rng = np.random.default_rng(20240214)
    (FIXTURES / "scripts").mkdir(parents=True, exist_ok=True)
    (FIXTURES / "html").mkdir(parents=True, exist_ok=True)

    rows = []
    html_rows = {1: [], 2: []}
    for i in range(30):
        season = 1 if i < 15 else 2
        episode = (i % 15) + 1
        dominant = rng.integers(3)
        mix = np.full(3, 0.15)
        mix[dominant] = 0.7
        title = TITLE_WORDS[i]
        director = DIRECTORS[rng.integers(len(DIRECTORS))]
        viewers = float(np.round(rng.uniform(0.7, 4.1), 2))
        action_share = mix[0]
        romance_share = mix[2]
        rating = (
            7.6
            + 1.1 * (action_share - 1 / 3)
            - 0.8 * (romance_share - 1 / 3)
            + 0.15 * (viewers - 2.4)
            + rng.normal(0, 0.25)
        )
        rating = float(np.clip(np.round(rating, 1), 5.5, 9.7))
        reviews = int(rng.integers(200, 3000))
        episode_id = f"S{season:02d}E{episode:02d}"
        rows.append([episode_id, season, episode, title, director, viewers, rating, reviews])
        html_rows[season].append((episode, title, director, viewers))

        script = make_script(rng, mix)
        (FIXTURES / "scripts" / f"s{season:02d}e{episode:02d}.txt").write_text(
            script, encoding="utf-8"
        )

    with open(FIXTURES / "metadata.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "episode_id", "season", "episode", "title", "director",
            "viewers_millions", "imdb_rating", "review_count",
        ])
        writer.writerows(rows)

    for season, entries in html_rows.items():
        cells = "\n".join(
            f'<tr><td>{ep}</td><td>"{title}"</td><td>{director}</td><td>{viewers}[{ep}]</td></tr>'
            for ep, title, director, viewers in entries
        )
        page = (
            "<html><body>\n<h2>Season {s}</h2>\n<table>\n"
            "<tr><th>No.</th><th>Title</th><th>Directed by</th>"
            "<th>U.S. viewers (millions)</th></tr>\n{cells}\n</table>\n</body></html>\n"
        ).format(s=season, cells=cells)
        (FIXTURES / "html" / f"season{season}.html").write_text(page, encoding="utf-8")

    (FIXTURES / "config.ini").write_text(
        "# Synthetic fixture run: small enough to finish a full pipeline in seconds.\n"
        "[paths]\n"
        "metadata_csv = metadata.csv\n"
        "scripts_dir = scripts\n"
        "html_dir = html\n"
        "out_dir = out\n"
        "\n"
        "[textprep]\n"
        "boilerplate_markers = PREVIOUSLY ON\n"
        "extra_stopwords = harborcity\n"
        "\n"
        "[lda]\n"
        "num_topics = 3\n"
        "iterations = 240\n"
        "burn_in = 120\n"
        "sample_lag = 10\n"
        "\n"
        "[split]\n"
        "train_fraction = 0.8\n"
        "mode = random\n"
        "\n"
        "[cv]\n"
        "folds = 10\n"
        "\n"
        "[knn]\n"
        "k_min = 1\n"
        "k_max = 16\n"
        "\n"
        "[boost]\n"
        "learning_rates = 0.1, 0.2\n"
        "depths = 2, 3\n"
        "l2_leaf_regs = 1, 7\n"
        "num_iterations = 60\n"
        "\n"
        "[run]\n"
        "seed = 42\n",
        encoding="utf-8",
    )
    print(f"wrote fixtures for {len(rows)} episodes under {FIXTURES}")


if __name__ == "__main__":
    main()
