#!/usr/bin/env python3
"""Generate the bundled sample dataset (field-station log corpus).

Writes four files under crates/wis-core/data/:

  sample_corpus.jsonl    {"text": ...} documents for vocab/LM/IDF building
  sample_labeling.jsonl  {"text": ...} single-sentence docs for label building
  sample_prompts.jsonl   {"prompt": ..., "reference": ...} benchmark records
  synonyms.json          token -> [token, ...] map for the rule paraphraser

The corpus is synthetic on purpose and its statistics are engineered for the
desk-scale trade-off experiments:

* Sentences come from templates whose slots draw from Zipf-weighted pools,
  but the Zipf *ranking* of each pool is rotated by the nearest preceding
  slot word. A trigram model trained on this corpus therefore has a
  context-dependent argmax at every slot (generations from different
  prompts keep diverging instead of collapsing onto one attractor), and
  the count ratios between the top continuation and its alternatives span
  a dense spectrum, so logit-boost sweeps trace a smooth detection/quality
  curve rather than a step function.
* Slot classes are tiered by pool size and usage: determiner/preposition
  slots (stopwords, present in nearly every document, low IDF), small
  common pools (mid IDF), and large content pools (high IDF). IDF-driven
  importance scoring then has a real signal to separate.
* No template places two literal words adjacently, so every trigram
  context at a slot contains at least one variable token.

Single-sentence labeling docs keep token occurrences unique so that
paraphrase-survival labels separate by word class instead of saturating.
Everything is driven by one fixed seed; the committed files are
reproducible byte-for-byte.
"""

import json
import random
import zlib
from pathlib import Path

SEED = 20240817
N_DOCS = 500
N_LABELING = 1500
N_PROMPTS = 250

OUT_DIR = Path(__file__).resolve().parent.parent / "crates" / "wis-core" / "data"


def zipf_weights(n: int, s: float) -> list[float]:
    w = [1.0 / (i + 1) ** s for i in range(n)]
    total = sum(w)
    return [x / total for x in w]


class Pool:
    """Word pool with a Zipf profile whose ranking rotates with context."""

    def __init__(self, words: list[str], s: float = 1.25):
        assert len(words) == len(set(words)), f"duplicate word in pool {words}"
        self.words = words
        self.weights = zipf_weights(len(words), s)

    def draw(self, rng: random.Random, key: str) -> str:
        offset = zlib.crc32(key.encode()) % len(self.words)
        rotated = self.words[offset:] + self.words[:offset]
        return rng.choices(rotated, weights=self.weights, k=1)[0]


POOLS = {
    # Large content pools: rare per-word, high IDF.
    "station": Pool([
        "north", "ridge", "south", "valley", "east", "delta", "west",
        "harbor", "summit", "plateau", "basin", "lagoon", "mesa", "canyon",
        "glacier", "estuary", "headland", "foothill", "grove", "quarry",
        "saddle", "terrace", "overlook", "crossing", "junction", "moraine",
    ]),
    "sensor": Pool([
        "humidity", "pressure", "temperature", "rainfall", "windspeed",
        "turbidity", "salinity", "visibility", "ozone", "radiance",
        "moisture", "particulate", "irradiance", "conductivity", "albedo",
        "runoff", "snowpack", "groundwater", "evaporation", "dewpoint",
        "cloudcover", "sediment", "chlorophyll", "methane",
    ]),
    "adj": Pool([
        "sharp", "gradual", "steady", "sudden", "modest", "marked",
        "slight", "abrupt", "steep", "faint", "brisk", "mild", "gentle",
        "even", "pronounced", "subtle", "jagged", "smooth", "erratic",
        "persistent", "fleeting", "uneven", "measurable", "notable",
    ]),
    "cond": Pool([
        "stable", "quiet", "unsettled", "turbulent", "patchy", "hazy",
        "overcast", "breezy", "humid", "parched", "frosty", "blustery",
        "placid", "muggy", "crisp", "calm",
    ]),
    "place_noun": Pool([
        "flats", "shelf", "bend", "marsh", "channel", "slope", "hollow",
        "meadow", "shoal", "bluff", "gully", "spur", "inlet", "clearing",
        "scarp", "bog", "dune", "tarn", "escarpment", "ravine",
    ]),
    "event": Pool([
        "storm", "front", "squall", "drizzle", "gust", "haze", "fog",
        "downpour", "flurry", "thaw", "freeze", "heatwave", "shower",
        "gale", "mist", "windstorm",
    ]),
    # Medium pools.
    "vrec": Pool([
        "recorded", "logged", "reported", "measured", "registered",
        "noted", "flagged", "captured", "charted", "tracked", "posted",
        "tabulated",
    ]),
    "vconf": Pool([
        "confirmed", "observed", "verified", "described", "assessed",
        "reviewed", "documented", "corroborated", "examined", "inspected",
    ]),
    "place_adj": Pool([
        "eastern", "western", "northern", "southern", "upper", "lower",
        "outer", "inner", "central", "coastal", "inland", "windward",
    ]),
    # Small common pools: shared across templates, mid-to-low IDF.
    "post": Pool(["outpost", "camp", "tower", "cabin", "relay", "berth"]),
    "trend": Pool([
        "rise", "drop", "shift", "swing", "climb", "dip", "surge", "slide",
    ]),
    "daypart": Pool([
        "morning", "evening", "night", "noon", "dawn", "dusk", "midday",
        "overnight",
    ]),
    "watch": Pool([
        "watch", "round", "sweep", "survey", "patrol", "check", "rotation",
        "pass",
    ]),
    "gauge": Pool(["gauge", "array", "probe", "rig", "mast", "buoy"]),
    "ordinal": Pool([
        "first", "second", "third", "fourth", "fifth", "final", "earlier",
        "later",
    ]),
    "unit": Pool([
        "field", "forward", "remote", "auxiliary", "mobile", "seasonal",
    ]),
    "crew": Pool(["crew", "team", "party", "squad", "detail", "brigade"]),
    "skies": Pool(["skies", "winds", "currents", "swells", "airflow", "seas"]),
    "readings": Pool([
        "readings", "values", "levels", "figures", "totals", "averages",
    ]),
    "vstay": Pool([
        "stayed", "remained", "held", "settled", "hovered", "lingered",
        "leveled", "stabilized",
    ]),
    "vdrift": Pool([
        "drifted", "crept", "edged", "inched", "ticked", "eased",
        "wandered", "slipped",
    ]),
    "direction": Pool([
        "upward", "downward", "higher", "lower", "sideways", "seaward",
    ]),
    "observers": Pool([
        "observers", "rangers", "surveyors", "technicians", "wardens",
        "scouts",
    ]),
    "spell": Pool(["spell", "stretch", "interval", "period", "bout", "phase"]),
    # Function-word slots: stopwords, highest document frequency.
    "det": Pool(["the", "a", "this", "each"], s=1.3),
    "prep": Pool(["during", "after", "before", "through"], s=1.3),
    "prep2": Pool(["over", "under", "between", "about"], s=1.3),
    "prep3": Pool(["from", "at", "on", "by"], s=1.3),
    "prep4": Pool(["with", "into", "of", "to"], s=1.3),
}

# Templates: {name} is a slot, bare words are literals. No two literals are
# ever adjacent, so the trigram context of every slot carries at least one
# variable token (the generator rotates on it; see draw_slot).
TEMPLATES = [
    "{det} {station} {post} {vrec} {det} {adj} {trend} in {sensor} {prep} {det} {daypart} {watch}",
    "{det} {sensor} {gauge} {vrec} {det} {adj} {trend} {prep2} {det} {ordinal} {watch}",
    "{det} {unit} {crew} {vconf} {cond} {skies} {prep} {det} {place_adj} {place_noun}",
    "{readings} {prep3} {det} {place_adj} {place_noun} {vstay} {cond} {prep2} {det} {daypart} {event}",
    "{det} {sensor} {gauge} {vdrift} {direction} {prep} {det} {daypart} {watch}",
    "{det} {adj} {trend} in {sensor} was {vrec} {prep4} {det} {station} {post}",
    "{det} {ordinal} {watch} brought {cond} {skies} {prep} {det} {adj} {trend} in {sensor}",
    "{observers} {prep3} {det} {station} {post} {vconf} {det} {cond} {spell} {prep2} {det} {event}",
]
TEMPLATE_WEIGHTS = zipf_weights(len(TEMPLATES), 0.7)

# Synonym groups. Members map to the other members of their group; all are
# pool words, so every synonym is guaranteed in-vocabulary. Determiner and
# preposition pools are left out (the paraphraser's dropout rule covers
# stopwords).
SYNONYM_GROUPS = [
    ["sharp", "steep", "abrupt"],
    ["gradual", "gentle"],
    ["steady", "even", "persistent"],
    ["modest", "slight", "subtle"],
    ["marked", "pronounced", "notable"],
    ["faint", "fleeting"],
    ["rise", "climb"],
    ["drop", "dip", "slide"],
    ["surge", "swing"],
    ["logged", "registered", "tabulated"],
    ["reported", "posted"],
    ["noted", "flagged"],
    ["charted", "tracked"],
    ["confirmed", "verified", "corroborated"],
    ["observed", "documented"],
    ["assessed", "reviewed", "examined"],
    ["stayed", "remained"],
    ["held", "settled"],
    ["hovered", "lingered"],
    ["leveled", "stabilized"],
    ["drifted", "wandered"],
    ["crept", "inched", "slipped"],
    ["edged", "eased"],
    ["quiet", "placid"],
    ["turbulent", "blustery"],
    ["hazy", "overcast"],
    ["humid", "muggy"],
    ["storm", "gale", "windstorm"],
    ["drizzle", "shower", "mist"],
    ["downpour", "squall"],
    ["crew", "team"],
    ["party", "squad"],
    ["detail", "brigade"],
    ["observers", "scouts"],
    ["rangers", "wardens"],
    ["surveyors", "technicians"],
    ["spell", "stretch"],
    ["interval", "period"],
    ["readings", "values", "figures"],
    ["levels", "totals"],
    ["sweep", "survey"],
    ["round", "rotation"],
    ["check", "patrol"],
    ["flats", "shoal"],
    ["bend", "gully"],
    ["marsh", "bog"],
    ["hollow", "clearing"],
    ["bluff", "scarp", "escarpment"],
    ["moisture", "dewpoint"],
    ["windspeed", "airflow"],
]

LITERALS = {w for t in TEMPLATES for w in t.split() if not w.startswith("{")}


class SentenceGen:
    """Emits template sentences, rotating each slot's pool by the nearest
    preceding variable (non-literal) token."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.last_variable = "bos"

    def sentence(self) -> list[str]:
        t = self.rng.choices(TEMPLATES, weights=TEMPLATE_WEIGHTS, k=1)[0]
        out = []
        for word in t.split():
            if word.startswith("{"):
                filled = POOLS[word[1:-1]].draw(self.rng, self.last_variable)
                out.append(filled)
                self.last_variable = filled
            else:
                out.append(word)
        return out

    def doc(self, n_sentences: int) -> str:
        words: list[str] = []
        for _ in range(n_sentences):
            words.extend(self.sentence())
        return " ".join(words)


def main() -> None:
    rng = random.Random(SEED)
    OUT_DIR.mkdir(parents=True, exist_ok=True)

    gen = SentenceGen(rng)
    docs = [gen.doc(rng.randint(4, 7)) for _ in range(N_DOCS)]
    with open(OUT_DIR / "sample_corpus.jsonl", "w") as f:
        for text in docs:
            f.write(json.dumps({"text": text}) + "\n")

    labeling = [gen.doc(1) for _ in range(N_LABELING)]
    with open(OUT_DIR / "sample_labeling.jsonl", "w") as f:
        for text in labeling:
            f.write(json.dumps({"text": text}) + "\n")

    prompts = []
    for _ in range(N_PROMPTS):
        words = gen.doc(rng.randint(5, 7)).split()
        cut = rng.randint(4, 6)
        prompts.append({
            "prompt": " ".join(words[:cut]),
            "reference": " ".join(words[cut:]),
        })
    with open(OUT_DIR / "sample_prompts.jsonl", "w") as f:
        for rec in prompts:
            f.write(json.dumps(rec) + "\n")

    pool_words = {w for p in POOLS.values() for w in p.words}
    synonyms: dict[str, list[str]] = {}
    for group in SYNONYM_GROUPS:
        for w in group:
            assert w in pool_words, f"synonym {w!r} not in any pool"
            assert w not in synonyms, f"word {w!r} in two synonym groups"
            synonyms[w] = [x for x in group if x != w]
    with open(OUT_DIR / "synonyms.json", "w") as f:
        json.dump(synonyms, f, indent=2, sort_keys=True)
        f.write("\n")

    n_tokens = sum(len(d.split()) for d in docs)
    vocab = {w for d in docs for w in d.split()}
    print(f"{N_DOCS} docs, {n_tokens} tokens, {len(vocab)} word types")
    print(f"{N_LABELING} labeling sentences, {N_PROMPTS} prompt records, "
          f"{len(synonyms)} synonym entries")


if __name__ == "__main__":
    main()
