#!/usr/bin/env python3
"""Regenerate the bundled sample corpus and its answer key.

Writes data/sample.jsonl (1000 lines, 10 of them same-user reposts) and
data/sample_manifest.json (counts after deduplication). Sentiment, keywords,
volume spikes and locations are planted so the pipeline output can be checked
exactly.
"""
import datetime as dt
import json
import random
import re
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"

SEED = 2022
START = dt.date(2022, 1, 1)
END = dt.date(2022, 3, 5)
SPIKES = {dt.date(2022, 1, 24): 70, dt.date(2022, 2, 24): 110}
AFTERMATH = {dt.date(2022, 2, 25): 45, dt.date(2022, 2, 26): 25}
UNIQUE = 990
DUPLICATES = 10
SENTIMENT_COUNTS = {"POS": 87, "NEU": 412, "NEG": 491}
KEYWORD_RATES = {"putin": 0.30, "biden": 0.15, "nato": 0.12, "zelensky": 0.10, "poland": 0.06}

POS = [
    "we stand with ukraine and send love to every family",
    "thanks to all the nations that support ukraine",
    "peace is the only way forward, hope for a safe future",
    "so proud of the brave people defending their homes",
    "grateful for the volunteers helping refugees at the border",
    "solidarity and unity across europe gives hope",
    "huge thanks to the doctors and nurses, true heroes",
    "welcome to every refugee family, stay safe",
]
NEU = [
    "talks between ministers continue in geneva next week",
    "russian troops are reported near the border",
    "analysts discuss the reasons behind the conflict",
    "the meeting on security guarantees ended today",
    "officials released a statement on the situation in the east",
    "diplomats met to discuss the eastern region",
    "live updates on the sanctions package announced this morning",
    "russia will not invade ukraine unless provoked",
    "gas prices and grain exports are in the headlines",
    "parliament votes on the defence budget tomorrow",
]
NEG = [
    "fear of nuclear war is growing, this is terrible",
    "the crisis is dangerous and people are scared",
    "oil prices surge and markets slide into chaos",
    "shame on leaders who ignore the threat",
    "families are afraid of the bombs tonight",
    "the sanctions debate turns angry as the threat grows",
    "civilian deaths reported, a tragedy for everyone",
    "so worried about friends in the east, awful news",
]
SPIKE_EXTRA = {
    dt.date(2022, 1, 24): ["troops on standby", "standby orders for thousands of troops"],
    dt.date(2022, 2, 24): ["the invasion started at dawn", "invasion began overnight"],
}
FILLER = ["today", "again", "update", "thread", "right now", "tonight", "latest", "breaking", "morning", "evening"]
POS_TAGS = ["#StandWithUkraine", "#PeaceForUkraine", "#SlavaUkraini"]
NEG_TAGS = ["#NoWar", "#StopWar"]
NEU_TAGS = ["#Ukraine", "#Russia", "#news"]
LOCATIONS = [
    ("Kyiv, Ukraine", "UA"), ("Lviv", "UA"), ("London, UK", "GB"), ("Manchester, England", "GB"),
    ("Austin, TX, USA", "US"), ("New York, NY", "US"), ("California", "US"), ("Berlin, Germany", "DE"),
    ("Mumbai, India", "IN"), ("New Delhi", "IN"), ("Moscow, Russia", "RU"), ("Paris, France", "FR"),
    ("Warsaw, Poland", "PL"), ("Toronto, Canada", "CA"), ("Sydney, Australia", "AU"),
    ("somewhere over the rainbow", "UNRESOLVED"), ("Earth", "UNRESOLVED"), ("worldwide", "UNRESOLVED"),
    ("🌍", "UNRESOLVED"), (None, "UNRESOLVED"), (None, "UNRESOLVED"), (None, "UNRESOLVED"),
]


def normalize(text):
    s = text.lower()
    s = re.sub(r"(^|(?<=[^0-9a-z\x80-\U0010ffff]))(https?://|www\.)\S*", " ", s)
    s = re.sub(r"@[0-9a-z_]+", " <user> ", s)
    s = re.sub(r"[^0-9a-z\x80-\U0010ffff'<>]+", " ", s)
    return " ".join(s.split())


def daily_volumes(rng):
    days = [START + dt.timedelta(n) for n in range((END - START).days + 1)]
    fixed = {**SPIKES, **AFTERMATH}
    rest = [d for d in days if d not in fixed]
    remaining = UNIQUE - sum(fixed.values())
    base, extra = divmod(remaining, len(rest))
    bumped = set(rng.sample(rest, extra))
    return {d: fixed.get(d, base + (1 if d in bumped else 0)) for d in days}


def compose(rng, sentiment, day, keywords):
    pool = {"POS": POS, "NEU": NEU, "NEG": NEG}[sentiment]
    parts = [rng.choice(pool)]
    if keywords:
        parts.insert(rng.randrange(2), " and ".join(keywords))
    if day in SPIKE_EXTRA:
        parts.append(rng.choice(SPIKE_EXTRA[day]))
    parts.append(rng.choice(FILLER))
    text = ", ".join(parts)
    if rng.random() < 0.15:
        text = "@" + rng.choice(["kyivindependent", "bbcworld", "reuters", "a_friend", "newsdesk"]) + " " + text
    tags = {"POS": POS_TAGS, "NEG": NEG_TAGS, "NEU": NEU_TAGS}[sentiment]
    if rng.random() < (0.2 if sentiment == "NEU" else 0.35):
        text += " " + rng.choice(tags)
    if sentiment != "NEU" and rng.random() < 0.2:
        text += " " + rng.choice([":)", "🙏", "❤"] if sentiment == "POS" else [":(", "😢", "💔"])
    if rng.random() < 0.2:
        text += " https://t.co/" + "".join(rng.choice("abcdefghijkmnpqrstuvwxyz0123456789") for _ in range(8))
    return text


def main():
    rng = random.Random(SEED)
    volumes = daily_volumes(rng)
    labels = [s for s, n in SENTIMENT_COUNTS.items() for _ in range(n)]
    rng.shuffle(labels)
    users = [f"u{n:04d}" for n in range(1, 301)]

    rows, planted, seen = [], [], set()
    for day in sorted(volumes):
        for _ in range(volumes[day]):
            sentiment = labels[len(rows)]
            keywords = [k for k, p in KEYWORD_RATES.items() if rng.random() < p]
            while True:
                user = rng.choice(users)
                content = compose(rng, sentiment, day, keywords)
                key = (user, normalize(content))
                if key not in seen:
                    seen.add(key)
                    break
            location, code = rng.choice(LOCATIONS)
            ts = dt.datetime(day.year, day.month, day.day, rng.randrange(0, 21), rng.randrange(60), rng.randrange(60))
            rows.append({"id": f"s{len(rows) + 1:05d}", "date": ts.strftime("%Y-%m-%dT%H:%M:%SZ"),
                         "location": location, "content": content, "user_id": user})
            planted.append({"sentiment": sentiment, "keywords": keywords, "country": code})

    # Same-user reposts an hour later; deduplication must drop them.
    for original in rng.sample(rows, DUPLICATES):
        ts = dt.datetime.strptime(original["date"], "%Y-%m-%dT%H:%M:%SZ") + dt.timedelta(hours=1)
        rows.append({**original, "id": f"s{len(rows) + 1:05d}", "date": ts.strftime("%Y-%m-%dT%H:%M:%SZ")})
    order = list(range(len(rows)))
    rng.shuffle(order)

    with open(DATA / "sample.jsonl", "w", encoding="utf-8") as f:
        for i in order:
            f.write(json.dumps(rows[i], ensure_ascii=False) + "\n")

    total = sum(SENTIMENT_COUNTS.values())
    countries = {}
    for p in planted:
        countries[p["country"]] = countries.get(p["country"], 0) + 1
    manifest = {
        "lines": len(rows),
        "records": UNIQUE,
        "duplicates": DUPLICATES,
        "date_min": START.isoformat(),
        "date_max": END.isoformat(),
        "sentiment_counts": SENTIMENT_COUNTS,
        "sentiment_percent": {s: f"{100 * n / total:.2f}" for s, n in SENTIMENT_COUNTS.items()},
        "keyword_counts": {k: sum(k in p["keywords"] for p in planted) for k in KEYWORD_RATES},
        "country_counts": dict(sorted(countries.items())),
        "peaks": sorted(d.isoformat() for d in SPIKES),
        "daily_volume": {d.isoformat(): n for d, n in sorted(volumes.items())},
    }
    (DATA / "sample_manifest.json").write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
