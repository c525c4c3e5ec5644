#!/usr/bin/env python3
"""Regenerate data/gazetteer.tsv from the system ISO-3166 table plus aliases.

Usage: tools/gen_gazetteer.py [/usr/share/zoneinfo/iso3166.tab] > data/gazetteer.tsv
"""
import re
import sys

# Demonyms, cities, regions and abbreviations. Later entries win over the
# ISO names, so keep genuinely ambiguous keys out of here.
ALIASES = {
    "UA": ["ukraine", "ukrainian", "kyiv", "kiev", "lviv", "kharkiv", "odesa", "odessa", "dnipro", "zaporizhzhia",
           "mariupol", "donetsk", "luhansk", "україна", "київ"],
    "RU": ["russia", "russian federation", "russian", "moscow", "st petersburg", "saint petersburg", "россия",
           "москва"],
    "US": ["usa", "us", "u s a", "united states", "united states of america", "america", "american", "new york",
           "new york city", "nyc", "los angeles", "chicago", "houston", "austin", "dallas", "boston", "seattle",
           "san francisco", "washington dc", "dc", "miami", "atlanta", "denver", "philadelphia", "california",
           "texas", "florida", "ohio", "illinois", "virginia", "michigan", "tx", "ny", "fl", "nj"],
    "GB": ["uk", "u k", "united kingdom", "great britain", "britain", "british", "england", "scotland", "wales",
           "northern ireland", "london", "manchester", "birmingham", "glasgow", "edinburgh", "liverpool", "leeds",
           "bristol"],
    "DE": ["germany", "deutschland", "german", "berlin", "munich", "münchen", "hamburg", "frankfurt", "cologne",
           "köln"],
    "FR": ["france", "french", "paris", "lyon", "marseille"],
    "IN": ["india", "indian", "bharat", "mumbai", "delhi", "new delhi", "bangalore", "bengaluru", "chennai",
           "kolkata", "hyderabad", "pune"],
    "PL": ["poland", "polska", "polish", "warsaw", "warszawa", "krakow", "kraków", "gdansk", "wroclaw"],
    "BY": ["belarus", "minsk"],
    "CA": ["canada", "canadian", "toronto", "vancouver", "montreal", "ottawa", "ontario", "quebec", "alberta"],
    "AU": ["australia", "australian", "sydney", "melbourne", "brisbane", "perth"],
    "CN": ["china", "chinese", "beijing", "shanghai"],
    "JP": ["japan", "tokyo", "osaka"],
    "IE": ["ireland", "dublin"],
    "IT": ["italy", "italia", "rome", "milan"],
    "ES": ["spain", "españa", "madrid", "barcelona"],
    "NL": ["netherlands", "holland", "the netherlands", "amsterdam", "rotterdam"],
    "BE": ["belgium", "brussels"],
    "AT": ["austria", "vienna"],
    "CH": ["switzerland", "zurich", "geneva"],
    "SE": ["sweden", "stockholm"],
    "NO": ["norway", "oslo"],
    "FI": ["finland", "helsinki"],
    "DK": ["denmark", "copenhagen"],
    "PT": ["portugal", "lisbon"],
    "GR": ["greece", "athens"],
    "TR": ["turkey", "türkiye", "istanbul", "ankara"],
    "NG": ["nigeria", "lagos", "abuja"],
    "KE": ["kenya", "nairobi"],
    "ZA": ["south africa", "johannesburg", "cape town"],
    "EG": ["egypt", "cairo"],
    "PK": ["pakistan", "karachi", "lahore", "islamabad"],
    "BD": ["bangladesh", "dhaka"],
    "PH": ["philippines", "manila"],
    "ID": ["indonesia", "jakarta"],
    "BR": ["brazil", "brasil", "sao paulo", "são paulo", "rio de janeiro"],
    "MX": ["mexico", "mexico city"],
    "AR": ["argentina", "buenos aires"],
    "LV": ["latvia", "riga"],
    "LT": ["lithuania", "vilnius"],
    "EE": ["estonia", "tallinn"],
    "RO": ["romania", "bucharest"],
    "CZ": ["czech republic", "czechia", "prague"],
    "HU": ["hungary", "budapest"],
    "SK": ["slovakia", "bratislava"],
    "MD": ["moldova", "chisinau"],
    "KR": ["south korea", "korea", "seoul"],
    "IL": ["israel", "tel aviv", "jerusalem"],
    "AE": ["uae", "dubai", "abu dhabi", "united arab emirates"],
    "NZ": ["new zealand", "auckland", "wellington"],
}


def norm(s):
    s = s.lower()
    s = re.sub(r"[^0-9a-z\u0080-￿]+", " ", s)
    return " ".join(s.split())


def main():
    path = sys.argv[1] if len(sys.argv) > 1 else "/usr/share/zoneinfo/iso3166.tab"
    table = {}
    for line in open(path, encoding="utf-8"):
        if line.startswith("#") or not line.strip():
            continue
        code, name = line.rstrip("\n").split("\t")
        keys = set()
        base = re.sub(r"\(.*?\)", " ", name).replace("&", "and")
        keys.add(norm(base))
        for inner in re.findall(r"\((.*?)\)", name):
            # "Korea (South)" -> "south korea"; "Britain (UK)" -> "uk"
            if inner.lower() in ("south", "north"):
                keys.add(norm(inner + " " + base))
            elif len(inner) <= 4:
                keys.add(norm(inner))
        for k in keys:
            if k:
                table[k] = code
    for code, keys in ALIASES.items():
        for k in keys:
            table[norm(k)] = code
    print("# location key<TAB>ISO-3166 alpha-2; generated by tools/gen_gazetteer.py")
    for k in sorted(table):
        print(f"{k}\t{table[k]}")


if __name__ == "__main__":
    main()
