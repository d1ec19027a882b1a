"""Country aliases and first-level admin regions recognised in affiliation strings.

Only countries whose addresses routinely carry a state/province segment are
listed. Callers can pass extra regions to the parser and the resolver.
"""

from __future__ import annotations

import re
import unicodedata
from functools import lru_cache

_WS = re.compile(r"\s+")


@lru_cache(maxsize=1 << 16)
def normalize(text: str) -> str:
    """Case-fold, strip diacritics, collapse internal whitespace."""
    decomposed = unicodedata.normalize("NFKD", text)
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    return _WS.sub(" ", stripped.casefold()).strip()


COUNTRY_ALIASES = {
    "usa": "usa",
    "us": "usa",
    "u.s.a.": "usa",
    "u.s.": "usa",
    "united states": "usa",
    "united states of america": "usa",
    "uk": "uk",
    "u.k.": "uk",
    "united kingdom": "uk",
    "great britain": "uk",
    "england": "uk",
    "scotland": "uk",
    "wales": "uk",
    "north ireland": "uk",
    "northern ireland": "uk",
    "peoples r china": "china",
    "people's republic of china": "china",
    "pr china": "china",
}

US_STATES = {
    "AL": "Alabama", "AK": "Alaska", "AZ": "Arizona", "AR": "Arkansas",
    "CA": "California", "CO": "Colorado", "CT": "Connecticut", "DE": "Delaware",
    "DC": "District of Columbia", "FL": "Florida", "GA": "Georgia", "HI": "Hawaii",
    "ID": "Idaho", "IL": "Illinois", "IN": "Indiana", "IA": "Iowa",
    "KS": "Kansas", "KY": "Kentucky", "LA": "Louisiana", "ME": "Maine",
    "MD": "Maryland", "MA": "Massachusetts", "MI": "Michigan", "MN": "Minnesota",
    "MS": "Mississippi", "MO": "Missouri", "MT": "Montana", "NE": "Nebraska",
    "NV": "Nevada", "NH": "New Hampshire", "NJ": "New Jersey", "NM": "New Mexico",
    "NY": "New York", "NC": "North Carolina", "ND": "North Dakota", "OH": "Ohio",
    "OK": "Oklahoma", "OR": "Oregon", "PA": "Pennsylvania", "RI": "Rhode Island",
    "SC": "South Carolina", "SD": "South Dakota", "TN": "Tennessee", "TX": "Texas",
    "UT": "Utah", "VT": "Vermont", "VA": "Virginia", "WA": "Washington",
    "WV": "West Virginia", "WI": "Wisconsin", "WY": "Wyoming", "PR": "Puerto Rico",
}

CA_PROVINCES = {
    "AB": "Alberta", "BC": "British Columbia", "MB": "Manitoba",
    "NB": "New Brunswick", "NL": "Newfoundland and Labrador", "NS": "Nova Scotia",
    "NT": "Northwest Territories", "NU": "Nunavut", "ON": "Ontario",
    "PE": "Prince Edward Island", "QC": "Quebec", "SK": "Saskatchewan", "YT": "Yukon",
}

AU_STATES = {
    "ACT": "Australian Capital Territory", "NSW": "New South Wales",
    "NT": "Northern Territory", "QLD": "Queensland", "SA": "South Australia",
    "TAS": "Tasmania", "VIC": "Victoria", "WA": "Western Australia",
}

# Abbreviations used by WoS that are not the official postal codes.
_EXTRA_SPELLINGS = {
    "australia": {"Vic": "VIC", "Qld": "QLD", "Tas": "TAS"},
    "canada": {"Que": "QC", "Ont": "ON"},
}


def canonical_country(name: str) -> str:
    key = normalize(name)
    return COUNTRY_ALIASES.get(key, key)


def _build_admin_index() -> dict[str, dict[str, str]]:
    index: dict[str, dict[str, str]] = {}
    for country, table in (("usa", US_STATES), ("canada", CA_PROVINCES), ("australia", AU_STATES)):
        entries: dict[str, str] = {}
        for code, full in table.items():
            entries[normalize(code)] = code.lower()
            entries[normalize(full)] = code.lower()
        for spelling, code in _EXTRA_SPELLINGS.get(country, {}).items():
            entries[normalize(spelling)] = code.lower()
        index[country] = entries
    return index


ADMIN_INDEX = _build_admin_index()


def admin_key(country: str, admin: str | None, extra: dict | None = None) -> str | None:
    """Canonical key for an admin region so that "NY" and "New York" coincide."""
    if admin is None:
        return None
    norm = normalize(admin)
    if not norm:
        return None
    ckey = canonical_country(country)
    table = ADMIN_INDEX.get(ckey, {})
    if extra and ckey in extra:
        table = {**table, **extra[ckey]}
    return table.get(norm, norm)


def is_known_admin(country: str, segment: str, extra: dict | None = None) -> bool:
    ckey = canonical_country(country)
    norm = normalize(segment)
    if norm in ADMIN_INDEX.get(ckey, {}):
        return True
    return bool(extra) and norm in extra.get(ckey, {})
