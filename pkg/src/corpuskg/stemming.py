"""Deterministic suffix-stripping stemmer (classic Porter, 1980).

The stemmer below is the fixed normalization primitive for the whole engine:
vocabulary terms, index postings, attribute-label canonical forms and KG node
matching all depend on its exact output, so it is implemented here rather than
pulled from an NLP stack whose behavior may drift between releases.

Two deliberate deviations from a bare single-pass Porter:

* ``stem`` iterates the pass to a fixpoint, which makes stemming idempotent
  by construction (``stem(stem(w)) == stem(w)`` for every input).
* Hyphenated words are stemmed part-by-part and rejoined ("side-effects" ->
  "side-effect"), and parts containing digits pass through lowercased
  unchanged ("pT1" -> "pt1").
"""

from __future__ import annotations

_VOWELS = "aeiou"


def _is_cons(word: str, i: int) -> bool:
    c = word[i]
    if c in _VOWELS:
        return False
    if c == "y":
        return True if i == 0 else not _is_cons(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Count VC sequences in the stem (Porter's m)."""
    m = 0
    i = 0
    n = len(stem)
    while i < n and _is_cons(stem, i):
        i += 1
    while i < n:
        while i < n and not _is_cons(stem, i):
            i += 1
        if i >= n:
            break
        m += 1
        while i < n and _is_cons(stem, i):
            i += 1
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_cons(stem, i) for i in range(len(stem)))


def _ends_double_cons(word: str) -> bool:
    return (
        len(word) >= 2
        and word[-1] == word[-2]
        and _is_cons(word, len(word) - 1)
    )


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    if not (
        _is_cons(word, len(word) - 3)
        and not _is_cons(word, len(word) - 2)
        and _is_cons(word, len(word) - 1)
    ):
        return False
    return word[-1] not in "wxy"


def _replace_suffix(word: str, suffix: str, repl: str, min_m: int) -> tuple[str, bool]:
    """Replace suffix when the remaining stem has measure > min_m."""
    if not word.endswith(suffix):
        return word, False
    stem = word[: len(word) - len(suffix)]
    if _measure(stem) > min_m:
        return stem + repl, True
    return word, True  # suffix matched; stop scanning further rules


_STEP2 = (
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
)

_STEP3 = (
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
)

_STEP4 = (
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
    "ment", "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
)


def _porter_pass(word: str) -> str:
    if len(word) <= 2:
        return word

    # step 1a
    if word.endswith("sses"):
        word = word[:-2]
    elif word.endswith("ies"):
        word = word[:-2]
    elif word.endswith("ss"):
        pass
    elif word.endswith("s"):
        word = word[:-1]

    # step 1b
    if word.endswith("eed"):
        if _measure(word[:-3]) > 0:
            word = word[:-1]
    else:
        flag = False
        if word.endswith("ed") and _has_vowel(word[:-2]):
            word = word[:-2]
            flag = True
        elif word.endswith("ing") and _has_vowel(word[:-3]):
            word = word[:-3]
            flag = True
        if flag:
            if word.endswith(("at", "bl", "iz")):
                word += "e"
            elif _ends_double_cons(word) and word[-1] not in "lsz":
                word = word[:-1]
            elif _measure(word) == 1 and _ends_cvc(word):
                word += "e"

    # step 1c
    if word.endswith("y") and _has_vowel(word[:-1]):
        word = word[:-1] + "i"

    # step 2
    for suffix, repl in _STEP2:
        if word.endswith(suffix):
            word, _ = _replace_suffix(word, suffix, repl, 0)
            break

    # step 3
    for suffix, repl in _STEP3:
        if word.endswith(suffix):
            word, _ = _replace_suffix(word, suffix, repl, 0)
            break

    # step 4
    for suffix in _STEP4:
        if word.endswith(suffix):
            stem = word[: len(word) - len(suffix)]
            if suffix == "ion" and not stem.endswith(("s", "t")):
                break
            if _measure(stem) > 1:
                word = stem
            break

    # step 5a
    if word.endswith("e"):
        stem = word[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            word = stem

    # step 5b
    if _ends_double_cons(word) and word.endswith("l") and _measure(word) > 1:
        word = word[:-1]

    return word


def _stem_part(part: str) -> str:
    if not part or any(ch.isdigit() for ch in part):
        return part
    prev = part
    for _ in range(8):
        cur = _porter_pass(prev)
        if cur == prev:
            return cur
        prev = cur
    return prev


def stem(word: str) -> str:
    """Stem a single token (lowercases first; hyphen parts stemmed separately)."""
    word = word.lower()
    if "-" in word:
        return "-".join(_stem_part(p) for p in word.split("-"))
    return _stem_part(word)
