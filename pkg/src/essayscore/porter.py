"""Classic Porter (1980) suffix-stripping stemmer.

Follows the widely used reference implementation of the algorithm,
including its standard departures from the original paper (e.g. the
``logi -> log`` rule). Words shorter than three letters and words
containing anything but lowercase ASCII letters are returned unchanged.
"""

from __future__ import annotations

_VOWELS = "aeiou"


class _Stemmer:
    """Stateful single-word stemmer; ``b[k0..k]`` is the working region."""

    def __init__(self, word: str) -> None:
        self.b = list(word)
        self.k = len(word) - 1
        self.k0 = 0
        self.j = 0

    def cons(self, i: int) -> bool:
        ch = self.b[i]
        if ch in _VOWELS:
            return False
        if ch == "y":
            return i == self.k0 or not self.cons(i - 1)
        return True

    def m(self) -> int:
        # number of consonant-vowel sequences in b[k0..j]
        n = 0
        i = self.k0
        while True:
            if i > self.j:
                return n
            if not self.cons(i):
                break
            i += 1
        i += 1
        while True:
            while True:
                if i > self.j:
                    return n
                if self.cons(i):
                    break
                i += 1
            i += 1
            n += 1
            while True:
                if i > self.j:
                    return n
                if not self.cons(i):
                    break
                i += 1
            i += 1

    def vowel_in_stem(self) -> bool:
        return any(not self.cons(i) for i in range(self.k0, self.j + 1))

    def double_cons(self, j: int) -> bool:
        if j < self.k0 + 1:
            return False
        return self.b[j] == self.b[j - 1] and self.cons(j)

    def cvc(self, i: int) -> bool:
        # consonant-vowel-consonant ending at i, final consonant not w, x or y
        if (
            i < self.k0 + 2
            or not self.cons(i)
            or self.cons(i - 1)
            or not self.cons(i - 2)
        ):
            return False
        return self.b[i] not in "wxy"

    def ends(self, s: str) -> bool:
        length = len(s)
        if length > self.k - self.k0 + 1:
            return False
        if "".join(self.b[self.k - length + 1 : self.k + 1]) != s:
            return False
        self.j = self.k - length
        return True

    def set_to(self, s: str) -> None:
        self.b[self.j + 1 : self.k + 1] = list(s)
        self.k = self.j + len(s)

    def replace_if_m(self, s: str) -> None:
        if self.m() > 0:
            self.set_to(s)

    def step1ab(self) -> None:
        if self.b[self.k] == "s":
            if self.ends("sses"):
                self.k -= 2
            elif self.ends("ies"):
                self.set_to("i")
            elif self.b[self.k - 1] != "s":
                self.k -= 1
        if self.ends("eed"):
            if self.m() > 0:
                self.k -= 1
        elif (self.ends("ed") or self.ends("ing")) and self.vowel_in_stem():
            self.k = self.j
            if self.ends("at"):
                self.set_to("ate")
            elif self.ends("bl"):
                self.set_to("ble")
            elif self.ends("iz"):
                self.set_to("ize")
            elif self.double_cons(self.k):
                if self.b[self.k] not in "lsz":
                    self.k -= 1
            elif self.m() == 1 and self.cvc(self.k):
                self.set_to("e")

    def step1c(self) -> None:
        if self.ends("y") and self.vowel_in_stem():
            self.b[self.k] = "i"

    _STEP2 = (
        ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
        ("izer", "ize"), ("bli", "ble"), ("alli", "al"), ("entli", "ent"),
        ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
        ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
        ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
        ("logi", "log"),
    )

    _STEP3 = (
        ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
        ("ical", "ic"), ("ful", ""), ("ness", ""),
    )

    def _map_suffix(self, table: tuple[tuple[str, str], ...]) -> None:
        for suffix, repl in table:
            if self.ends(suffix):
                self.replace_if_m(repl)
                return

    _STEP4 = (
        "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
        "ment", "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
    )

    def step4(self) -> None:
        for suffix in self._STEP4:
            if self.ends(suffix):
                if suffix == "ion" and (
                    self.j < self.k0 or self.b[self.j] not in "st"
                ):
                    continue
                if self.m() > 1:
                    self.k = self.j
                return

    def step5(self) -> None:
        self.j = self.k
        if self.b[self.k] == "e":
            a = self.m()
            if a > 1 or (a == 1 and not self.cvc(self.k - 1)):
                self.k -= 1
        if self.b[self.k] == "l" and self.double_cons(self.k) and self.m() > 1:
            self.k -= 1

    def stem(self) -> str:
        if self.k <= self.k0 + 1:
            return "".join(self.b)
        self.step1ab()
        self.step1c()
        self._map_suffix(self._STEP2)
        self._map_suffix(self._STEP3)
        self.step4()
        self.step5()
        return "".join(self.b[self.k0 : self.k + 1])


def porter_stem(word: str) -> str:
    """Stem one lowercase alphabetic word; anything else passes through."""
    if len(word) < 3 or not word.isascii() or not word.isalpha() or not word.islower():
        return word
    return _Stemmer(word).stem()
