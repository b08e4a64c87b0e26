#!/usr/bin/env python3
"""Regenerate the shipped tag lexicon (src/conncheck/data/taglex_v1.tsv).

Seed lemma lists live here; the script expands regular inflections
(3sg, past, gerund), merges irregular forms, and writes the TSV sorted
so regeneration is reproducible.
"""

from __future__ import annotations

from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "conncheck" / "data" / "taglex_v1.tsv"

# Auxiliaries, copulas, modals, and clitic verb forms.  "wo" and "ca" cover
# the hosts left over when the tokenizer splits "won't" and "can't".
AUXILIARIES = """
be am is are was were been being
have has had having 've
do does did done doing
will would can could shall should may might must ought
wo ca
'm 're 's 'll 'd
""".split()

# Irregular lemma -> extra forms (past, participle, odd 3sg); the regular
# expansion below still adds the predictable forms.
IRREGULAR = {
    "be": [],
    "have": [],
    "do": [],
    "go": ["goes", "went", "gone"],
    "say": ["says", "said"],
    "get": ["got", "gotten"],
    "make": ["made"],
    "know": ["knew", "known"],
    "think": ["thought"],
    "take": ["took", "taken"],
    "see": ["saw", "seen"],
    "come": ["came"],
    "find": ["found"],
    "give": ["gave", "given"],
    "tell": ["told"],
    "feel": ["felt"],
    "become": ["became"],
    "leave": ["left"],
    "put": [],
    "mean": ["meant"],
    "keep": ["kept"],
    "let": [],
    "begin": ["began", "begun"],
    "show": ["shown"],
    "hear": ["heard"],
    "run": ["ran"],
    "hold": ["held"],
    "bring": ["brought"],
    "write": ["wrote", "written"],
    "sit": ["sat"],
    "stand": ["stood"],
    "lose": ["lost"],
    "pay": ["paid"],
    "meet": ["met"],
    "set": [],
    "lead": ["led"],
    "understand": ["understood"],
    "speak": ["spoke", "spoken"],
    "read": [],
    "spend": ["spent"],
    "grow": ["grew", "grown"],
    "win": ["won"],
    "buy": ["bought"],
    "send": ["sent"],
    "build": ["built"],
    "fall": ["fell", "fallen"],
    "cut": [],
    "sell": ["sold"],
    "rise": ["rose", "risen"],
    "drive": ["drove", "driven"],
    "break": ["broke", "broken"],
    "wear": ["wore", "worn"],
    "choose": ["chose", "chosen"],
    "draw": ["drew", "drawn"],
    "eat": ["ate", "eaten"],
    "catch": ["caught"],
    "throw": ["threw", "thrown"],
    "fly": ["flew", "flown"],
    "forget": ["forgot", "forgotten"],
    "sleep": ["slept"],
    "teach": ["taught"],
    "swim": ["swam", "swum"],
    "sing": ["sang", "sung"],
    "ring": ["rang", "rung"],
    "drink": ["drank", "drunk"],
    "ride": ["rode", "ridden"],
    "steal": ["stole", "stolen"],
    "shake": ["shook", "shaken"],
    "hang": ["hung"],
    "hit": [],
    "hurt": [],
    "quit": [],
    "bet": [],
    "cost": [],
    "shut": [],
    "spread": [],
    "beat": ["beaten"],
    "bite": ["bit", "bitten"],
    "blow": ["blew", "blown"],
    "swear": ["swore", "sworn"],
    "tear": ["tore", "torn"],
    "wake": ["woke", "woken"],
    "freeze": ["froze", "frozen"],
    "hide": ["hid", "hidden"],
    "shoot": ["shot"],
    "slide": ["slid"],
    "stick": ["stuck"],
    "sting": ["stung"],
    "strike": ["struck"],
    "deal": ["dealt"],
    "dream": ["dreamt"],
    "lend": ["lent"],
    "bend": ["bent"],
    "burn": ["burnt"],
    "dig": ["dug"],
    "feed": ["fed"],
    "fight": ["fought"],
    "forgive": ["forgave", "forgiven"],
    "lie": ["lay", "lain"],
    "light": ["lit"],
    "seek": ["sought"],
    "shine": ["shone"],
    "spin": ["spun"],
    "sweep": ["swept"],
    "swing": ["swung"],
    "wind": ["wound"],
    "weep": ["wept"],
    "kneel": ["knelt"],
}

# Regular verb lemmas (conversational register, everyday activity).
VERB_LEMMAS = """
accept add admire admit adopt adore advise afford agree aim allow announce
annoy answer apologize appear apply appreciate approach argue arrive ask
assume attend avoid bake balance bark base bathe behave believe belong
borrow bother bounce bow brush call calm camp cancel care carry celebrate
change charge chase chat check cheer chew climb close collect color comb
combine commute compare complain complete concern confirm connect consider
contain continue cook copy count cover crash crawl create cross cry dance
dare decide decorate deliver depend describe deserve design destroy dine
disagree discover discuss dislike divide dress drop dry earn email employ
enjoy enter entertain escape exercise exist expect explain explore express
face fail farm fear fetch figure fill film finish fish fit fix float flow
focus fold follow force garden gather glance graduate greet guess handle
happen hate help hike hope hug hunt hurry imagine improve include insist
intend interest introduce invite iron join joke judge jump kick kiss knit
knock land last laugh learn like list listen live load lock long look love
manage march marry match matter measure mention mind miss mix move mow name
need notice obey offer open order own pack paint park participate pass
pause perform pick picture plan plant play please point practice prefer
prepare pretend print promise pronounce protect prove pull push race rain
raise reach realize receive recommend record recover refer refuse regret
relax remain remember remind rent repair repeat reply report request
require rescue rest retire return review reward rub rush sail save scare
seem serve settle share shave shop shout sign skate ski slip smell smile
smoke snow sound stay step stop store stretch study succeed suggest suppose
surprise survive talk taste text thank tire touch train travel treat trust
try turn type use visit volunteer vote wait walk want warm wash watch water
wave weigh welcome wish wonder work worry wrap yell
insure pursue withdraw complain agree disagree
respect start pour end escort
""".split()

# Lemmas that double the final consonant before -ed / -ing.
DOUBLING = set(
    """
    admit chat commit drop fit grab hug jog knit nap occur omit pat permit
    plan plug prefer refer regret rub shop skip slam slip snap step stop
    submit swim trim wrap
    """.split()
)

ADJECTIVES = """
able afraid alive alone amazed amazing angry annoyed annoying anxious
asleep athletic available awake aware awesome awful bad beautiful best
better big bitter blue bored boring brave bright brilliant broke broken
busy calm capable careful careless certain cheap cheerful classic clean
clear clever close cold comfortable common complete confident confused
cool correct crazy creative crowded curious cute dangerous dark dead deaf
dear deep delicious different difficult dirty dry dull dumb eager early
easy elderly embarrassed empty energetic enormous entire equal excellent
excited exciting expensive fair faithful fake famous fancy fantastic far
fast fat favorite fine firm fit flat fond foolish free fresh friendly full
fun funny generous gentle glad gold good gorgeous grateful gray great
green grumpy guilty handsome happy hard healthy heavy high hilarious
honest horrible hot huge hungry hurtful ill important impossible
incredible independent intelligent interesting jealous kind large late
lazy light likely little lively lonely long loud lovely low lucky mad
married mean messy modern musical narrow nasty naughty near neat nervous
new nice noisy normal odd official old open orange organic outdoor
outgoing overweight painful pale passionate patient peaceful perfect
personal picky pleasant polite poor popular positive possible pregnant
pretty proud quick quiet rainy rare raw ready real recent red relaxed
reliable rich ripe romantic rough rude sad safe salty same scared scary
serious sharp shiny short shy sick silly similar simple single skinny
sleepy slim slow small smart smooth soft sore sorry sour special spicy
sporty steep sticky strange strict strong stubborn stupid sunny sure
sweet talented tall tasty terrible thick thin thirsty tidy tiny tired
tough true typical ugly uncomfortable unfair unhappy unique upset useful
useless usual vegan vegetarian violent warm weak weird wet whole wide wild
windy wise wonderful wooden worried worse worst wrong young yummy
""".split()

ADVERBS = """
abroad again ago ahead almost alone already also always anymore anyway
anywhere around away back badly better best downstairs downtown early
either else enough even ever everywhere far fast forever forward hard
here home however indeed inside instead just last late least less maybe
more most much near never next not now nowhere n't often once only
outside overseas perhaps pretty quite rarely rather seldom so sometime
sometimes somewhere soon still straight then there therefore today
together tomorrow tonight too twice upstairs usually very well yesterday
yet
""".split()

SUFFIX_RULES = [("-ly", "ADV"), ("-ing", "VERB"), ("-ed", "VERB")]


def third_singular(lemma: str) -> str:
    if lemma.endswith(("s", "x", "z", "ch", "sh")):
        return lemma + "es"
    if lemma.endswith("y") and len(lemma) > 1 and lemma[-2] not in "aeiou":
        return lemma[:-1] + "ies"
    if lemma.endswith("o"):
        return lemma + "es"
    return lemma + "s"


def past(lemma: str) -> str:
    if lemma.endswith("e"):
        return lemma + "d"
    if lemma.endswith("y") and len(lemma) > 1 and lemma[-2] not in "aeiou":
        return lemma[:-1] + "ied"
    if lemma in DOUBLING:
        return lemma + lemma[-1] + "ed"
    return lemma + "ed"


def gerund(lemma: str) -> str:
    if lemma.endswith("ie"):
        return lemma[:-2] + "ying"
    if lemma.endswith("e") and not lemma.endswith(("ee", "oe", "ye")):
        return lemma[:-1] + "ing"
    if lemma in DOUBLING:
        return lemma + lemma[-1] + "ing"
    return lemma + "ing"


def verb_forms() -> set[str]:
    forms: set[str] = set(AUXILIARIES)
    for lemma, extra in IRREGULAR.items():
        forms.add(lemma)
        forms.update(extra)
        if lemma not in ("be", "have", "do"):
            forms.add(third_singular(lemma))
            forms.add(gerund(lemma))
    for lemma in VERB_LEMMAS:
        forms.update({lemma, third_singular(lemma), past(lemma), gerund(lemma)})
    return {f for f in forms if f}


def main() -> None:
    verbs = verb_forms()
    adjectives = set(ADJECTIVES) - verbs
    adverbs = set(ADVERBS) - verbs - adjectives
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", encoding="utf-8") as fh:
        fh.write("# conncheck-taglex v1\n")
        for form in sorted(verbs):
            fh.write(f"{form}\tVERB\n")
        for form in sorted(adjectives):
            fh.write(f"{form}\tADJ\n")
        for form in sorted(adverbs):
            fh.write(f"{form}\tADV\n")
        for suffix, tagname in SUFFIX_RULES:
            fh.write(f"{suffix}\t{tagname}\n")
    print(f"wrote {OUT} ({len(verbs)} verbs, {len(adjectives)} adjectives, {len(adverbs)} adverbs)")


if __name__ == "__main__":
    main()
