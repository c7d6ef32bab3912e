#!/usr/bin/env python3
"""Regenerates the bundled fixtures. Output is deterministic.

Run from anywhere: python3 crates/core/fixtures/generate.py
"""
import json
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
GOLDEN = HERE.parent / "tests" / "golden" / "v1"

PLACES = ["Ontario", "Texas", "Lagos", "Kerala", "Bavaria", "Lombardy", "Queensland",
          "Gauteng", "Quebec", "Florida", "Madrid", "Tokyo", "Manila", "Santiago"]
AGENCIES = ["the CDC", "the WHO", "the health ministry", "the state health department",
            "the county council", "Public Health England", "the FDA"]
THINGS = ["new cases", "hospital admissions", "vaccine doses", "deaths", "tests", "ICU beds"]
DAYS = ["Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"]
MOODS = ["Stay safe everyone", "So tired of all this", "Wash your hands folks",
         "Cannot wait for this to be over", "Sending love to the nurses",
         "Is anyone else losing track of the days", "Masks are the new normal I guess",
         "Hoping for better news soon", "What a strange year", "Grateful for my family"]
TAGS = ["#StayHome", "#covid19", "#lockdown", "#TogetherApart", "#coronavirus", "#mondaymotivation"]


def cap(s):
    return s[0].upper() + s[1:]


def verifiable(rng):
    n = rng.randint(3, 9800)
    return rng.choice([
        f"{cap(rng.choice(AGENCIES))} reported {n} {rng.choice(THINGS)} in {rng.choice(PLACES)} on {rng.choice(DAYS)}",
        f"{rng.choice(PLACES)} has administered {n} COVID-19 {rng.choice(['vaccine doses', 'tests'])} since {rng.choice(DAYS)}",
        f"Coronavirus {rng.choice(THINGS)} in {rng.choice(PLACES)} rose by {rng.randint(2, 90)} percent this week",
    ])


def opinion(rng):
    return f"{rng.choice(MOODS)} {rng.choice(TAGS)}"


def write_tsv(path, split, n, n_veri, rng):
    labels = [1] * n_veri + [0] * (n - n_veri)
    rng.shuffle(labels)
    rows = ["topic\ttweet_id\ttweet_url\ttweet_text\tclass_label"]
    for i, label in enumerate(labels):
        tid = f"ct22-{split}-{i:05d}"
        text = verifiable(rng) if label else opinion(rng)
        rows.append(f"COVID-19\t{tid}\thttps://example.invalid/status/{tid}\t{text}\t{label}")
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


def ct22():
    rng = random.Random(2022)
    out = HERE / "ct22"
    out.mkdir(exist_ok=True)
    # train 64% verifiable, dev 196/307, test 149/251
    write_tsv(out / "train.tsv", "train", 3324, 2127, rng)
    write_tsv(out / "dev.tsv", "dev", 307, 196, rng)
    write_tsv(out / "test.tsv", "test", 251, 149, rng)
    (out / "manifest.toml").write_text(
        'dataset = "CT22"\n\n'
        "[schema]\n"
        'id_column = "tweet_id"\n'
        'text_column = "tweet_text"\n'
        'label_column = "class_label"\n\n'
        "[splits]\n"
        'train = "train.tsv"\n'
        'dev = "dev.tsv"\n'
        'test = "test.tsv"\n',
        encoding="utf-8",
    )


PAGES = [
    (1001, "Lindsey Graham", "Lindsey Olin Graham is an American politician and lawyer serving as the senior United States senator from South Carolina, a seat he has held since 2003."),
    (1002, "Graham cracker", "The graham cracker is a sweet flavored cracker made with graham flour that originated in the United States in the mid-19th century."),
    (1003, "Anthony Fauci", "Anthony Stephen Fauci is an American physician-scientist and immunologist who served as the director of the National Institute of Allergy and Infectious Diseases from 1984 to 2022."),
    (1004, "COVID-19", "Coronavirus disease 2019 (COVID-19) is a contagious disease caused by the coronavirus SARS-CoV-2. The first known case was identified in Wuhan, China, in December 2019."),
    (1005, "COVID-19 pandemic", "The COVID-19 pandemic is a global pandemic of coronavirus disease 2019 caused by severe acute respiratory syndrome coronavirus 2, first identified in December 2019."),
    (1006, "Severe acute respiratory syndrome coronavirus 2", "Severe acute respiratory syndrome coronavirus 2 (SARS-CoV-2) is the strain of coronavirus that causes COVID-19, the respiratory illness responsible for the pandemic."),
    (1007, "Coronavirus", "Coronaviruses are a group of related RNA viruses that cause diseases in mammals and birds, including respiratory tract infections that can range from mild to lethal."),
    (1008, "World Health Organization", "The World Health Organization (WHO) is a specialized agency of the United Nations responsible for international public health, headquartered in Geneva, Switzerland."),
    (1009, "Pfizer", "Pfizer Inc. is an American multinational pharmaceutical and biotechnology corporation headquartered in New York City. It developed a COVID-19 vaccine with BioNTech."),
    (1010, "BioNTech", "BioNTech SE is a German biotechnology company based in Mainz that develops immunotherapies and vaccines, including an mRNA vaccine against COVID-19 with Pfizer."),
    (1011, "Ontario", "Ontario is the most populous province of Canada. Its capital is Toronto and it is home to the national capital, Ottawa."),
    (1012, "Ontario, California", "Ontario is a city in San Bernardino County, California, United States, in the Inland Empire region of Southern California."),
    (1013, "Texas", "Texas is a state in the South Central region of the United States. It is the second-largest US state by both area and population."),
    (1014, "Boris Johnson", "Boris Johnson is a British politician who served as Prime Minister of the United Kingdom and Leader of the Conservative Party from 2019 to 2022."),
    (1015, "United Kingdom", "The United Kingdom of Great Britain and Northern Ireland is a country in Northwestern Europe, off the coast of the continental mainland."),
    (1016, "Donald Trump", "Donald John Trump is an American politician, media personality, and businessman who served as the 45th president of the United States from 2017 to 2021."),
    (1017, "Centers for Disease Control and Prevention", "The Centers for Disease Control and Prevention (CDC) is the national public health agency of the United States, headquartered in Atlanta, Georgia."),
    (1018, "Ivermectin", "Ivermectin is an antiparasitic drug. Misinformation spread during the COVID-19 pandemic claiming it could treat or prevent the disease; clinical trials did not support this."),
    (1019, "Hydroxychloroquine", "Hydroxychloroquine is a medication used to prevent and treat malaria. It was studied as a treatment for COVID-19 and found ineffective in large trials."),
    (1020, "5G", "5G is the fifth generation of cellular network technology. Conspiracy theories falsely linked 5G networks to the spread of COVID-19."),
    (1021, "Moderna", "Moderna, Inc. is an American pharmaceutical and biotechnology company based in Cambridge, Massachusetts, that focuses on RNA therapeutics, including an mRNA vaccine for COVID-19."),
    (1022, "Wuhan", "Wuhan is the capital of Hubei Province in the People's Republic of China. It was the site of the first identified cluster of COVID-19 cases."),
    (1023, "Lockdown", "A lockdown is a restriction policy for people or communities to stay where they are, usually due to specific risks to themselves or to others."),
    (1024, "Face mask", "A face mask or facemask is a mask that covers the nose and mouth. Face masks were widely recommended to reduce transmission of COVID-19."),
    (1025, "Joe Biden", "Joseph Robinette Biden Jr. is an American politician who served as the 46th president of the United States from 2021 to 2025."),
    (1026, "Kerala", "Kerala is a state on the Malabar Coast of India. It reported the first confirmed case of COVID-19 in India in January 2020."),
    (1027, "Bill Gates", "William Henry Gates III is an American businessman and philanthropist, best known for co-founding the software company Microsoft."),
    (1028, "Sweden", "Sweden is a Nordic country in Northern Europe. Its COVID-19 response relied more on voluntary measures than on lockdowns."),
    (1029, "Empty stub", ""),
    (1030, "Vitamin D", "Vitamin D is a group of fat-soluble secosteroids responsible for increasing intestinal absorption of calcium, magnesium, and phosphate."),
]

NER_RULES = {
    "Lindsey Graham": "B-PER", "Anthony Fauci": "B-PER", "Fauci": "B-PER", "Boris Johnson": "B-PER",
    "Donald Trump": "B-PER", "Trump": "B-PER", "Joe Biden": "B-PER", "Bill Gates": "B-PER",
    "Ontario": "B-LOC", "Texas": "B-LOC", "Wuhan": "B-LOC", "Kerala": "B-LOC", "Sweden": "B-LOC",
    "United Kingdom": "B-LOC", "UK": "B-LOC",
    "WHO": "B-ORG", "World Health Organization": "B-ORG", "Pfizer": "B-ORG", "BioNTech": "B-ORG",
    "Moderna": "B-ORG", "CDC": "B-ORG",
    "Ivermectin": "B-MISC", "Hydroxychloroquine": "B-MISC", "5G": "B-MISC", "Vitamin D": "B-MISC",
    "Zorblax": "B-MISC",
}

CLAIMS20 = [
    ("cc01", "Lindsey Graham received his second COVID-19 vaccine dose on Monday", "verifiable"),
    ("cc02", "Anthony Fauci said masks cut coronavirus transmission by 70 percent", "verifiable"),
    ("cc03", "Ontario reported 1,200 new covid cases yesterday", "verifiable"),
    ("cc04", "Pfizer and BioNTech shipped 5 million doses to the UK in January", "verifiable"),
    ("cc05", "Stay home and stay safe everyone #lockdown", "non_verifiable"),
    ("cc06", "Ivermectin cures covid in 48 hours", "verifiable"),
    ("cc07", "I honestly have no idea what to believe anymore", "non_verifiable"),
    ("cc08", "Texas hospitals are at 95% ICU capacity according to state data", "verifiable"),
    ("cc09", "Boris Johnson was admitted to intensive care with coronavirus in April", "verifiable"),
    ("cc10", "Why does nobody talk about Vitamin D?", "non_verifiable"),
    ("cc11", "5G towers spread the corona virus", "verifiable"),
    ("cc12", "Thoughts and prayers to all the nurses out there", "non_verifiable"),
    ("cc13", "The WHO declared a pandemic on March 11, 2020", "verifiable"),
    ("cc14", "Moderna says its vaccine is 94 percent effective", "verifiable"),
    ("cc15", "Sweden never had a lockdown and did just fine", "verifiable"),
    ("cc16", "Feeling hopeful today, things will get better", "non_verifiable"),
    ("cc17", "Zorblax is the future, trust me", "non_verifiable"),
    ("cc18", "Donald Trump suggested injecting disinfectant could treat SARS-CoV-2", "verifiable"),
    ("cc19", "Kerala confirmed India's first coronavirus case in Wuhan returnee", "verifiable"),
    ("cc20", "Can we please just go back to normal already", "non_verifiable"),
]

TRAIN_SMALL = [
    ("tr01", "The CDC reported 3,000 new cases in Florida on Friday", "verifiable"),
    ("tr02", "Bill Gates funded vaccine trials in 12 countries", "verifiable"),
    ("tr03", "Joe Biden announced 100 million shots in 100 days", "verifiable"),
    ("tr04", "Ugh another Monday in quarantine", "non_verifiable"),
    ("tr05", "Just made banana bread for the fifth time this month lol", "non_verifiable"),
    ("tr06", "Please be kind to each other", "non_verifiable"),
    ("tr07", "Who else is watching the briefing tonight?", "non_verifiable"),
    ("tr08", "Hydroxychloroquine was tested in 2,000 patients in a UK trial", "verifiable"),
]


def claims_jsonl(rows, dataset, split):
    lines = []
    for cid, text, label in rows:
        lines.append(json.dumps({"id": cid, "text": text, "dataset": dataset, "split": split,
                                 "gold_label": label}, ensure_ascii=False))
    return "\n".join(lines) + "\n"


def offline():
    out = HERE / "offline"
    out.mkdir(exist_ok=True)
    (out / "claims.jsonl").write_text(claims_jsonl(CLAIMS20, "CT22", "test"), encoding="utf-8")
    (out / "train.jsonl").write_text(claims_jsonl(TRAIN_SMALL, "CT22", "train"), encoding="utf-8")
    pages = [{"pageid": p, "title": t, "extract": e} for p, t, e in PAGES]
    (out / "wiki_pages.json").write_text(json.dumps(pages, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    (out / "ner_rules.json").write_text(json.dumps(NER_RULES, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / "pipeline.toml").write_text(
        "# Fully offline configuration: fixture Wikipedia, rule NER, hash\n"
        "# embeddings and the heuristic LLM. Paths are relative to this file.\n"
        'dataset = "CT22"\n'
        'context_mode = "summary"\n'
        'run_mode = "record"\n'
        'cache_root = "cache"\n\n'
        "[prompt]\nshots = 3\ntrain = \"train.jsonl\"\n\n"
        "[wiki]\nfixture = \"wiki_pages.json\"\n\n"
        "[ner]\nprovider = \"rules\"\nrules = \"ner_rules.json\"\n\n"
        "[embedding]\nprovider = \"hash\"\n\n"
        "[summarizer]\nprovider = \"heuristic\"\nmodel = \"heuristic-summarizer\"\n\n"
        "[classifier]\nprovider = \"heuristic\"\nmodel = \"heuristic-classifier\"\n",
        encoding="utf-8",
    )


# Hand-tallied transition pair over 12 claims.
#   id   gold  base  sys   category
#   t01  V     V     V     both right
#   t02  V     N     V     fixed (FN)
#   t03  V     N     V     fixed (FN)
#   t04  V     V     N     regressed (new FN)
#   t05  V     N     N     both wrong
#   t06  V     V     V     both right
#   t07  N     V     N     fixed (FP)
#   t08  N     N     V     regressed (new FP)
#   t09  N     N     V     regressed (new FP)
#   t10  N     V     V     both wrong
#   t11  N     N     N     both right
#   t12  N     V     V     both wrong
# baseline: FP = t07 t10 t12 = 3, FN = t02 t03 t05 = 3
# system:   FP = t08 t09 t10 t12 = 4, FN = t04 t05 = 2
# fixed 3 (2 FN, 1 FP), regressed 3 (2 new FP, 1 new FN), both right 3, both wrong 3
# net FP +1, net FN -1
TRANSITIONS = [
    ("t01", "V", "V", "V"), ("t02", "V", "N", "V"), ("t03", "V", "N", "V"), ("t04", "V", "V", "N"),
    ("t05", "V", "N", "N"), ("t06", "V", "V", "V"), ("t07", "N", "V", "N"), ("t08", "N", "N", "V"),
    ("t09", "N", "N", "V"), ("t10", "N", "V", "V"), ("t11", "N", "N", "N"), ("t12", "N", "V", "V"),
]


def transitions():
    out = HERE / "transitions"
    out.mkdir(exist_ok=True)
    label = {"V": "verifiable", "N": "non_verifiable"}
    answer = {"V": "Yes", "N": "No"}
    gold = [(i, f"transition claim {i}", label[g]) for i, g, _, _ in TRANSITIONS]
    (out / "gold.jsonl").write_text(claims_jsonl(gold, "CT22", "test"), encoding="utf-8")
    for name, col, tag in (("baseline", 2, "baseline/fixture"), ("system", 3, "cc-summary/fixture")):
        lines = [json.dumps({"claim_id": row[0], "label": label[row[col]], "parse_status": "clean",
                             "system_tag": tag, "raw_response": answer[row[col]]}) for row in TRANSITIONS]
        (out / f"{name}.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")


def ratings():
    out = HERE / "ratings"
    out.mkdir(exist_ok=True)
    rng = random.Random(7)
    for name, bias in (("summarizer_a", 0.2), ("summarizer_b", 0.0)):
        rows = ["item_id,rater_id,dimension,rating"]
        for dim in ("coherence", "consistency", "relevance"):
            for item in range(1, 21):
                base = rng.choice([1, 2, 2, 3, 3])
                for rater in ("r1", "r2", "r3"):
                    r = base if rng.random() < 0.6 + bias else rng.choice([1, 2, 3])
                    rows.append(f"s{item:02d},{rater},{dim},{r}")
        (out / f"{name}.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")


# Golden prompts, assembled from the template text directly.
G_CLAIM = "Lindsey Graham received his second COVID-19 vaccine dose on Monday"
G_CONTEXT = "Lindsey Graham is a United States senator from South Carolina. COVID-19 vaccines became available in December 2020."
G_SHOTS = [
    ("The CDC reported 3,000 new cases in Florida on Friday", "Yes"),
    ("Ugh another Monday in quarantine", "No"),
    ("Please be kind to each other", "No"),
]


def detection_prompt(augmented, doubt, few_shot):
    lines = [
        "### Instruction:",
        "Determine if the input text contains verifiable claims.",
        "The input text contains verifiable claims if it makes specific factual statements that can be checked against evidence.",
    ]
    if augmented:
        lines.append("Additional information may help clarify what the claim refers to, but base your decision primarily on whether the claim makes specific factual statements.")
    decision = 'If the input text contains claims that can be verified, respond "Yes". Otherwise, respond "No".'
    if doubt:
        decision += ' Note: When in doubt, choose "Yes".'
    lines.append(decision)
    lines.append("In the end, respond only with 'Yes' for verifiable claims or 'No' for unverifiable claims.")
    text = "\n".join(lines) + "\n"
    if few_shot:
        for claim, ans in G_SHOTS:
            text += f"### Input text: {claim}\n### Response: {ans}\n\n"
    text += f"### Input text: {G_CLAIM}\n"
    if augmented:
        text += f"### Additional information: {G_CONTEXT}\n"
    text += "### Response:"
    return text


S_EXTRACTS = [
    ("Lindsey Graham", "Lindsey Olin Graham is an American politician and lawyer serving as the senior United States senator from South Carolina."),
    ("COVID-19 vaccine", "A COVID-19 vaccine is a vaccine intended to provide acquired immunity against severe acute respiratory syndrome coronavirus 2."),
]


def summary_prompt():
    block = "\n\n".join(f"{t}: {e}" for t, e in S_EXTRACTS)
    return (
        "You are a helpful assistant. Provide a factual summarization around 150 words.\n"
        f'Input claim: "{G_CLAIM}"\n'
        f"Relevant Context: {block}\n"
        "Generate a concise, objective summary to the provided claim based ONLY on the provided context."
    )


def golden():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    for augmented in (False, True):
        for doubt in (True, False):
            for few in (False, True):
                name = "{}_{}_{}.txt".format("augmented" if augmented else "baseline",
                                             "fs3" if few else "zs", "doubt" if doubt else "nodoubt")
                (GOLDEN / name).write_bytes(detection_prompt(augmented, doubt, few).encode("utf-8"))
    (GOLDEN / "summary.txt").write_bytes(summary_prompt().encode("utf-8"))
    inputs = {"claim": G_CLAIM, "context": G_CONTEXT,
              "shots": [{"claim": c, "answer": a} for c, a in G_SHOTS],
              "extracts": [{"title": t, "text": e} for t, e in S_EXTRACTS]}
    (GOLDEN / "inputs.json").write_text(json.dumps(inputs, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    ct22()
    offline()
    transitions()
    ratings()
    golden()
