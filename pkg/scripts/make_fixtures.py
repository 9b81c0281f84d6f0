#!/usr/bin/env python3
"""Generate the shipped fixture corpus, embedding file, and seed files.

The embedding file pins exact positions for the terms that drive attribute
matching, so every span-vs-label angle the tests depend on is analytic:
same-direction groups force intended matches to ~0-12 degrees while exact
basis placements hold every unintended match above the 25-degree threshold.
After writing everything the script re-loads the fixtures and asserts each
margin, cluster membership, classifier F-measure, and the end-to-end parse,
failing loudly if any drifts.

Run from the repo root:  python scripts/make_fixtures.py
"""

from __future__ import annotations

import json
import math
import shutil
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "fixtures"
sys.path.insert(0, str(REPO / "src"))

import numpy as np

from corpuskg.cluster import (
    KIND_LINEAR,
    build_training_set,
    make_centroid,
    select_within_angle,
    train_classifier,
)
from corpuskg.convo import build_attribute_dictionary, parse_query
from corpuskg.corpus import parse_publication
from corpuskg.embed import EmbeddingProvider, MODE_FILE, angular_distance
from corpuskg.kg import Kg, subtree
from corpuskg.tablesearch import EQ_NUM, Predicate, StructuralQuery, TableSearch, build_metaprofile
from corpuskg.cluster import TopicCluster
from corpuskg.text import KIND_WORD, normalize_text

DIM = 64

UMBRELLA_QUESTION = (
    "output all latest information available about risk factors and "
    "predictive models for metastatic colorectal cancer with tumor in "
    "lymph node, size 8.45"
)


# --- embedding file -----------------------------------------------------------


def basis(idx: int) -> list[float]:
    v = [0.0] * DIM
    v[idx] = 1.0
    return v


def rotated(i: int, j: int, degrees: float) -> list[float]:
    v = [0.0] * DIM
    v[i] = math.cos(math.radians(degrees))
    v[j] = math.sin(math.radians(degrees))
    return v


EMBEDDINGS: dict[str, list[float]] = {
    # lymph-node attribute family: one shared direction
    "lymph": basis(0),
    "node": basis(0),
    "metastasi": basis(0),
    "pt1": basis(0),
    "crc": basis(0),
    # size attribute family
    "effect": basis(1),
    "size": basis(1),
    "ci": basis(1),
    # therapy naming family (exact zero-angle match for fusion)
    "2nd": basis(2),
    "line": basis(2),
    "treatment": basis(2),
    "therapi": basis(2),
    # drug-name geometry for leaf-level fusion confidence
    "regorafenib": basis(4),
    "bevacizumab": rotated(4, 5, 12.0),
    "fruquintinib": basis(6),
    "cetuximab": rotated(6, 7, 24.0),
    # exact placements that hold question spans above the match threshold
    "risk": basis(10),
    "factor": basis(11),
    "predictor": basis(12),
    "preval": basis(13),
    "in": basis(20),
}


def write_embeddings(path: Path) -> None:
    lines = [f"{len(EMBEDDINGS)} {DIM}"]
    for term in sorted(EMBEDDINGS):
        lines.append(term + " " + " ".join(f"{v:.12f}" for v in EMBEDDINGS[term]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# --- the umbrella-review risk table, transcribed ---------------------------------------------

UMBRELLA_HEADERS = [
    "Risk factor/risk predictor",
    "Outcome evaluated in the umbrella review",
    "Risk factor prevalence",
    "Effect size (95% CI)*",
    "Credibility assessment",
    "Outcome in the risk prediction models",
    "Effect size (95% CI)*",
    "Model performance",
]

UMBRELLA_ROWS = [
    ["CRC metastasis", "", "", "", "", "", "", ""],
    ["Histopathological risk factor", "", "", "", "", "", "", ""],
    [
        "Vascular invasion",
        "Lymph node metastasis in pT1 CRC",
        "330/1731 = 19%",
        "2.73 (1.98–3.78)",
        "Convincing",
        "Lymph node metastasis in pT1 CRC",
        "8.45 (4.56–15.66)",
        "AUC 0.812 (0.770–0.855); Hosmer–Lemeshow test: p = 0.737 (55)",
    ],
    [
        "",
        "Lymph node metastasis in rectal cancer",
        "46/168 = 27%",
        "5.39 (0.77–44.62)",
        "No association",
        "",
        "",
        "",
    ],
    [
        "",
        "Lymph node metastasis in small rectal NETs treated by local excision",
        "75/211 = 36%",
        "3.63 (0.05–268.57)",
        "No association",
        "",
        "",
        "",
    ],
    [
        "Tumor budding",
        "Lymph node metastasis in pT1 CRC",
        "2401/10,128 = 24%",
        "6.39 (5.23–7.80)",
        "Highly suggestive",
        "Lymph node metastasis in pT1 CRC",
        "1.70 (1.03–2.80)",
        "AUC 0.812 (0.770–0.855); Hosmer–Lemeshow test: p = 0.737 (55)",
    ],
    [
        "",
        "Lymph node metastasis in CRC",
        "1955/6739 = 29%",
        "4.96 (3.97–6.19)",
        "Highly suggestive",
        "",
        "",
        "",
    ],
    [
        "Tumor differentiation",
        "Lymph node metastasis in pT1 CRC",
        "94/2722 = 4%",
        "5.61 (2.90–10.93)",
        "Suggestive",
        "Lymph node metastasis in pT1 CRC",
        "11.77 (0.77–179.83)",
        "AUC 0.90 (0.81–0.99) (49)",
    ],
    [
        "",
        "Lymph node metastasis in pT1 CRC patients who underwent additional "
        "surgeries after an endoscopic resection",
        "122/209 = 58%",
        "3.77 (1.12–123.16)",
        "No association",
        "Synchronous bone metastasis",
        "1.69 (1.22–2.32)",
        "AUC 0.803; sensitivity 0.951; specificity 0.845 (54)",
    ],
    [
        "Submucosal invasion ≥ 1 mm",
        "Lymph node metastasis in pT1 CRC",
        "2389/2922 = 82%",
        "2.95 (1.39–6.27)",
        "Weak",
        "Lymph node metastasis in pT1 CRC",
        "2.14 (1.19–3.86)",
        "AUC 0.812 (0.770–0.855); Hosmer–Lemeshow test: p = 0.737 (55)",
    ],
    [
        "Tumor size ≥ 1 cm",
        "Lymph node metastasis in rectal cancer",
        "203/348 = 58%",
        "6.76 (3.25–14.04)",
        "Highly suggestive",
        "Peritoneal metastasis in colon cancer",
        "1.04 (1.00–1.09)",
        "ROC 0.753 (57)",
    ],
]


def umbrella_record() -> dict:
    return {
        "id": "umbrella-risk",
        "title": "Umbrella review of histopathological risk assessment for colorectal neoplasia spread",
        "authors": ["R. Halvorsen", "M. Duarte"],
        "abstract": (
            "An umbrella review synthesizing histopathological evidence and "
            "quantitative effect estimates across published cohorts of "
            "colorectal neoplasia, covering vascular findings and staging "
            "criteria relevant to clinical decision support."
        ),
        "date": "2024-05-17",
        "source_uri": "fixture://umbrella-risk",
        "sections": [
            {
                "heading": "Synthesis approach",
                "text": (
                    "Eligible reviews were screened against credibility tiers. "
                    "Quantitative estimates were harmonized before pooling, and "
                    "each candidate criterion was traced back to its source cohort."
                ),
            }
        ],
        "figures": [
            {
                "caption": "Credibility tiers across pooled cohorts",
                "text": "Tier counts by assessment band",
            }
        ],
        "tables": [
            {
                "caption": "Pooled evidence on spread of colorectal neoplasia across umbrella cohorts",
                "section": "Synthesis approach",
                "n_header_rows": 1,
                "n_header_cols": 2,
                "rows": [UMBRELLA_HEADERS] + UMBRELLA_ROWS,
            }
        ],
    }


# --- synthetic topical publications --------------------------------------------

# every label word here must stay disjoint from the demo question stems
HEPATIC_HMD = [
    "Cohort group assignment",
    "Hepatic toxicity grade scale",
    "Median overall survival months",
    "Baseline liver enzyme panel",
]
HEPATIC_VMD = ["Arm alpha induction", "Arm beta consolidation", "Arm gamma maintenance"]
HEPATIC_EXTRAS = [
    "mild",
    "moderate",
    "marked",
    "transient",
    "sustained",
    "resolved",
    "isolated",
    "recurrent",
]

CARDIAC_HMD = [
    "Ejection fraction monitoring window",
    "Cardiac rhythm surveillance grade",
    "Cumulative anthracycline exposure",
    "Troponin trajectory band",
]
CARDIAC_VMD = ["Cycle one screening", "Cycle two screening", "Cycle three screening"]
CARDIAC_EXTRAS = [
    "stable",
    "borderline",
    "notable",
    "recovered",
    "plateau",
    "drifting",
    "fluctuating",
    "steady",
]

AUX_HMD = ["Scan interval weeks", "Lesion count change", "Followup window days"]
AUX_VMD = ["Reader one", "Reader two"]

REGIMEN_HMD = ["Regimen label", "Dosage level milligrams", "Response rate percent", "Discontinuation reason"]
REGIMEN_VMD = ["Weekly schedule", "Biweekly schedule", "Monthly schedule"]
REGIMEN_EXTRAS = ["fatigue", "neutropenia", "rash", "diarrhea", "neuropathy", "mucositis"]

PROFILE_HMD = ["Cohort", "Study design"]
PROFILE_VMDS = [
    ["Arm x", "Arm y"],
    ["Arm x", "Arm z"],
    ["Arm x", "Arm y"],
    ["Arm x", "Arm z"],
]


def topical_pub(pid, title, abstract, tables, body=""):
    return {
        "id": pid,
        "title": title,
        "authors": [f"Author {pid.upper()}"],
        "abstract": abstract,
        "date": "2024-03-01",
        "source_uri": f"fixture://{pid}",
        "sections": [{"heading": "Findings", "text": body or abstract}],
        "figures": [],
        "tables": tables,
    }


def hepatic_pub(i: int) -> dict:
    extra = HEPATIC_EXTRAS[i]
    main_table = {
        "caption": f"Hepatic toxicity grading in enrollment wave {i + 1}",
        "n_header_rows": 1,
        "n_header_cols": 1,
        "rows": [HEPATIC_HMD]
        + [
            [vmd, f"{2 + i}.{j}", f"{10 + j}.{i}", extra if j == 0 else f"{j}.{i}"]
            for j, vmd in enumerate(HEPATIC_VMD)
        ],
    }
    aux_table = {
        "caption": f"Imaging followup cadence wave {i + 1}",
        "n_header_rows": 1,
        "n_header_cols": 1,
        "rows": [AUX_HMD] + [[vmd, f"{6 + j}", f"{i + j}"] for j, vmd in enumerate(AUX_VMD)],
    }
    return topical_pub(
        f"hep{i + 1:02d}",
        f"Hepatic safety profile of sequential chemotherapy wave {i + 1}",
        "Liver enzyme trajectories were graded across induction, consolidation "
        "and maintenance arms of a colorectal cancer regimen.",
        [main_table, aux_table],
        body="Hepatic toxicity grading followed the shared scale. "
        f"The dominant pattern this wave was {extra}.",
    )


def cardiac_pub(i: int) -> dict:
    extra = CARDIAC_EXTRAS[i]
    main_table = {
        "caption": f"Cardiac surveillance summary wave {i + 1}",
        "n_header_rows": 1,
        "n_header_cols": 1,
        "rows": [CARDIAC_HMD]
        + [
            [vmd, f"{50 + i}.{j}", f"{j}.{i}", extra if j == 0 else f"{j}.{i}"]
            for j, vmd in enumerate(CARDIAC_VMD)
        ],
    }
    aux_table = {
        "caption": f"Echo reader agreement wave {i + 1}",
        "n_header_rows": 1,
        "n_header_cols": 1,
        "rows": [AUX_HMD] + [[vmd, f"{3 + j}", f"{i}"] for j, vmd in enumerate(AUX_VMD)],
    }
    return topical_pub(
        f"card{i + 1:02d}",
        f"Cardiac monitoring during colorectal cancer therapy wave {i + 1}",
        "Serial ejection fraction measurements tracked cardiotoxicity across "
        "treatment cycles in a monitored colorectal cancer cohort.",
        [main_table, aux_table],
        body=f"Monitoring showed a {extra} pattern across screening cycles.",
    )


def regimen_pub(i: int) -> dict:
    extra = REGIMEN_EXTRAS[i]
    table = {
        "caption": f"Dose scheduling outcomes cohort {i + 1}",
        "n_header_rows": 1,
        "n_header_cols": 1,
        "rows": [REGIMEN_HMD]
        + [
            [vmd, f"{80 + 10 * j}", f"{40 + i}%", extra if j == 0 else f"{j}"]
            for j, vmd in enumerate(REGIMEN_VMD)
        ]
        + [["Audit trail", "complete protocol adherence confirmed", "0", "none"]],
    }
    return topical_pub(
        f"reg{i + 1:02d}",
        f"Comparative dosing schedules for advanced colorectal cancer cohort {i + 1}",
        "Weekly, biweekly and monthly dosing schedules were compared for "
        "response and discontinuation in metastatic colorectal cancer.",
        [table],
    )


def profile_pub(i: int) -> dict:
    table = {
        "caption": f"Case series design summary {i + 1}",
        "n_header_rows": 1,
        "n_header_cols": 1,
        "rows": [PROFILE_HMD] + [[vmd, "observational"] for vmd in PROFILE_VMDS[i]],
    }
    return topical_pub(
        f"prof{i + 1:02d}",
        f"Summaries and case studies compendium part {i + 1}",
        "A compendium entry summarizing study design choices across case "
        "series of colorectal cancer care pathways.",
        [table],
    )


def nested_pub() -> dict:
    nested_table = {
        "caption": "Subgroup breakdown",
        "n_header_rows": 1,
        "n_header_cols": 1,
        "rows": [["Subgroup", "Odds ratio"], ["elderly", "7.77 (6.0–9.1)"], ["frail", "3.20"]],
    }
    table = {
        "caption": "Stratified response overview",
        "n_header_rows": 1,
        "n_header_cols": 1,
        "rows": [
            ["Stratum", "Detail"],
            ["Primary stratum", {"text": "see subgroup breakdown", "nested_table": nested_table}],
        ],
    }
    return topical_pub(
        "nested-demo",
        "Stratified outcomes with nested subgroup reporting",
        "A stratified report whose cells carry nested subgroup tables with "
        "their own headers.",
        [table],
    )


def misc_pubs() -> list[dict]:
    ragged = {
        "caption": "Registry intake snapshot",
        "n_header_rows": 1,
        "n_header_cols": 0,
        "rows": [
            ["Registry field", "Completeness", "Source system"],
            ["demographics", "98"],
            ["staging", "91", "pathology feed"],
        ],
    }
    return [
        topical_pub(
            "misc01",
            "Registry completeness audit for colorectal cancer records",
            "An audit of registry completeness, with one deliberately ragged "
            "intake snapshot table.",
            [ragged],
        ),
        topical_pub(
            "misc02",
            "Narrative review of screening adherence in colorectal cancer",
            "A tableless narrative review of screening adherence drivers and "
            "barriers in average populations.",
            [],
        ),
        topical_pub(
            "misc03",
            "Editorial perspective on living evidence synthesis",
            "An editorial on maintaining living evidence pipelines for "
            "oncology practice, also without tables.",
            [],
        ),
    ]


# --- seeds ----------------------------------------------------------------------


KG_SEED = {
    "label": "Colorectal cancer",
    "children": [
        {
            "label": "Metastasis",
            "children": [
                {
                    "label": "Liver",
                    "children": [
                        {
                            "label": "Colorectal cancer treatment",
                            "children": [
                                {"label": "Chemotherapy options"},
                                {"label": "Surgical approaches"},
                            ],
                        }
                    ],
                }
            ],
        },
        {
            "label": "Therapies",
            "children": [{"label": "Bevacizumab"}, {"label": "Cetuximab"}],
        },
        {
            "label": "Adverse events",
            "children": [{"label": "Hepatic toxicity"}, {"label": "Cardiac toxicity"}],
        },
        {
            "label": "Symptoms",
            "children": [{"label": "Weight loss"}, {"label": "Abdominal pain"}],
        },
        {"label": "Side-effects", "children": [{"label": "Severe pain"}]},
        {
            "label": "Risk models",
            "children": [
                {"label": "Umbrella reviews"},
                {"label": "Summaries and case studies"},
            ],
        },
    ],
}

CLUSTER_SEEDS = [
    {"topic": "risk-models", "table_id": "umbrella-risk:t0", "threshold_deg": 18, "attach_to": "umbrella reviews"},
    {"topic": "hepatic-events", "table_id": "hep01:t0", "threshold_deg": 18, "attach_to": "hepatic toxicity"},
    {"topic": "cardiac-events", "table_id": "card01:t0", "threshold_deg": 18, "attach_to": "cardiac toxicity"},
    {"topic": "regimen-trials", "table_id": "reg01:t0", "threshold_deg": 18, "attach_to": "chemotherapy options"},
    {"topic": "study-profiles", "table_id": "prof01:t0", "threshold_deg": 45, "attach_to": "summaries case studies"},
]


def ingest_samples() -> dict[str, object]:
    valid = topical_pub(
        "drop01",
        "Late-breaking hepatic observations in colorectal cancer",
        "A dropped-in publication carrying a grouped table whose header "
        "hierarchy yields a low-confidence subtree for review.",
        [
            {
                "caption": "Grouped late-breaking findings",
                "n_header_rows": 1,
                "n_header_cols": 2,
                "rows": [
                    ["Finding family", "Finding", "Count"],
                    ["Novel categories", "Uncharted observation", "4"],
                    ["", "Peripheral observation", "2"],
                ],
            }
        ],
    )
    malformed = {"title": "record without an id", "tables": []}
    return {"valid-drop.json": valid, "malformed-drop.json": malformed}


# --- verification ---------------------------------------------------------------


def question_spans(question: str, max_n: int = 6) -> list[tuple[str, tuple[str, ...]]]:
    words = [t for t in normalize_text(question) if t.kind == KIND_WORD]
    spans = []
    for n in range(1, max_n + 1):
        for s in range(len(words) - n + 1):
            window = words[s : s + n]
            spans.append((" ".join(w.surface for w in window), tuple(w.stem for w in window)))
    return spans


def verify(corpus_dir: Path, emb_path: Path) -> list[str]:
    report = []
    provider = EmbeddingProvider(mode=MODE_FILE, dimension=DIM, seed=1337, file_path=emb_path)
    pubs = [
        parse_publication(json.loads(p.read_text("utf-8")))
        for p in sorted(corpus_dir.glob("*.json"))
    ]
    tables = [t for pub in pubs for t in pub.tables]
    report.append(f"publications: {len(pubs)}, top-level tables: {len(tables)}")
    assert len(pubs) == 31, len(pubs)
    assert len(tables) >= 40, len(tables)

    # label inventory with ancestors
    labels = {}
    for t in tables:
        for label in list(t.hmd) + list(t.vmd):
            for cand in [label] + list(label.ancestors()):
                if cand.normalized:
                    labels.setdefault(cand.normalized, cand)
    report.append(f"distinct labels: {len(labels)}")

    # every question span vs every label: only the intended pairs match
    dictionary = build_attribute_dictionary(tables, provider)
    # sub-spans of an intended match are consumed by the longest-first scan,
    # so they are allowed here; anything else matching is a fixture defect
    allowed = {"lymph node", "lymph", "node", "size"}
    matched_spans = {}
    for surface, key in question_spans(UMBRELLA_QUESTION):
        if not dictionary.candidates(key):
            continue
        validated = dictionary.validate(surface, key, 25.0)
        if validated is not None:
            matched_spans.setdefault(" ".join(key), []).append(
                (surface, validated[0].raw, validated[1])
            )
    stems_matched = set(matched_spans)
    assert stems_matched <= allowed, f"unexpected span matches: {matched_spans}"
    assert {"lymph node", "size"} <= stems_matched, matched_spans
    report.append(f"question span matches: {sorted(matched_spans)} (intended regions only)")

    # margin audit: candidate spans that must stay above the threshold
    must_reject = ["risk", "factor", "risk factor", "tumor", "model", "cancer", "in", "predict model"]
    for span_stems in must_reject:
        key = tuple(span_stems.split())
        cands = dictionary.candidates(key)
        if not cands:
            continue
        surface = span_stems
        v = dictionary.validate(surface, key, 32.0)  # widened threshold to read the margin
        angle = None
        if v is not None:
            angle = (1 - v[1]) * 90.0
        ok = dictionary.validate(surface, key, 25.0) is None
        assert ok, f"span {span_stems!r} unexpectedly matched at <=25 deg"
        report.append(f"rejected span {span_stems!r}: nearest angle {'%.2f' % angle if angle else '>32'} deg")

    # parse the verbatim question
    parsed = parse_query(UMBRELLA_QUESTION, dictionary)
    preds = [(p.attribute_query, None if p.value is None else p.value.number) for p in parsed.structural.predicates]
    assert preds == [("lymph node", None), ("size", 8.45)], preds
    report.append(f"umbrella question parse: {preds}")

    parsed2 = parse_query("effect size 2.73 and effect size 5.39", dictionary)
    assert [(p.attribute_query, p.value.number) for p in parsed2.structural.predicates] == [
        ("effect size", 2.73),
        ("effect size", 5.39),
    ]

    # structural search: fig3 table is the sole and top hit with the 8.45 binding
    searcher = TableSearch(tables, provider)
    hits = searcher.search(StructuralQuery(predicates=parsed.structural.predicates))
    assert hits and hits[0].table_id == "umbrella-risk:t0", [h.table_id for h in hits]
    binding = next(
        b
        for b in hits[0].bindings
        if b.predicate_index == 1 and b.matched_literal == 8.45
    )
    assert binding.label.raw == "Effect size (95% CI)*"
    report.append(
        f"umbrella structural search: top hit {hits[0].table_id}, "
        f"binding {binding.label.raw!r} literal {binding.matched_literal}"
    )

    # cluster memberships at the shipped thresholds
    by_id = {t.table_id: t for t in tables}
    expectations = {
        "hepatic-events": ({f"hep{i:02d}:t0" for i in range(1, 9)}, 18.0),
        "cardiac-events": ({f"card{i:02d}:t0" for i in range(1, 9)}, 18.0),
        "regimen-trials": ({f"reg{i:02d}:t0" for i in range(1, 7)}, 18.0),
        "study-profiles": ({f"prof{i:02d}:t0" for i in range(1, 5)}, 45.0),
        "risk-models": ({"umbrella-risk:t0"}, 18.0),
    }
    seed_table = {s["topic"]: s["table_id"] for s in CLUSTER_SEEDS}
    for topic, (expected, theta) in expectations.items():
        centroid = make_centroid(topic, by_id[seed_table[topic]], provider)
        got = select_within_angle(centroid, tables, provider, theta)
        assert got == expected, f"{topic}: {sorted(got)} != {sorted(expected)}"
        margins = sorted(
            angular_distance(
                make_centroid("x", by_id[tid], provider).vector.v_t, centroid.vector.v_t
            )
            for tid in expected
        )
        outside = [
            angular_distance(
                make_centroid("x", t, provider).vector.v_t, centroid.vector.v_t
            )
            for t in tables
            if t.table_id not in expected and np.any(make_centroid("x", t, provider).vector.v_t)
        ]
        report.append(
            f"cluster {topic}: {len(expected)} members, max inside angle "
            f"{margins[-1]:.2f}, min outside {min(outside):.2f}"
        )
        assert margins[-1] <= theta - 1.5, f"{topic} membership margin too thin"
        assert min(outside) >= theta + 5, f"{topic} separation margin too thin"

    # linear classifier on the hepatic fixture must cross-validate cleanly
    centroid = make_centroid("hepatic-events", by_id["hep01:t0"], provider)
    ts = build_training_set(centroid, tables, provider, 18.0, rng_seed=7)
    clf = train_classifier(ts, KIND_LINEAR, centroid, by_id, provider, 18.0)
    assert clf.report.macro_f >= 0.95, clf.report.to_text()
    report.append(f"hepatic LINEAR 10-fold macro F: {clf.report.macro_f:.3f}")

    # the study-profiles cluster yields exactly five bars
    profile_cluster = TopicCluster(
        cluster_id="study-profiles",
        topic="study-profiles",
        member_table_ids=expectations["study-profiles"][0],
    )
    profile = build_metaprofile(profile_cluster, tables)
    assert len(profile.bars) == 5, [(b.label.raw, b.axis) for b in profile.bars]
    bar_names = {(b.label.raw, b.axis) for b in profile.bars}
    assert ("Study design", "HMD") in bar_names
    report.append(f"study-profiles meta-profile bars: {sorted(bar_names)}")

    # KG seed loads and the fusion worked example matches at exactly 1.0
    kg = Kg.init_seed(KG_SEED)
    assert len(kg.nodes) == 20
    node_id, conf = kg.match_subtree_root(subtree("2nd line Treatments", "Regorafenib"), provider)
    assert conf == 1.0 and kg.node(node_id).label == "Therapies"
    report.append("fusion anchor: '2nd line Treatments' -> 'Therapies' at confidence 1.0")

    # the vmd of the fig3 table contains the figure's row labels
    umbrella_table = by_id["umbrella-risk:t0"]
    reachable = set()
    for label in umbrella_table.vmd:
        reachable.add(label.raw)
        reachable.update(a.raw for a in label.ancestors())
    for expected_label in [
        "CRC metastasis",
        "Histopathological risk factor",
        "Vascular invasion",
        "Tumor budding",
        "Tumor size ≥ 1 cm",
    ]:
        assert expected_label in reachable, expected_label
    assert len(umbrella_table.hmd) == 8 and [l.raw for l in umbrella_table.hmd] == UMBRELLA_HEADERS
    report.append("umbrella transcription: 8 headers, row-label hierarchy reachable")

    return report


def main() -> int:
    corpus_dir = FIXTURES / "corpus"
    ingest_dir = FIXTURES / "ingest_samples"
    if FIXTURES.exists():
        shutil.rmtree(FIXTURES)
    corpus_dir.mkdir(parents=True)
    ingest_dir.mkdir(parents=True)

    records = [umbrella_record()]
    records += [hepatic_pub(i) for i in range(8)]
    records += [cardiac_pub(i) for i in range(8)]
    records += [regimen_pub(i) for i in range(6)]
    records += [profile_pub(i) for i in range(4)]
    records.append(nested_pub())
    records += misc_pubs()
    for record in records:
        (corpus_dir / f"{record['id']}.json").write_text(
            json.dumps(record, indent=2, ensure_ascii=False, sort_keys=True),
            encoding="utf-8",
        )

    emb_path = FIXTURES / "embeddings.txt"
    write_embeddings(emb_path)
    (FIXTURES / "kg_seed.json").write_text(
        json.dumps(KG_SEED, indent=2, sort_keys=True), encoding="utf-8"
    )
    (FIXTURES / "cluster_seeds.json").write_text(
        json.dumps(CLUSTER_SEEDS, indent=2, sort_keys=True), encoding="utf-8"
    )
    for name, payload in ingest_samples().items():
        (ingest_dir / name).write_text(
            json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8"
        )

    report = verify(corpus_dir, emb_path)
    print("fixture verification:")
    for line in report:
        print(f"  - {line}")
    print(f"fixtures written to {FIXTURES}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
