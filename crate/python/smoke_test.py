"""Smoke test for the relevkit Python extension.

Build and install first:
    pip install maturin
    maturin develop -m crates/py/Cargo.toml
"""

import json
import os
import tempfile

import relevkit


def main():
    assert relevkit.tokenize("Hot Pot 火锅!") == ["hot", "pot", "火", "锅"]
    assert relevkit.token_count("A dog ran.") == 3
    assert relevkit.segment("A. B!\n\nC?") == [["A.", "B!"], ["C?"]]

    s = relevkit.mix_summary("cat", "A dog ran. The cat sat.")
    assert s.query_focused == "A dog ran. The cat sat.", s.query_focused
    assert s.selected_sentence_indices == [0, 1]
    assert s.combined.startswith(s.query_focused + " [SEP] ")

    budget = relevkit.SummaryBudget(query_focused_max=2, doc_summary_max=2)
    short = relevkit.mix_summary("cat", "A dog ran. The cat sat.", budget)
    assert relevkit.token_count(short.query_focused) <= 2

    label, score = relevkit.score("cat", "The cat sat. The cat ran.")
    assert label in ("strong", "weak", "irrelevant") and 0.0 <= score <= 1.0

    assert relevkit.multiclass_auc(["strong", "weak", "irrelevant"], [0.9, 0.5, 0.1]) == 1.0
    assert abs(relevkit.delta_gsb(3, 5, 2) - 0.1) < 1e-12
    try:
        relevkit.multiclass_auc(["weak", "weak"], [0.1, 0.2])
    except ValueError:
        pass
    else:
        raise AssertionError("single class must raise")

    records = [
        {"id": "a", "query": "hot pot", "document": "Hot pot here. The hot pot base is spicy.", "label": "strong"},
        {"id": "b", "query": "cheap cafe", "document": "A cafe by the river. Coffee is good.", "label": "weak"},
    ]
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "data.jsonl")
        with open(path, "w", encoding="utf-8") as f:
            for r in records:
                f.write(json.dumps(r) + "\n")
        loaded = relevkit.load_dataset(path)
    assert [r["id"] for r in loaded] == ["a", "b"]
    assert relevkit.stats(loaded) == {"strong": 1, "weak": 1, "irrelevant": 0, "total": 2}

    aug = relevkit.augment_mock(loaded, seed=1, ops=["syn", "ant", "gen"])
    assert aug == relevkit.augment_mock(loaded, seed=1, ops=["syn", "ant", "gen"])
    docs = {r["id"]: r["document"] for r in loaded}
    for a in aug:
        assert a["document"] == docs[a["source_id"]]
        if a["provenance"] == "antonym_rewrite":
            assert a["label"] == "irrelevant"

    report = relevkit.run_experiment(n_docs=60, seed=7)
    assert report["n"] == 60 and report["auc_mix"] >= report["auc_qf_only"]
    print("python smoke test ok")


if __name__ == "__main__":
    main()
