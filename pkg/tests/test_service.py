import pytest
from fastapi.testclient import TestClient

from civility_audit.annotation import (
    AnnotatorRating,
    Dimension,
    RawRating,
    composite_score,
)
from civility_audit.service import create_app, composites_from_store, ratings_from_store, RatingsStore

from conftest import make_snippet


def snippet_set(n, shows=("FOX", "MSNBC", "PBS")):
    return [make_snippet(f"s{i:03d}", show=shows[i % len(shows)]) for i in range(n)]


@pytest.fixture
def service(tmp_path):
    app = create_app(
        snippet_set(45),
        annotators=["ann_a", "ann_b"],
        store_path=tmp_path / "store.jsonl",
        batch_size=15,
        seed=3,
    )
    return TestClient(app), tmp_path / "store.jsonl"


def answer_batch(batch, value_for=lambda item, p: 5):
    """Build a valid submission echoing the served orientations."""
    return {
        "ratings": [
            {
                "snippet_id": item["snippet_id"],
                "ratings": [
                    {
                        "dimension": p["dimension"],
                        "value": value_for(item, p),
                        "civil_end_on_left": p["civil_end_on_left"],
                    }
                    for p in item["presentations"]
                ],
            }
            for item in batch["items"]
        ]
    }


def submit(client, annotator, batch, payload):
    return client.post(
        f"/api/annotators/{annotator}/batches/{batch['batch_id']}/ratings", json=payload
    )


class TestNextBatch:
    def test_first_batch_is_full(self, service):
        client, _ = service
        batch = client.get("/api/annotators/ann_a/next-batch").json()
        assert len(batch["items"]) == 15
        assert batch["done"] is False
        assert batch["batch_id"]

    def test_items_carry_presentation_protocol(self, service):
        client, _ = service
        batch = client.get("/api/annotators/ann_a/next-batch").json()
        item = batch["items"][0]
        assert item["text"]
        assert item["show"]
        presentations = item["presentations"]
        assert sorted(p["display_order"] for p in presentations) == [0, 1, 2, 3]
        assert {p["dimension"] for p in presentations} == {
            "Polite/Rude", "Friendly/Hostile", "Cooperative/Quarrelsome", "Calm/Agitated"
        }
        for p in presentations:
            assert {"civil_label", "uncivil_label", "civil_end_on_left"} <= set(p)

    def test_idempotent_until_submitted(self, service):
        client, _ = service
        first = client.get("/api/annotators/ann_a/next-batch").json()
        second = client.get("/api/annotators/ann_a/next-batch").json()
        assert first == second

    def test_unknown_annotator_404(self, service):
        client, _ = service
        assert client.get("/api/annotators/nobody/next-batch").status_code == 404

    def test_annotators_have_distinct_randomization(self, service):
        client, _ = service
        a = client.get("/api/annotators/ann_a/next-batch").json()
        b = client.get("/api/annotators/ann_b/next-batch").json()
        assert [i["snippet_id"] for i in a["items"]] != [i["snippet_id"] for i in b["items"]]

    def test_snippet_served_at_most_once(self, service):
        client, _ = service
        served = []
        while True:
            batch = client.get("/api/annotators/ann_a/next-batch").json()
            if batch["done"]:
                break
            served += [i["snippet_id"] for i in batch["items"]]
            submit(client, "ann_a", batch, answer_batch(batch))
        assert len(served) == len(set(served)) == 45


class TestSubmit:
    def test_valid_submission_stores_records(self, service):
        client, store_path = service
        batch = client.get("/api/annotators/ann_a/next-batch").json()
        response = submit(client, "ann_a", batch, answer_batch(batch))
        assert response.status_code == 200
        assert response.json()["stored"] == 60  # 15 snippets x 4 dimensions
        assert RatingsStore(store_path).count() == 60

    def test_progress_counts(self, service):
        client, _ = service
        batch = client.get("/api/annotators/ann_a/next-batch").json()
        submit(client, "ann_a", batch, answer_batch(batch))
        progress = client.get("/api/progress").json()
        assert progress["annotators"]["ann_a"]["completed_snippets"] == 15
        assert progress["annotators"]["ann_b"]["completed_snippets"] == 0
        assert progress["stored_records"] == 60

    def test_duplicate_submission_conflicts_and_preserves_store(self, service):
        client, store_path = service
        batch = client.get("/api/annotators/ann_a/next-batch").json()
        submit(client, "ann_a", batch, answer_batch(batch))
        count_before = RatingsStore(store_path).count()
        response = submit(client, "ann_a", batch, answer_batch(batch))
        assert response.status_code == 409
        assert RatingsStore(store_path).count() == count_before

    def test_out_of_range_value_names_snippet_and_dimension(self, service):
        client, _ = service
        batch = client.get("/api/annotators/ann_a/next-batch").json()
        payload = answer_batch(batch)
        payload["ratings"][2]["ratings"][1]["value"] = 11
        response = submit(client, "ann_a", batch, payload)
        assert response.status_code == 422
        errors = response.json()["detail"]["errors"]
        bad = payload["ratings"][2]
        assert any(
            e["snippet_id"] == bad["snippet_id"]
            and e["dimension"] == bad["ratings"][1]["dimension"]
            for e in errors
        )

    def test_orientation_echo_must_match(self, service):
        client, _ = service
        batch = client.get("/api/annotators/ann_a/next-batch").json()
        payload = answer_batch(batch)
        flag = payload["ratings"][0]["ratings"][0]["civil_end_on_left"]
        payload["ratings"][0]["ratings"][0]["civil_end_on_left"] = not flag
        assert submit(client, "ann_a", batch, payload).status_code == 422

    def test_missing_dimension_rejected(self, service):
        client, _ = service
        batch = client.get("/api/annotators/ann_a/next-batch").json()
        payload = answer_batch(batch)
        payload["ratings"][0]["ratings"].pop()
        response = submit(client, "ann_a", batch, payload)
        assert response.status_code == 422
        assert any(e["problem"] == "missing rating" for e in response.json()["detail"]["errors"])

    def test_unknown_batch_404(self, service):
        client, _ = service
        batch = client.get("/api/annotators/ann_a/next-batch").json()
        response = client.post(
            "/api/annotators/ann_a/batches/bogus/ratings", json=answer_batch(batch)
        )
        assert response.status_code == 404


class TestExhaustion:
    def test_remainder_batch_then_done(self, tmp_path):
        app = create_app(
            snippet_set(22),
            annotators=["solo"],
            store_path=tmp_path / "store.jsonl",
            batch_size=15,
            seed=1,
        )
        client = TestClient(app)
        first = client.get("/api/annotators/solo/next-batch").json()
        assert len(first["items"]) == 15 and first["done"] is False
        submit(client, "solo", first, answer_batch(first))
        second = client.get("/api/annotators/solo/next-batch").json()
        assert len(second["items"]) == 7 and second["done"] is False
        submit(client, "solo", second, answer_batch(second))
        final = client.get("/api/annotators/solo/next-batch").json()
        assert final["done"] is True
        assert final["items"] == []


class TestStoreReconstruction:
    def test_composites_match_direct_computation(self, tmp_path):
        snippets = snippet_set(15)
        app = create_app(
            snippets, annotators=["r1", "r2"], store_path=tmp_path / "store.jsonl",
            batch_size=15, seed=11,
        )
        client = TestClient(app)

        scripted = {}  # (annotator, snippet, dimension) -> value

        def value_for(annotator):
            def inner(item, p):
                value = (hash((annotator, item["snippet_id"], p["dimension"])) % 10) + 1
                scripted[(annotator, item["snippet_id"], p["dimension"])] = (
                    value, p["civil_end_on_left"]
                )
                return value
            return inner

        for annotator in ("r1", "r2"):
            batch = client.get(f"/api/annotators/{annotator}/next-batch").json()
            response = submit(client, annotator, batch, answer_batch(batch, value_for(annotator)))
            assert response.status_code == 200

        recomputed = composites_from_store(tmp_path / "store.jsonl")
        assert len(recomputed) == 15
        for snippet in snippets:
            ratings = []
            for annotator in ("r1", "r2"):
                raw = tuple(
                    RawRating(
                        dimension=d,
                        value=scripted[(annotator, snippet.id, d.key)][0],
                        civil_end_on_left=scripted[(annotator, snippet.id, d.key)][1],
                    )
                    for d in Dimension
                )
                ratings.append(
                    AnnotatorRating(annotator_id=annotator, snippet_id=snippet.id, ratings=raw)
                )
            expected = composite_score(ratings)
            assert recomputed[snippet.id].value == expected.value

    def test_store_records_carry_full_provenance(self, tmp_path):
        app = create_app(
            snippet_set(3), annotators=["solo"], store_path=tmp_path / "store.jsonl",
            batch_size=3, seed=2,
        )
        client = TestClient(app)
        batch = client.get("/api/annotators/solo/next-batch").json()
        submit(client, "solo", batch, answer_batch(batch))
        records = RatingsStore(tmp_path / "store.jsonl").load()
        assert len(records) == 12
        for record in records:
            assert {"annotator_id", "snippet_id", "batch_id", "dimension",
                    "value", "civil_end_on_left", "timestamp"} <= set(record)
        rebuilt = ratings_from_store(records)
        assert len(rebuilt) == 3
