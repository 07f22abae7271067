#include "doctest.h"

#include "service_fixture.hpp"

#include "xlabel/ebm.hpp"

#include <set>
#include <sstream>

using namespace xlabel;
using namespace xlabel::testing;
using service::Json;
using ncd::Task;

namespace {

// Keeps the labels of the first `keep` records and blanks the rest.
std::string partially_labeled_csv(ncd::RecordTable table, std::size_t keep) {
    for (auto& column : table.labels) {
        for (std::size_t i = keep; i < column.size(); ++i) {
            column[i].reset();
        }
    }
    return ncd::write_records_csv(table);
}

std::string upload(httplib::Client& c, const std::string& csv) {
    const auto r = c.Post("/datasets", csv, "text/csv");
    REQUIRE(r);
    REQUIRE(r->status == 201);
    return json_of(r)["dataset_id"].get<std::string>();
}

std::string open_session(httplib::Client& c, const Json& request) {
    const auto r = c.Post("/sessions", request.dump(), "application/json");
    REQUIRE(r);
    REQUIRE(r->status == 201);
    return json_of(r)["session_id"].get<std::string>();
}

Json post_labels(httplib::Client& c, const std::string& session, const Json& body, int expected = 200) {
    const auto r = c.Post("/sessions/" + session + "/labels", body.dump(), "application/json");
    REQUIRE(r);
    CHECK(r->status == expected);
    return json_of(r);
}

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string line; std::getline(ss, line);) {
        out.push_back(line);
    }
    return out;
}

} // namespace

TEST_CASE("dataset upload") {
    LiveServer live(fresh_dir("upload"));
    auto c = live.client();

    const auto table = synthetic_table(1);
    const auto r = c.Post("/datasets", partially_labeled_csv(table, 300), "text/csv");
    REQUIRE(r->status == 201);
    const auto summary = json_of(r);
    CHECK(summary["records"] == 838);
    for (const Task t : ncd::kChainOrder) {
        CHECK(summary["labeled"][std::string(ncd::to_string(t))] == 300);
        CHECK(summary["unlabeled"][std::string(ncd::to_string(t))] == 538);
    }

    const auto empty = c.Post("/datasets", "", "text/csv");
    CHECK(empty->status == 400);
    const auto bad = c.Post("/datasets", "id,age\nA,3\nB,old\n", "text/csv");
    CHECK(bad->status == 400);
    CHECK(json_of(bad)["row"] == 3);
    CHECK(json_of(bad)["column"] == "age");
    CHECK(c.Get("/datasets/d999")->status == 404);
}

TEST_CASE("sessions") {
    LiveServer live(fresh_dir("sessions"));
    auto c = live.client();
    const auto table = synthetic_table(2, 300);
    const auto labeled = upload(c, ncd::write_records_csv(table));
    const auto unlabeled = upload(c, partially_labeled_csv(table, 0));

    const auto a = open_session(c, {{"dataset_id", labeled}, {"task", "HTN"}});
    CHECK(json_of(c.Get("/sessions/" + a))["status"] == "TRAINED");
    const auto u = open_session(c, {{"dataset_id", unlabeled}, {"task", "DM"}});
    CHECK(json_of(c.Get("/sessions/" + u))["status"] == "UNTRAINED");
    const auto untrained_batch = c.Get("/sessions/" + u + "/batch");
    CHECK(untrained_batch->status == 409);
    CHECK(json_of(untrained_batch)["error"].get<std::string>().find("set") != std::string::npos);

    CHECK(c.Post("/sessions", Json{{"dataset_id", "d42"}, {"task", "DM"}}.dump(), "application/json")->status ==
          404);
    CHECK(c.Post("/sessions", Json{{"dataset_id", labeled}, {"task", "XYZ"}}.dump(), "application/json")->status ==
          400);
    CHECK(c.Post("/sessions",
                 Json{{"dataset_id", labeled}, {"task", "DM"}, {"sampling", {{"method", "threshold"}, {"t", 0.3}}}}
                     .dump(),
                 "application/json")
              ->status == 400);
    CHECK(c.Post("/sessions", "{not json", "application/json")->status == 400);
    CHECK(c.Get("/sessions/s999")->status == 404);

    SUBCASE("seed labels train an untrained session") {
        Json decisions = Json::array();
        for (std::size_t i = 0; i < 40; ++i) {
            decisions.push_back({{"record_id", table.records[i].id},
                                 {"action", "set"},
                                 {"value", *table.labels[ncd::index_of(Task::DM)][i]}});
        }
        const auto reply = post_labels(c, u, {{"decisions", decisions}});
        CHECK(reply["set"] == 40);
        CHECK(reply["status"] == "TRAINED");
        CHECK(reply["model_unchanged"] == false);
        CHECK(c.Get("/sessions/" + u + "/batch")->status == 200);
    }

    SUBCASE("one-class seed labels leave the session untrained") {
        const auto reply = post_labels(
            c, u, {{"decisions", {{{"record_id", table.records[0].id}, {"action", "set"}, {"value", 0}}}}});
        CHECK(reply["model_unchanged"] == true);
        CHECK(reply["status"] == "UNTRAINED");
    }

    SUBCASE("sessions on one dataset are independent") {
        const auto b = open_session(c, {{"dataset_id", labeled}, {"task", "HTN"}});
        const auto before = c.Get("/sessions/" + b + "/export")->body;
        const int old = *table.labels[ncd::index_of(Task::HTN)][0];
        post_labels(c, a, {{"decisions", {{{"record_id", table.records[0].id}, {"action", "set"}, {"value", 1 - old}}}}});
        CHECK(c.Get("/sessions/" + b + "/export")->body == before);
        CHECK(c.Get("/sessions/" + a + "/export")->body != before);
    }
}

TEST_CASE("batches") {
    LiveServer live(fresh_dir("batch"));
    auto c = live.client();
    const auto table = synthetic_table(3, 600, 0.1);
    const auto ds = upload(c, partially_labeled_csv(table, 250));

    SUBCASE("threshold sampling and heat values") {
        const auto s = open_session(c, {{"dataset_id", ds},
                                        {"task", "DM"},
                                        {"sampling", {{"method", "threshold"}, {"t", 0.8}}},
                                        {"detect_mismatches", false}});
        const auto batch = json_of(c.Get("/sessions/" + s + "/batch"));
        REQUIRE(!batch["records"].empty());
        std::string ids;
        for (const auto& r : batch["records"]) {
            CHECK(r["is_mismatch"] == false);
            CHECK(r["confidence"].get<double>() < 0.8);
            CHECK(r["stored_label"].is_null());
            ids += (ids.empty() ? "" : ",") + r["record_id"].get<std::string>();
        }
        const auto expl = json_of(c.Get("/sessions/" + s + "/explanations?record_id=" + ids));
        REQUIRE(expl["records"].size() == batch["records"].size());
        for (std::size_t k = 0; k < expl["records"].size(); ++k) {
            const auto& wire = batch["records"][k];
            const auto& full = expl["records"][k];
            CHECK(wire["p"] == full["p"]);
            CHECK(wire["confidence"].get<double>() == std::max(full["p"].get<double>(), 1 - full["p"].get<double>()));
            for (std::size_t f = 0; f < full["features"].size(); ++f) {
                const double contribution = full["features"][f]["contribution"].get<double>();
                CHECK(wire["features"][f]["heat"].get<double>() ==
                      service::round_for_wire(ebm::logistic(contribution)));
                CHECK(wire["features"][f]["value"] == full["features"][f]["value"]);
            }
        }
    }

    SUBCASE("n-least sampling is ordered by confidence") {
        const auto s = open_session(c, {{"dataset_id", ds},
                                        {"task", "HTN"},
                                        {"sampling", {{"method", "n_least"}, {"n", 20}}},
                                        {"detect_mismatches", false}});
        const auto batch = json_of(c.Get("/sessions/" + s + "/batch"));
        REQUIRE(batch["records"].size() == 20);
        for (std::size_t k = 1; k < 20; ++k) {
            CHECK(batch["records"][k - 1]["confidence"].get<double>() <=
                  batch["records"][k]["confidence"].get<double>());
        }
        const auto& first = batch["records"][0];
        CHECK(first["fields"].contains("HbA1c"));
        CHECK(first["features"].size() == 5);
        for (const auto& f : first["features"]) {
            CHECK((f["value"].is_null() || f["value"].is_number()));
        }
    }

    SUBCASE("missing values go out as null") {
        const auto s = open_session(c, {{"dataset_id", ds}, {"task", "DM"}, {"detect_mismatches", false}});
        const auto all = json_of(c.Get("/sessions/" + s + "/explanations"));
        CHECK(all["records"].size() == 600);
        bool saw_null = false;
        for (const auto& r : all["records"]) {
            for (const auto& f : r["features"]) {
                saw_null = saw_null || f["value"].is_null();
            }
        }
        CHECK(saw_null);
        CHECK(c.Get("/sessions/" + s + "/explanations?record_id=nope")->status == 404);
    }
}

TEST_CASE("mismatch suggestions") {
    LiveServer live(fresh_dir("mismatch"));
    auto c = live.client();
    auto table = synthetic_table(6, 400);
    // a DM patient with keyword and ICD-10 evidence, stored as negative
    std::size_t target = table.records.size();
    for (std::size_t i = 0; i < table.records.size(); ++i) {
        const auto& r = table.records[i];
        if (*table.labels[0][i] == 1 && ncd::keyword_match(r.note, Task::DM).flag == 1 &&
            ncd::has_icd10(r, Task::DM)) {
            target = i;
            break;
        }
    }
    REQUIRE(target < table.records.size());
    table.labels[0][target] = 0;
    const auto ds = upload(c, partially_labeled_csv(table, 300));
    const auto s = open_session(c, {{"dataset_id", ds}, {"task", "DM"}});
    const auto batch = json_of(c.Get("/sessions/" + s + "/batch"));
    const std::string id = table.records[target].id;

    bool in_prefix = true;
    bool found = false;
    for (const auto& r : batch["records"]) {
        if (!r["is_mismatch"].get<bool>()) {
            in_prefix = false;
            continue;
        }
        CHECK(in_prefix);  // mismatches come first
        CHECK(r["suggested_label"] != r["stored_label"]);
        if (r["record_id"] == id) {
            found = true;
            CHECK(r["stored_label"] == 0);
            CHECK(r["suggested_label"] == 1);
            CHECK(r["features"][0]["heat"].get<double>() > 0.5);  // DM_key
            CHECK(r["features"][1]["heat"].get<double>() > 0.5);  // DM_ICD10
            CHECK(!r["highlights"].empty());
        }
    }
    CHECK(found);

    // keeping the suggestion corrects the label, and the record is not raised again
    const auto reply = post_labels(c, s, {{"decisions", {{{"record_id", id}, {"action", "keep"}}}}});
    CHECK(reply["kept"] == 1);
    const auto again = json_of(c.Get("/sessions/" + s + "/batch"));
    for (const auto& r : again["records"]) {
        CHECK(r["record_id"] != id);
    }
    const auto expl = json_of(c.Get("/sessions/" + s + "/explanations?record_id=" + id));
    CHECK(expl["records"][0]["stored_label"] == 1);
    CHECK(expl["records"][0]["provenance"] == "HUMAN");
}

TEST_CASE("label submission, export and restart") {
    const auto dir = fresh_dir("labels");
    const auto table = synthetic_table(4, 300, 0.1);
    const std::string csv = partially_labeled_csv(table, 120);
    std::string session_id;
    std::string export_after;
    std::string model_after;
    Json summary_after;
    std::vector<std::string> flipped_ids;
    {
        LiveServer live(dir);
        auto c = live.client();
        const auto ds = upload(c, csv);
        session_id = open_session(c, {{"dataset_id", ds}, {"task", "CKD"}, {"detect_mismatches", false}});
        const auto s = session_id;

        const auto initial = c.Get("/sessions/" + s + "/export")->body;
        CHECK(c.Get("/sessions/" + s + "/export")->body == initial);
        const auto imported = ncd::read_records_csv(initial);
        const auto original = ncd::read_records_csv(csv);
        CHECK(imported.records == original.records);
        CHECK(imported.labels == original.labels);
        CHECK(csv_lines(initial)[0].ends_with(",CKD_provenance"));

        // keep everything on the first batch
        auto batch = json_of(c.Get("/sessions/" + s + "/batch"));
        Json keep_all = Json::array();
        for (const auto& r : batch["records"]) {
            keep_all.push_back({{"record_id", r["record_id"]}, {"action", "keep"}});
        }
        const auto kept = post_labels(c, s, {{"request_id", "k1"}, {"decisions", keep_all}});
        CHECK(kept["kept"] == batch["records"].size());
        CHECK(kept["flipped"] == 0);
        CHECK(kept["model_version"] == 2);
        CHECK(kept["training"]["labeled"] == 120 + batch["records"].size());

        // flip two records of the next batch, then replay the same request
        batch = json_of(c.Get("/sessions/" + s + "/batch"));
        Json decisions = Json::array();
        std::map<std::string, int> expected;
        for (std::size_t k = 0; k < batch["records"].size(); ++k) {
            const auto& r = batch["records"][k];
            const auto id = r["record_id"].get<std::string>();
            const bool flip = k < 2;
            decisions.push_back({{"record_id", id}, {"action", flip ? "flip" : "keep"}});
            expected[id] = flip ? 1 - r["pseudo_label"].get<int>() : r["pseudo_label"].get<int>();
            if (flip) {
                flipped_ids.push_back(id);
            }
        }
        const auto before = c.Get("/sessions/" + s + "/export")->body;
        const auto first = post_labels(c, s, {{"request_id", "f1"}, {"decisions", decisions}});
        CHECK(first["flipped"] == 2);
        const auto after = c.Get("/sessions/" + s + "/export")->body;
        const auto replay = post_labels(c, s, {{"request_id", "f1"}, {"decisions", decisions}});
        CHECK(replay == first);
        CHECK(c.Get("/sessions/" + s + "/export")->body == after);

        // the diff between exports is exactly the decided records
        const auto old_lines = csv_lines(before);
        const auto new_lines = csv_lines(after);
        REQUIRE(old_lines.size() == new_lines.size());
        const auto exported = ncd::read_records_csv(after);
        std::size_t changed = 0;
        for (std::size_t i = 0; i < exported.records.size(); ++i) {
            const auto it = expected.find(exported.records[i].id);
            if (old_lines[i + 1] != new_lines[i + 1]) {
                ++changed;
                REQUIRE(it != expected.end());
            }
            if (it != expected.end()) {
                CHECK(exported.labels[ncd::index_of(Task::CKD)][i] == it->second);
                CHECK(new_lines[i + 1].ends_with(",HUMAN"));
            }
        }
        CHECK(changed == expected.size());

        // human labels never come back as candidates
        batch = json_of(c.Get("/sessions/" + s + "/batch"));
        for (const auto& r : batch["records"]) {
            CHECK(expected.count(r["record_id"].get<std::string>()) == 0);
        }

        // protocol violations change nothing
        const auto unpresented = table.records[0].id;
        const auto refused =
            post_labels(c, s, {{"decisions", {{{"record_id", unpresented}, {"action", "flip"}}}}}, 409);
        CHECK(refused.contains("error"));
        post_labels(c, s, {{"decisions", {{{"record_id", "nope"}, {"action", "keep"}}}}}, 400);
        post_labels(c, s, {{"decisions", {{{"record_id", unpresented}, {"action", "set"}, {"value", 7}}}}}, 400);
        post_labels(c, s, {{"decisions", Json::array()}}, 400);
        CHECK(c.Get("/sessions/" + s + "/export")->body == after);

        export_after = after;
        model_after = c.Get("/sessions/" + s + "/model")->body;
        summary_after = json_of(c.Get("/sessions/" + s));
    }

    LiveServer restarted(dir);
    auto c = restarted.client();
    const auto& s = session_id;
    CHECK(c.Get("/sessions/" + s + "/export")->body == export_after);
    CHECK(c.Get("/sessions/" + s + "/model")->body == model_after);
    CHECK(json_of(c.Get("/sessions/" + s)) == summary_after);
    // the presented batch and the request log survive too
    const auto pending = json_of(c.Get("/sessions/" + s + "/batch"));
    REQUIRE(!pending["records"].empty());
    const auto id = pending["records"][0]["record_id"];
    CHECK(post_labels(c, s, {{"decisions", {{{"record_id", id}, {"action", "keep"}}}}})["kept"] == 1);
    // a new upload gets a fresh id
    CHECK(upload(c, csv) == "d2");
}

TEST_CASE("exhausted pool") {
    LiveServer live(fresh_dir("empty"));
    auto c = live.client();
    ncd::RecordTable table;
    table.has_label_column[0] = true;
    for (int i = 0; i < 40; ++i) {
        ncd::RawRecord r;
        r.id = "R" + std::to_string(i);
        if (i < 10) {
            r.icd10_codes = {"E11.9"};
        }
        table.records.push_back(r);
        table.labels[0].push_back(i < 10 ? 1 : 0);
    }
    const auto ds = upload(c, ncd::write_records_csv(table));
    const auto s = open_session(c, {{"dataset_id", ds}, {"task", "DM"}});
    CHECK(c.Get("/sessions/" + s + "/batch")->status == 204);
}

TEST_CASE("deferred retraining") {
    LiveServer live(fresh_dir("deferred"));
    auto c = live.client();
    const auto table = synthetic_table(8, 200);
    const auto ds = upload(c, partially_labeled_csv(table, 100));
    const auto s = open_session(c, {{"dataset_id", ds}, {"task", "DLP"}, {"auto_retrain", false}});
    const auto batch = json_of(c.Get("/sessions/" + s + "/batch"));
    const auto id = batch["records"][0]["record_id"];
    const auto reply = post_labels(c, s, {{"decisions", {{{"record_id", id}, {"action", "keep"}}}}});
    CHECK(reply["model_unchanged"] == true);
    CHECK(reply["model_version"] == 1);
    const auto retrained = c.Post("/sessions/" + s + "/retrain");
    CHECK(retrained->status == 200);
    CHECK(json_of(retrained)["model_version"] == 2);
}

TEST_CASE("concurrent readers see one model per response") {
    LiveServer live(fresh_dir("concurrent"));
    auto setup = live.client();
    const auto table = synthetic_table(9, 300, 0.1);
    const auto ds = upload(setup, partially_labeled_csv(table, 60));
    const auto s = open_session(setup, {{"dataset_id", ds}, {"task", "DM"}, {"detect_mismatches", false}});

    std::atomic<bool> done = false;
    std::atomic<int> inconsistent = 0;
    std::thread reader([&] {
        auto c = live.client();
        while (!done) {
            const auto expl = json_of(c.Get("/sessions/" + s + "/explanations"));
            for (const auto& r : expl["records"]) {
                double sum = r["intercept"].get<double>();
                for (const auto& f : r["features"]) {
                    sum += f["contribution"].get<double>();
                }
                if (std::abs(sum - r["raw_score"].get<double>()) > 1e-9) {
                    ++inconsistent;
                }
            }
        }
    });
    auto c = live.client();
    for (int round = 0; round < 5; ++round) {
        const auto batch = json_of(c.Get("/sessions/" + s + "/batch"));
        Json decisions = Json::array();
        for (const auto& r : batch["records"]) {
            decisions.push_back({{"record_id", r["record_id"]}, {"action", "flip"}});
        }
        post_labels(c, s, {{"decisions", decisions}});
    }
    done = true;
    reader.join();
    CHECK(inconsistent == 0);
    CHECK(json_of(c.Get("/sessions/" + s))["model_version"] == 6);
}
