#include "doctest.h"

#include <filesystem>

#include "trajscope/analysis.hpp"
#include "trajscope/io.hpp"
#include "trajscope/rng.hpp"

using namespace trajscope;
using io::json;

namespace {

Dataset small_dataset() {
    Rng rng(1);
    Dataset data;
    for (int i = 0; i < 16; ++i) {
        std::vector<double> v(9);
        for (auto& x : v) x = rng.uniform();
        if (i >= 8) v[4] -= 0.5;
        data.push_back({"id" + std::to_string(i), i >= 8 ? Label::Artifact : Label::Natural, v,
                        "p" + std::to_string(i % 3)});
    }
    return data;
}

std::string schema_message(const auto& fn) {
    try {
        fn();
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SchemaError);
        return e.what();
    }
    FAIL("expected a schema error");
    return {};
}

}  // namespace

TEST_CASE("doubles format in shortest round-trip form") {
    CHECK(io::format_double(0.1) == "0.1");
    CHECK(io::format_double(2.0) == "2");
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.normal() * 1e3;
        CHECK(std::stod(io::format_double(v)) == v);
    }
}

TEST_CASE("trajectory round trip") {
    SimilarityTrajectory t;
    t.values = {0.1, 0.25, 1.0 / 3.0};
    t.total_steps = 4;
    t.metric_id = "rmse";
    t.orientation = Orientation::Dissimilarity;
    const auto back = io::trajectory_from_json(json::parse(io::to_json(t).dump()));
    CHECK(back.values == t.values);
    CHECK(back.total_steps == 4);
    CHECK(back.metric_id == "rmse");
    CHECK(back.orientation == Orientation::Dissimilarity);
}

TEST_CASE("dataset round trip") {
    const auto data = small_dataset();
    const auto back = io::dataset_from_jsonl(io::to_jsonl(data));
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(back[i].id == data[i].id);
        CHECK(back[i].label == data[i].label);
        CHECK(back[i].values == data[i].values);
        CHECK(back[i].group == data[i].group);
    }
    CHECK(io::to_jsonl(back) == io::to_jsonl(data));
}

TEST_CASE("classifier serialization is byte stable") {
    const auto data = small_dataset();
    PipelineConfig cfg;
    cfg.forest.n_trees = 15;
    cfg.forest.seed = 3;
    cfg.features.k = 3;
    const auto model = train_classifier(data, cfg);
    const std::string dumped = io::to_json(model).dump();
    const auto back = io::classifier_from_json(json::parse(dumped));
    CHECK(io::to_json(back).dump() == dumped);
    for (const auto& t : data) CHECK(back.probability(t.values) == model.probability(t.values));
}

TEST_CASE("aggregate round trip") {
    AggregateTrajectory a;
    a.mean = {0.3, 0.2};
    a.sem = {0.01, 0.02};
    a.snr = {1.5, 40.0};
    a.n_runs = 7;
    a.model_tag = "well-fit";
    const auto back = io::aggregate_from_json(json::parse(io::to_json(a, 0.5).dump()));
    CHECK(back.mean == a.mean);
    CHECK(back.sem == a.sem);
    CHECK(back.snr == a.snr);
    CHECK(back.n_runs == 7);
    CHECK(back.model_tag == "well-fit");
}

TEST_CASE("schema errors name the field") {
    json t = {{"schema", "simtraj/1"}, {"total_steps", 3}, {"metric_id", "m"}, {"orientation", "similarity"},
              {"values", {0.5, 0.4}}};
    CHECK_NOTHROW(io::trajectory_from_json(t));

    auto missing = t;
    missing.erase("values");
    CHECK(schema_message([&] { io::trajectory_from_json(missing); }).find("\"values\"") != std::string::npos);

    auto wrong = t;
    wrong["total_steps"] = "three";
    CHECK(schema_message([&] { io::trajectory_from_json(wrong); }).find("\"total_steps\"") != std::string::npos);

    auto other = t;
    other["schema"] = "rfmodel/1";
    CHECK(schema_message([&] { io::trajectory_from_json(other); }).find("\"schema\"") != std::string::npos);

    auto long_values = t;
    long_values["values"] = {0.1, 0.2, 0.3};
    CHECK(schema_message([&] { io::trajectory_from_json(long_values); }).find("\"values\"") != std::string::npos);

    CHECK(schema_message([] { io::dataset_from_jsonl("{\"id\":\"a\",\"label\":\"odd\",\"trajectory\":[1]}\n"); })
              .find("line 1") != std::string::npos);
    CHECK(schema_message([] { io::dataset_from_jsonl("{\"id\":\"a\",\"label\":\"natural\"}\n"); })
              .find("\"trajectory\"") != std::string::npos);
}

TEST_CASE("corrupt model files are rejected") {
    const auto data = small_dataset();
    PipelineConfig cfg;
    cfg.forest.n_trees = 3;
    cfg.features.k = 3;
    json j = io::to_json(train_classifier(data, cfg));
    auto broken = j;
    broken["trees"][0][0] = json::array({1, 2, 3});
    CHECK(schema_message([&] { io::classifier_from_json(broken); }).find("\"trees\"") != std::string::npos);
    auto fewer = j;
    fewer["trees"].erase(0);
    CHECK(schema_message([&] { io::classifier_from_json(fewer); }).find("\"trees\"") != std::string::npos);
    auto no_ref = j;
    no_ref.erase("knn_reference");
    CHECK(schema_message([&] { io::classifier_from_json(no_ref); }).find("knn_reference") != std::string::npos);
}

TEST_CASE("atomic writes leave no temporary behind") {
    const auto dir = std::filesystem::temp_directory_path() / "trajscope_io_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "out.json";
    io::write_atomic(path, "{\"a\":1}");
    CHECK(io::read_text(path) == "{\"a\":1}");
    CHECK(io::read_json(path)["a"] == 1);
    for (const auto& e : std::filesystem::directory_iterator(dir)) CHECK(e.path().extension() != ".tmp");
    CHECK_THROWS_AS(io::read_text(dir / "missing.json"), Error);
    std::filesystem::remove_all(dir);
}
