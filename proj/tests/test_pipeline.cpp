#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "support.hpp"
#include "thermoscope/data/manifest.hpp"
#include "thermoscope/data/synthetic.hpp"
#include "thermoscope/data/voc.hpp"
#include "thermoscope/error.hpp"
#include "thermoscope/eval/report.hpp"
#include "thermoscope/pipeline/pipelines.hpp"

using namespace thermoscope;
using namespace thermoscope::pipeline;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Toy corpus plus a tiny style checkpoint, built once for the whole file.
struct World {
    tstest::TempDir dir{"pipeline"};
    data::ToyCorpus corpus;
    fs::path checkpoint;

    World() {
        data::ToyCorpusOptions o;
        o.frames = 13;
        o.width = o.height = 64;
        o.train_fraction = 0.77;
        o.seed = 4;
        corpus = data::write_toy_corpus(dir / "toy", o);
        json j = base("style-train");
        j["datasets"] = {{"content", "toy/thermal.json"}, {"style", "toy/visible.json"}};
        j["output_dir"] = "style";
        const auto records = run_pipeline(PipelineConfig::from_json(j, dir.path()));
        checkpoint = records.at(0).artifacts.at("style_checkpoint");
    }

    json base(const std::string& pipeline) const {
        return {{"pipeline", pipeline},
                {"seed", 2},
                {"detector", {{"architecture", "reference-mini"}, {"backbone", "mini"}, {"epochs", 2},
                              {"input_size", 64}}},
                {"style",
                 {{"train", {{"epochs", 1}, {"batch_size", 4}, {"style_sizes", {32}}, {"content_size", 32},
                             {"generator", {{"channels", 8}, {"residual_blocks", 1}}}}},
                  {"stylize_size", 32}}}};
    }

    PipelineConfig config(json j, const std::string& out) const {
        j["output_dir"] = out;
        return PipelineConfig::from_json(j, dir.path());
    }
};

World& world() {
    static World w;
    return w;
}

int run_cli(const std::string& args) {
    const int status = std::system((std::string(THERMOSCOPE_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing is strict") {
    const json ok = {{"pipeline", "baseline"},
                     {"datasets", {{"train", "t.json"}}},
                     {"detector", {{"architecture", "reference-mini"}, {"backbone", "mini"}}}};
    const auto c = PipelineConfig::from_json(ok, "/base");
    CHECK(c.pipeline == PipelineKind::baseline);
    CHECK(*c.datasets.train == fs::path("/base/t.json"));
    CHECK(c.deterministic);

    for (const auto& bad : {json{{"pipeline", "baseline"}, {"learning_rate", 1}},
                            json{{"pipeline", "baseline"}, {"datasets", {{"thermal", "x"}}}},
                            json{{"pipeline", "baseline"}, {"detector", {{"architecture", "reference-mini"},
                                                                          {"backbone", "mini"}, {"momentum", 0.9}}}},
                            json{{"pipeline", "baseline"}, {"detector", {{"architecture", "reference-mini"}}}},
                            json{{"pipeline", "nope"}}, json{{"seed", 1}},
                            json{{"pipeline", "baseline"}, {"seed", "one"}},
                            json{{"pipeline", "baseline"}, {"evaluation", {{"interpolation", "coco"}}}}}) {
        CAPTURE(bad.dump());
        CHECK_THROWS_AS(PipelineConfig::from_json(bad), ConfigError);
    }
    CHECK(parse_pipeline("sanity-swap") == PipelineKind::sanity_swap);
    CHECK(to_string(PipelineKind::weak_label) == "weak-label");
}

TEST_CASE("launch checks") {
    tstest::TempDir dir("launch");
    auto c = PipelineConfig::from_json({{"pipeline", "odsc"},
                                        {"datasets", {{"train", "missing.json"}}},
                                        {"detector", {{"architecture", "reference-mini"}, {"backbone", "mini"}}}},
                                       dir.path());
    CHECK_THROWS_AS(c.check_launch(), ConfigError);  // missing file
    std::ofstream(dir / "missing.json") << "{}";
    CHECK_THROWS_AS(c.check_launch(), ConfigError);  // no style source
    c.datasets.style = dir / "missing.json";
    CHECK_THROWS_AS(c.check_launch(), ConfigError);  // no style checkpoint or training section
    c.style.train = json::object();
    CHECK_NOTHROW(c.check_launch());
}

TEST_CASE("hashes and split hygiene") {
    CHECK(git_blob_hash_bytes("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
    CHECK(git_blob_hash_bytes("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    const auto ts = utc_timestamp();
    CHECK(ts.size() == 20);
    CHECK(ts.back() == 'Z');

    data::LabeledImage a{"a", "a.png", 10, 10, data::Spectrum::thermal, {}, "f1"};
    data::LabeledImage b{"b", "b.png", 10, 10, data::Spectrum::visible, {}, "f1"};
    data::LabeledImage c{"c", "c.png", 10, 10, data::Spectrum::visible, {}, "f2"};
    CHECK_NOTHROW(check_disjoint({&a}, {&c}));
    CHECK_THROWS_AS(check_disjoint({&a}, {&b}), ValidationError);
    CHECK_THROWS_AS(check_disjoint({&a}, {&a}), ValidationError);
}

TEST_CASE("baseline run is reproducible and keeps splits apart") {
    auto& w = world();
    json j = w.base("baseline");
    j["datasets"] = {{"train", "toy/thermal.json"}};
    const auto first = run_pipeline(w.config(j, "base1"));
    const auto second = run_pipeline(w.config(j, "base2"));
    REQUIRE(first.size() == 1);
    const auto& r = first[0];
    REQUIRE(r.report.has_value());
    CHECK(slurp(w.dir / "base1/report.json") == slurp(w.dir / "base2/report.json"));
    CHECK(eval::load_report(w.dir / "base1/report.json") == *r.report);
    CHECK_NOTHROW(r.check_artifacts());

    const auto val = w.corpus.thermal.subset(data::SplitRole::val);
    CHECK(r.eval_frames.size() == val.records.size());
    CHECK(r.input_hashes.contains("datasets.train"));
    CHECK(json::parse(slurp(w.dir / "base1/run_record.json")).at("config").at("pipeline") == "baseline");
    CHECK_FALSE(summarize(first).empty());

    // An evaluation manifest that overlaps training is refused.
    auto leaky = w.corpus.thermal.subset(data::SplitRole::train);
    for (auto& [id, role] : leaky.split) role = data::SplitRole::val;
    data::save_manifest(w.dir / "leaky.json", leaky);
    j["datasets"]["eval"] = "leaky.json";
    CHECK_THROWS_AS(run_pipeline(w.config(j, "base3")), ValidationError);

    // No validation split.
    auto train_only = w.corpus.thermal.subset(data::SplitRole::train);
    data::save_manifest(w.dir / "train_only.json", train_only);
    j["datasets"] = {{"train", "train_only.json"}};
    CHECK_THROWS_AS(run_pipeline(w.config(j, "base4")), ConfigError);

    // Class outside the manifest.
    j["datasets"] = {{"train", "toy/thermal.json"}};
    j["detector"]["class_set"] = {"dog"};
    CHECK_THROWS_AS(run_pipeline(w.config(j, "base5")), ConfigError);
}

TEST_CASE("odsc run leaves annotations untouched") {
    auto& w = world();
    json j = w.base("odsc");
    j["datasets"] = {{"train", "toy/thermal.json"}, {"style", "toy/visible.json"}};
    j["style"]["checkpoint"] = w.checkpoint.string();
    const auto rec = run_pipeline(w.config(j, "odsc")).at(0);
    REQUIRE(rec.report.has_value());
    const auto styled = data::load_manifest(rec.artifacts.at("styled_train_manifest"));
    const auto train = w.corpus.thermal.subset(data::SplitRole::train);
    REQUIRE(styled.records.size() == train.records.size());
    for (const auto& r : styled.records) {
        const auto* src = train.find(r.image_id);
        REQUIRE(src != nullptr);
        CHECK(r.annotations == src->annotations);
        CHECK(r.width == src->width);
        CHECK(r.path != src->path);
    }
}

TEST_CASE("cdmt requires paired frames") {
    auto& w = world();
    json j = w.base("cdmt");
    j["datasets"] = {{"paired", "toy/thermal.json"}};
    j["style"]["checkpoint"] = w.checkpoint.string();
    CHECK_THROWS_AS(run_pipeline(w.config(j, "cdmt_bad")), ConfigError);
}

TEST_CASE("handle-driven pipelines") {
    auto& w = world();
    // Trained once; doctest re-enters the test case for every subcase.
    static const fs::path handle = [&] {
        json j = w.base("baseline");
        j["datasets"] = {{"train", "toy/thermal.json"}};
        return run_pipeline(w.config(j, "for_handle")).at(0).artifacts.at("detector");
    }();

    SUBCASE("eval from a handle and from a detections file agree") {
        json e = {{"pipeline", "eval"}, {"datasets", {{"eval", "toy/thermal.json"}}}, {"detector_handle", handle}};
        const auto from_handle = run_pipeline(w.config(e, "eval_h")).at(0);
        e.erase("detector_handle");
        e["evaluation"] = {{"detections", (w.dir / "eval_h/detections.jsonl").string()}};
        const auto from_file = run_pipeline(w.config(e, "eval_f")).at(0);
        CHECK(from_handle.report->map == from_file.report->map);
        CHECK(from_handle.report->classes == from_file.report->classes);
    }
    SUBCASE("sanity swap") {
        json s = {{"pipeline", "sanity-swap"},
                  {"datasets", {{"train", "toy/thermal.json"}, {"style", "toy/visible.json"}}},
                  {"detector_handle", handle},
                  {"style", {{"checkpoint", w.checkpoint}, {"stylize_size", 32}}}};
        const auto rec = run_pipeline(w.config(s, "swap")).at(0);
        CHECK(rec.report.has_value());
    }
    SUBCASE("weak labels re-parse as VOC") {
        fs::create_directories(w.dir / "unlabeled");
        const auto val = w.corpus.thermal.subset(data::SplitRole::val);
        for (int i = 0; i < 5; ++i) {
            const auto& r = w.corpus.thermal.records[static_cast<std::size_t>(i)];
            fs::copy_file(r.path, w.dir / "unlabeled" / ("frame " + std::to_string(i) + ".png"));
        }
        data::save_manifest(w.dir / "probe.json", val);
        json s = {{"pipeline", "weak-label"},
                  {"datasets", {{"unlabeled_dir", "unlabeled"}, {"probe", "probe.json"}}},
                  {"detector_handle", handle},
                  {"weak_label", {{"score_threshold", 0.05}, {"style_reference", w.corpus.visible.records[0].path}}},
                  {"style", {{"checkpoint", w.checkpoint}, {"stylize_size", 32}}}};
        const auto rec = run_pipeline(w.config(s, "weak")).at(0);
        int xml = 0;
        for (const auto& entry : fs::directory_iterator(rec.artifacts.at("pseudo_labels"))) {
            const auto parsed = data::read_voc_xml(entry.path());
            CHECK(parsed.width == 64);
            for (const auto& a : parsed.annotations) CHECK(a.box.within(64, 64));
            ++xml;
        }
        CHECK(xml == 5);
        CHECK(rec.extra.at("weak_label_report").contains("accuracy"));
    }
    SUBCASE("bench") {
        json s = {{"pipeline", "bench"},
                  {"datasets", {{"eval", "toy/thermal.json"}}},
                  {"detector_handle", handle},
                  {"bench", {{"warmup", 1}, {"runs", 2}}}};
        const auto rec = run_pipeline(w.config(s, "bench")).at(0);
        CHECK(rec.extra.at("fps").at("mean_fps").get<double>() > 0);
    }
}

TEST_CASE("command line exit codes") {
    auto& w = world();
    const auto write = [&](const std::string& name, const json& j) {
        std::ofstream(w.dir / name) << j.dump();
        return (w.dir / name).string();
    };
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("") == 2);
    CHECK(run_cli("baseline") == 2);
    CHECK(run_cli("baseline --config /nonexistent.json") == 2);

    json unknown = w.base("baseline");
    unknown["datasets"] = {{"train", "toy/thermal.json"}};
    unknown["colour"] = "red";
    CHECK(run_cli("baseline --config " + write("unknown.json", unknown)) == 2);
    CHECK(run_cli("odsc --config " + write("wrong_kind.json", w.base("baseline"))) == 2);

    std::ofstream(w.dir / "broken.jsonl") << "{not json\n";
    const json broken = {{"pipeline", "eval"},
                         {"datasets", {{"eval", "toy/thermal.json"}}},
                         {"evaluation", {{"detections", "broken.jsonl"}}}};
    CHECK(run_cli("eval --config " + write("broken.json", broken) + " --out " + (w.dir / "cli_broken").string()) == 1);

    std::ofstream(w.dir / "empty.jsonl") << "";
    const json empty = {{"pipeline", "eval"},
                        {"datasets", {{"eval", "toy/thermal.json"}}},
                        {"evaluation", {{"detections", "empty.jsonl"}}}};
    CHECK(run_cli("eval --config " + write("empty.json", empty) + " --seed 3 --deterministic --out " +
                  (w.dir / "cli_empty").string()) == 0);
    CHECK(fs::exists(w.dir / "cli_empty/report.json"));
    CHECK(run_cli("toy-corpus --out " + (w.dir / "cli_toy").string() + " --frames 3 --size 32") == 0);
    CHECK(fs::exists(w.dir / "cli_toy/paired.json"));
}
