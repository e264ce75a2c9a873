#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "cli_app.hpp"
#include "oracles.hpp"

using namespace bbs;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code;
    std::string out, err;
};

CliResult invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "bbs_cli");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path workdir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "bbs_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST(CliMatch, PlantedCropFound) {
    fs::path dir = workdir("match");
    FeatureGrid img = oracle::random_grid(36, 40, 3, 5);
    save_image(img, dir / "image.ppm");
    save_image(img.crop(9, 12, 12, 12), dir / "templ.ppm");
    CliResult r = invoke({"match", "--template", (dir / "templ.ppm").string(), "--image", (dir / "image.ppm").string(), "--out",
                 (dir / "out").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    auto doc = nlohmann::json::parse(read_file(dir / "out/matches.json"));
    EXPECT_EQ(doc["matches"][0]["box"]["x"], 12);
    EXPECT_EQ(doc["matches"][0]["box"]["y"], 9);
    EXPECT_EQ(doc["matches"][0]["score"], 1.0);
    EXPECT_TRUE(fs::exists(dir / "out/likelihood.bfm"));
    EXPECT_TRUE(fs::exists(dir / "out/likelihood.pgm"));
    FeatureGrid map = load_feature_grid(dir / "out/likelihood.bfm");
    EXPECT_EQ(map.channels(), 1u);
}

TEST(CliMatch, CachedAndNaiveWriteIdenticalJson) {
    fs::path dir = workdir("match_algos");
    FeatureGrid img = oracle::random_grid(30, 30, 3, 6);
    save_image(img, dir / "image.ppm");
    save_image(img.crop(3, 6, 9, 9), dir / "templ.ppm");
    std::vector<std::string> base = {"match", "--template", (dir / "templ.ppm").string(), "--image",
                                     (dir / "image.ppm").string(), "--kmodes", "3"};
    auto with = [&](const std::string& algo, const std::string& out) {
        auto a = base;
        a.insert(a.end(), {"--algorithm", algo, "--out", (dir / out).string()});
        return invoke(a);
    };
    ASSERT_EQ(with("naive", "n").code, 0);
    ASSERT_EQ(with("cached", "c").code, 0);
    EXPECT_EQ(read_file(dir / "n/matches.json"), read_file(dir / "c/matches.json"));
    EXPECT_EQ(read_file(dir / "n/likelihood.bfm"), read_file(dir / "c/likelihood.bfm"));
}

TEST(CliMatch, TemplateBoxCrop) {
    fs::path dir = workdir("match_box");
    FeatureGrid img = oracle::random_grid(30, 30, 3, 7);
    save_image(img, dir / "image.ppm");
    CliResult r = invoke({"match", "--template", (dir / "image.ppm").string(), "--template-box", "6,3,9,9", "--image",
                 (dir / "image.ppm").string(), "--out", (dir / "out").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    auto doc = nlohmann::json::parse(read_file(dir / "out/matches.json"));
    EXPECT_EQ(doc["matches"][0]["box"]["x"], 6);
    EXPECT_EQ(doc["matches"][0]["box"]["y"], 3);
}

TEST(CliMatch, FeatureGridMeasure) {
    fs::path dir = workdir("match_feat");
    FeatureGrid img = oracle::random_grid(16, 16, 8, 8);
    save_feature_grid(img, dir / "image.bfm");
    save_feature_grid(img.crop(5, 2, 6, 6), dir / "templ.bfm");
    CliResult r = invoke({"match", "--measure", "feature-grid", "--template", (dir / "templ.bfm").string(), "--image",
                 (dir / "image.bfm").string(), "--out", (dir / "out").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    auto doc = nlohmann::json::parse(read_file(dir / "out/matches.json"));
    EXPECT_EQ(doc["matches"][0]["box"]["x"], 2);
    EXPECT_EQ(doc["matches"][0]["box"]["y"], 5);
    EXPECT_EQ(doc["window_normalization"], true);
    CliResult cached = invoke({"match", "--measure", "feature-grid", "--algorithm", "cached", "--template",
                      (dir / "templ.bfm").string(), "--image", (dir / "image.bfm").string(), "--out",
                      (dir / "out2").string()});
    EXPECT_EQ(cached.code, 2);
}

TEST(CliMatch, ExitCodes) {
    fs::path dir = workdir("match_errors");
    save_image(oracle::random_grid(8, 8, 3, 1), dir / "small.ppm");
    save_image(oracle::random_grid(12, 12, 3, 2), dir / "big.ppm");
    CliResult missing = invoke({"match", "--template", (dir / "nope.ppm").string(), "--image", (dir / "big.ppm").string(),
                       "--out", (dir / "o").string()});
    EXPECT_EQ(missing.code, 3);
    EXPECT_NE(missing.err.find((dir / "nope.ppm").string()), std::string::npos);
    CliResult dims = invoke({"match", "--template", (dir / "big.ppm").string(), "--image", (dir / "small.ppm").string(),
                    "--out", (dir / "o").string()});
    EXPECT_EQ(dims.code, 4);
    EXPECT_FALSE(fs::exists(dir / "o/matches.json"));
    EXPECT_EQ(invoke({"match", "--template", "a"}).code, 2);
    EXPECT_EQ(invoke({"match", "--template", "a", "--image", "b", "--measure", "lab"}).code, 2);
    EXPECT_EQ(invoke({"match", "--template", "a", "--image", "b", "--algorithm", "fast"}).code, 2);
    EXPECT_EQ(invoke({"match", "--template", "a", "--image", "b", "--kmodes", "0"}).code, 2);
    EXPECT_EQ(invoke({"frobnicate"}).code, 2);
    EXPECT_EQ(invoke({}).code, 2);
}

TEST(CliSimulate, DeterministicCsv) {
    fs::path dir = workdir("simulate");
    std::vector<std::string> args = {"simulate", "--experiment", "fig4", "--seed", "3", "--samples", "2000",
                                     "--mus", "0,2", "--sigmas", "1,2"};
    auto a = args, b = args;
    a.insert(a.end(), {"--out", (dir / "a.csv").string()});
    b.insert(b.end(), {"--out", (dir / "b.csv").string()});
    ASSERT_EQ(invoke(a).code, 0);
    ASSERT_EQ(invoke(b).code, 0);
    std::string csv = read_file(dir / "a.csv");
    EXPECT_EQ(csv, read_file(dir / "b.csv"));
    std::istringstream lines(csv);
    std::string header, row;
    std::getline(lines, header);
    EXPECT_EQ(header, "experiment,seed,rng,n,samples,mu,sigma,e_bbp,e_bbs,e_bbs_stderr");
    int rows = 0;
    while (std::getline(lines, row)) {
        EXPECT_EQ(row.rfind(std::string("fig4,3,") + stats::kRngName + ",", 0), 0u);
        ++rows;
    }
    EXPECT_EQ(rows, 4);
}

TEST(CliSimulate, OtherExperiments) {
    fs::path dir = workdir("simulate_more");
    CliResult ssd = invoke({"simulate", "--experiment", "ssd_sad", "--samples", "1000", "--mus", "0", "--sigmas", "1", "--out",
                   (dir / "s.csv").string()});
    ASSERT_EQ(ssd.code, 0) << ssd.err;
    EXPECT_NE(read_file(dir / "s.csv").find(",2,"), std::string::npos);
    CliResult fig5 = invoke({"simulate", "--experiment", "fig5", "--n", "20", "--trials", "5", "--out", (dir / "f.csv").string()});
    ASSERT_EQ(fig5.code, 0) << fig5.err;
    CliResult th = invoke({"simulate", "--experiment", "theorem1", "--n", "50", "--trials", "5", "--out",
                  (dir / "t.csv").string()});
    ASSERT_EQ(th.code, 0) << th.err;
    EXPECT_NE(read_file(dir / "t.csv").find("abs_diff"), std::string::npos);
    EXPECT_NE(th.out.find("|diff|"), std::string::npos);
    EXPECT_EQ(invoke({"simulate", "--experiment", "fig9"}).code, 2);
}

TEST(CliEval, BundledSyntheticSet) {
    fs::path dir = workdir("eval");
    CliResult r = invoke({"eval", "--annotations", (fs::path(BBS_SOURCE_DIR) / "data/synthetic/annotations.jsonl").string(),
                 "--methods", "bbs,ssd", "--kmodes", "3", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    auto summary = nlohmann::json::parse(read_file(dir / "summary.json"));
    EXPECT_EQ(summary["methods"]["bbs"]["map_top1"], 1.0);
    EXPECT_TRUE(fs::exists(dir / "report.csv"));
}

TEST(CliEval, UnknownMethod) {
    CliResult r = invoke({"eval", "--annotations", "x.jsonl", "--methods", "bbs,emd"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("bbs, ssd, sad, ncc, hm, bds"), std::string::npos);
}

TEST(CliEval, MissingAnnotations) {
    EXPECT_EQ(invoke({"eval", "--annotations", "/nonexistent/x.jsonl", "--out", workdir("eval_missing").string()}).code, 3);
}

TEST(CliBench, TimingTable) {
    fs::path dir = workdir("bench");
    CliResult r = invoke({"bench", "--sizes", "24x24:8x8", "--repeats", "1", "--out", (dir / "b.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::string csv = read_file(dir / "b.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "image,template,k,repeats,naive_ms,cached_ms,speedup,identical");
    EXPECT_NE(csv.find(",yes"), std::string::npos);
    EXPECT_EQ(invoke({"bench", "--sizes", "24x24"}).code, 2);
}

TEST(CliThreads, EnvironmentDefault) {
    setenv("BBS_THREADS", "3", 1);
    EXPECT_EQ(cli::default_threads(), 3u);
    setenv("BBS_THREADS", "zero", 1);
    EXPECT_EQ(cli::default_threads(), 1u);
    unsetenv("BBS_THREADS");
    EXPECT_EQ(cli::default_threads(), 1u);
}
